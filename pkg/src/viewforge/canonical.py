"""Canonical views, canonical contexts, and source-join variables.

For a query q and a source s, the canonical view keeps exactly the atoms of
q that s can see (local and replicated-into-s relations) and exposes the
query's free variables on s plus every source-join variable; the canonical
context is the rest of the query, exposing the source-join variables that
occur in it. An atom over a replicated relation counts as visible at every
member source, so its variables join all of them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    Atom,
    ConjunctiveQuery,
    DSchema,
    DView,
    InputError,
    Variable,
    View,
    atoms_variables,
)


@dataclass(frozen=True)
class SourceVars:
    source: str
    svars: tuple[Variable, ...]
    sjvars: tuple[Variable, ...]


def _var_sources(q: ConjunctiveQuery) -> dict[Variable, set[str]]:
    owner: dict[Variable, set[str]] = {}
    for atom in q.atoms:
        for v in atom.variables():
            owner.setdefault(v, set()).update(atom.relation.sources)
    return owner


def source_vars(q: ConjunctiveQuery, schema: DSchema) -> tuple[SourceVars, ...]:
    """Per-source variable report, variables in first-occurrence order."""
    owner = _var_sources(q)
    order = q.variables()
    out = []
    for s in schema.sources:
        sv = tuple(v for v in order if s in owner.get(v, ()))
        sj = tuple(v for v in sv if len(owner[v]) >= 2)
        out.append(SourceVars(s, sv, sj))
    return tuple(out)


def sjvars(q: ConjunctiveQuery, schema: DSchema, source: str) -> tuple[Variable, ...]:
    for report in source_vars(q, schema):
        if report.source == source:
            return report.sjvars
    raise InputError(f"unknown source {source!r}")


def _atoms_of_source(q: ConjunctiveQuery, source: str) -> tuple[Atom, ...]:
    return tuple(a for a in q.atoms if source in a.relation.sources)


def canonical_view(q: ConjunctiveQuery, schema: DSchema, source: str) -> View:
    """The minimally informative useful view for q at one source."""
    if source not in schema.sources:
        raise InputError(f"unknown source {source!r}")
    atoms = _atoms_of_source(q, source)
    if not atoms:
        raise InputError(f"query {q.name} has no atoms visible at {source}")
    visible = set(atoms_variables(atoms))
    join = set(sjvars(q, schema, source))
    keep = {v for v in q.free_vars if v in visible} | join
    frees = tuple(v for v in q.variables() if v in keep)
    return View(
        name=f"canonv_{source}",
        source=source,
        definition=ConjunctiveQuery(f"canonv_{source}", frees, atoms))


def canonical_context(
    q: ConjunctiveQuery, schema: DSchema, source: str
) -> ConjunctiveQuery:
    """Everything q says about the other sources, exposed at the join
    variables. Empty-bodied (always true) when q lives on one source."""
    if source not in schema.sources:
        raise InputError(f"unknown source {source!r}")
    atoms = tuple(a for a in q.atoms if source not in a.relation.sources)
    present = set(atoms_variables(atoms))
    frees = tuple(v for v in sjvars(q, schema, source) if v in present)
    return ConjunctiveQuery(f"ctx_{source}", frees, atoms)


def canonical_dview(q: ConjunctiveQuery, schema: DSchema) -> DView:
    """One canonical view per source that sees at least one atom of q."""
    views = []
    for s in schema.sources:
        if _atoms_of_source(q, s):
            views.append(canonical_view(q, schema, s))
    if not views:
        raise InputError(f"query {q.name} has no atoms")
    return DView(tuple(views))


def is_monadic_frontier(q: ConjunctiveQuery, schema: DSchema) -> bool:
    """At most one source-join variable per source.

    For such queries the canonical views are already as uninformative as any
    useful view family can be, so a disclosure verdict for the CQ class
    settles every class.
    """
    return all(len(r.sjvars) <= 1 for r in source_vars(q, schema))
