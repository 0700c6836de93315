"""Brute-force ground truth for the decision procedures.

Everything here trades completeness for trust: bounded enumeration in a
fixed lexicographic order, exact equivalence tests through canonical
contexts, and head-on image comparison. The chase-based procedures are
checked against these on small domains; a disagreement means a bug, never a
judgment call.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .chase import rules_satisfied
from .homomorphism import enumerate_matches, query_holds
from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DInstance,
    DSchema,
    DView,
    Instance,
    RelationSymbol,
    Rule,
    Term,
    Variable,
    canon_constant,
    substitute_atoms,
    atoms_variables,
)
from .canonical import canonical_context, canonical_view
from .ra import padded_domain, view_image


def domain_constants(domain_size: int) -> tuple[Constant, ...]:
    return tuple(Constant(f"d{i}") for i in range(1, domain_size + 1))


def _relation_subsets(
    rel: RelationSymbol, domain: Sequence[Constant], max_facts: int
) -> list[tuple[Atom, ...]]:
    tuples = [
        Atom(rel, args)
        for args in itertools.product(domain, repeat=rel.arity)]
    out: list[tuple[Atom, ...]] = []
    for size in range(min(max_facts, len(tuples)) + 1):
        out.extend(itertools.combinations(tuples, size))
    return out


def enumerate_instances(
    relations: Sequence[RelationSymbol],
    domain_size: int,
    max_facts: int,
    rules: Sequence[Rule] = (),
) -> Iterator[Instance]:
    """All instances over domain {d1..dk} with at most ``max_facts`` facts
    per relation, satisfying the rules, lexicographically."""
    domain = domain_constants(domain_size)
    pools = [_relation_subsets(r, domain, max_facts) for r in relations]
    for chosen in itertools.product(*pools):
        inst = Instance.of([f for group in chosen for f in group])
        if rules and not rules_satisfied(inst, rules):
            continue
        yield inst


def enumerate_dinstances(
    schema: DSchema,
    domain_size: int,
    max_facts: int,
    rules: Sequence[Rule] = (),
) -> Iterator[DInstance]:
    """Replication-consistent d-instances: one content choice per relation
    symbol, placed at every owning source."""
    for inst in enumerate_instances(schema.relations, domain_size, max_facts):
        if rules and not rules_satisfied(inst, rules):
            continue
        yield DInstance.from_facts(schema, inst.facts)


def enumerate_source_instances(
    schema: DSchema,
    source: str,
    domain_size: int,
    max_facts: int,
    rules: Sequence[Rule] = (),
) -> Iterator[Instance]:
    return enumerate_instances(
        schema.relations_of(source), domain_size, max_facts, rules)


# ---------------------------------------------------------------------------
# exact (source, q)-equivalence


@dataclass(frozen=True)
class SQEquivalence:
    equivalent: bool
    witness_side: Optional[int] = None
    witness_match: Optional[tuple[tuple[Variable, Term], ...]] = None
    witness_context: Optional[Instance] = None


def sq_equivalence_exact(
    i1: Instance,
    i2: Instance,
    q: ConjunctiveQuery,
    source: str,
    schema: DSchema,
) -> SQEquivalence:
    """Exact decision by canonical contexts.

    Two source instances are inequivalent exactly when some match of the
    canonical view on one side yields a canonical context on which q fails
    with the other side; no other contexts can distinguish them, so the
    finitely many canonical ones decide.
    """
    canonv = canonical_view(q, schema, source).definition
    ctx = canonical_context(q, schema, source)
    frontier = canonv.free_vars
    for side, a, b in ((1, i1, i2), (2, i2, i1)):
        for row in enumerate_matches(canonv, a):
            sigma = dict(zip(frontier, row))
            context = _context_instance(ctx, sigma)
            if not query_holds(q, b.union(context)):
                return SQEquivalence(
                    False, side, tuple(zip(frontier, row)), context)
    return SQEquivalence(True)


def _context_instance(ctx: ConjunctiveQuery, sigma: dict) -> Instance:
    bound = {v: sigma[v] for v in ctx.free_vars}
    atoms = substitute_atoms(bound, ctx.atoms)
    frozen = {v: canon_constant(v) for v in atoms_variables(atoms)}
    return Instance.of(substitute_atoms(frozen, atoms))


# ---------------------------------------------------------------------------
# view agreement


@dataclass(frozen=True)
class Disagreement:
    view: str
    rows1: frozenset
    rows2: frozenset


@dataclass(frozen=True)
class AgreementReport:
    agree: bool
    first_disagreement: Optional[Disagreement] = None


def views_agree(dview: DView, d1: DInstance, d2: DInstance) -> AgreementReport:
    """Per-view image equality; unsafe definitions are compared under the
    padded evaluation domain of the two local instances."""
    for view in dview.views:
        i1 = d1.local(view.source)
        i2 = d2.local(view.source)
        domain = padded_domain([i1, i2], view.arity)
        rows1 = view_image(view, i1, domain)
        rows2 = view_image(view, i2, domain)
        if rows1 != rows2:
            return AgreementReport(False, Disagreement(view.name, rows1, rows2))
    return AgreementReport(True)


# ---------------------------------------------------------------------------
# determinacy refutation


@dataclass(frozen=True)
class Refutation:
    found: bool
    d1: Optional[DInstance] = None
    d2: Optional[DInstance] = None
    answers1: Optional[frozenset] = None
    answers2: Optional[frozenset] = None


def refute_determinacy(
    q: ConjunctiveQuery,
    dview: DView,
    schema: DSchema,
    domain_size: int,
    max_facts: int,
    rules: Sequence[Rule] = (),
) -> Refutation:
    """First d-instance pair (in enumeration order) with equal view images
    and different q answers, if any exists within the bound.

    With conjunctive views the image is a pure key, so a single pass with a
    key table suffices. Any unsafe view forces quadratic pairwise
    comparison because its padded image depends on both instances at once.
    """
    all_cq = all(
        isinstance(v.definition, ConjunctiveQuery) for v in dview.views)
    stream = enumerate_dinstances(schema, domain_size, max_facts, rules)
    if all_cq:
        seen: dict = {}
        for d in stream:
            key = tuple(
                frozenset(enumerate_matches(v.definition, d.local(v.source)))
                for v in dview.views)
            answers = frozenset(enumerate_matches(q, d.merged()))
            if key not in seen:
                seen[key] = (d, answers)
                continue
            first, first_answers = seen[key]
            if first_answers != answers:
                return Refutation(True, first, d, first_answers, answers)
        return Refutation(False)
    candidates = list(stream)
    for i, d1 in enumerate(candidates):
        answers1 = frozenset(enumerate_matches(q, d1.merged()))
        for d2 in candidates[i + 1:]:
            answers2 = frozenset(enumerate_matches(q, d2.merged()))
            if answers1 == answers2:
                continue
            if views_agree(dview, d1, d2).agree:
                return Refutation(True, d1, d2, answers1, answers2)
    return Refutation(False)
