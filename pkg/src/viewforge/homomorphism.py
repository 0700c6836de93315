"""Homomorphism search between atom sets and instances.

A homomorphism maps variables and labeled nulls of the source onto terms of
the target so that every source atom lands on a target fact. Constants and
pair terms are rigid (mapped to themselves); ``pinned`` entries fix the image
of otherwise-mappable terms up front.

The search is plain backtracking over the source atoms in the order given,
with candidate facts per relation in canonical term order, so results are
deterministic for equal inputs. Query-to-query homomorphisms go through the
canonical database of the target with the source's free variables pinned to
their frozen constants.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Optional, Sequence

from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    Instance,
    LabeledNull,
    Pair,
    Term,
    Variable,
    atom_key,
    build_canondb,
    canondb_pinning,
    term_key,
)

Assignment = dict[Term, Term]


def _mappable(t: Term) -> bool:
    return isinstance(t, (Variable, LabeledNull))


def _relation_index(dst: Instance) -> dict[str, list[Atom]]:
    index: dict[str, list[Atom]] = {}
    for f in dst.facts:
        index.setdefault(f.relation.name, []).append(f)
    for facts in index.values():
        facts.sort(key=atom_key)
    return index


def all_homomorphisms(
    src_atoms: Sequence[Atom],
    dst: Instance,
    pinned: Optional[Mapping[Term, Term]] = None,
) -> Iterator[Assignment]:
    """Yield every homomorphism, in deterministic order.

    Yielded assignments cover exactly the mappable terms of the source
    (pinned entries included); rigid terms are left implicit.
    """
    index = _relation_index(dst)
    base: Assignment = {}
    for t, img in (pinned or {}).items():
        if _mappable(t):
            base[t] = img
        elif t != img:
            return  # a rigid term pinned away from itself: unsatisfiable

    atoms = list(src_atoms)

    def extend(i: int, asg: Assignment) -> Iterator[Assignment]:
        if i == len(atoms):
            yield dict(asg)
            return
        atom = atoms[i]
        for fact in index.get(atom.relation.name, ()):
            added: list[Term] = []
            ok = True
            for s_arg, d_arg in zip(atom.args, fact.args):
                if _mappable(s_arg):
                    bound = asg.get(s_arg)
                    if bound is None:
                        asg[s_arg] = d_arg
                        added.append(s_arg)
                    elif bound != d_arg:
                        ok = False
                        break
                elif s_arg != d_arg:
                    ok = False
                    break
            if ok:
                yield from extend(i + 1, asg)
            for t in added:
                del asg[t]

    yield from extend(0, base)


def find_homomorphism(
    src_atoms: Sequence[Atom],
    dst: Instance,
    pinned: Optional[Mapping[Term, Term]] = None,
) -> Optional[Assignment]:
    """First homomorphism in deterministic order, or None."""
    for h in all_homomorphisms(src_atoms, dst, pinned):
        return h
    return None


def verify_homomorphism(
    mapping: Mapping[Term, Term],
    src_atoms: Sequence[Atom],
    dst: Instance,
) -> bool:
    """Check a given mapping, without search. Rigid terms map to themselves
    unless the mapping says otherwise (explicit entries win, so this can also
    validate functions that move constants, e.g. product projections)."""

    def image(t: Term) -> Term:
        if t in mapping:
            return mapping[t]
        if isinstance(t, Pair):
            return Pair(image(t.left), image(t.right))
        return t

    for a in src_atoms:
        if Atom(a.relation, tuple(image(t) for t in a.args)) not in dst:
            return False
    return True


def enumerate_matches(
    q: ConjunctiveQuery,
    i: Instance,
    pinned: Optional[Mapping[Term, Term]] = None,
) -> list[tuple[Term, ...]]:
    """All answers of q on i: bindings of the free variables, sorted.

    A Boolean query yields [()] when it holds and [] otherwise; the empty
    query holds on every instance.
    """
    seen: set[tuple[Term, ...]] = set()
    for h in all_homomorphisms(q.atoms, i, pinned):
        seen.add(tuple(h[v] for v in q.free_vars))
    return sorted(seen, key=lambda tup: tuple(term_key(t) for t in tup))


def query_holds(
    q: ConjunctiveQuery,
    i: Instance,
    pinned: Optional[Mapping[Term, Term]] = None,
) -> bool:
    return find_homomorphism(q.atoms, i, pinned) is not None


def cq_homomorphism(
    src: ConjunctiveQuery, dst: ConjunctiveQuery
) -> Optional[Assignment]:
    """Homomorphism between queries: identity on free variables.

    Realized as a search into the canonical database of ``dst`` with the
    free variables of ``src`` pinned to their frozen constants; exists iff
    dst is contained in src (over all instances, constants respected).
    """
    pin: dict[Term, Term] = dict(canondb_pinning(src))
    return find_homomorphism(src.atoms, build_canondb(dst), pin)
