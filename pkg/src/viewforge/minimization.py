"""Query minimization, with and without background rules.

A query is minimal when no endomorphism that fixes the free variables folds
it onto a proper subquery. Minimization deletes atoms greedily in syntactic
order; each deletion is justified by a folding homomorphism (no rules) or by
an equivalence test through the chase (with rules), so the result is always
equivalent to the input. Rule-aware answers can be Unknown when a chase runs
out of fuel; that is an explicit outcome, never silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .chase import ChaseConfig, run_chase
from .homomorphism import Assignment, cq_homomorphism, find_homomorphism
from .model import (
    ConjunctiveQuery,
    Constant,
    InputError,
    Rule,
    Tri,
    Variable,
    build_canondb,
    canon_constant,
    canondb_pinning,
    substitute_atoms,
)
from .homomorphism import all_homomorphisms


@dataclass(frozen=True)
class MinimalityResult:
    minimal: bool
    folding: Optional[dict] = None            # variable -> variable
    subquery: Optional[ConjunctiveQuery] = None


@dataclass(frozen=True)
class RuleMinimization:
    query: Optional[ConjunctiveQuery]
    status: Tri                               # YES definitive, UNKNOWN otherwise


def _guard_canon_collision(*queries: ConjunctiveQuery) -> None:
    # Frozen constants are named c_<var>; a literal constant with such a name
    # would make the encoding ambiguous.
    for q in queries:
        canon = {canon_constant(v) for v in q.variables()}
        for atom in q.atoms:
            for t in atom.args:
                if isinstance(t, Constant) and t in canon:
                    raise InputError(
                        f"query {q.name}: constant {t} collides with "
                        "canonical naming")


def _endomorphisms(q: ConjunctiveQuery):
    """All endomorphisms fixing the free variables, as var->var maps."""
    canondb = build_canondb(q)
    reverse = {canon_constant(v): v for v in q.variables()}
    for h in all_homomorphisms(q.atoms, canondb, canondb_pinning(q)):
        yield {v: reverse[h[v]] for v in q.variables()}


def is_minimal(q: ConjunctiveQuery) -> MinimalityResult:
    """Exhaustive check over endomorphism images."""
    _guard_canon_collision(q)
    full = set(q.atoms)
    for endo in _endomorphisms(q):
        image = set(substitute_atoms(endo, q.atoms))
        if image < full:
            sub = ConjunctiveQuery(
                q.name, q.free_vars,
                tuple(a for a in q.atoms if a in image))
            return MinimalityResult(False, folding=endo, subquery=sub)
    return MinimalityResult(True)


def _drop_atom(q: ConjunctiveQuery, index: int) -> Optional[ConjunctiveQuery]:
    atoms = q.atoms[:index] + q.atoms[index + 1:]
    if not atoms:
        return None
    try:
        return ConjunctiveQuery(q.name, q.free_vars, atoms)
    except InputError:
        return None  # removal would orphan a free variable


def minimize(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Greedy deletion in syntactic atom order; the result is the core of q
    (hom-equivalent and minimal)."""
    _guard_canon_collision(q)
    current = q
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(current.atoms):
            candidate = _drop_atom(current, i)
            if candidate is not None and cq_homomorphism(
                    current, candidate) is not None:
                current = candidate
                changed = True
            else:
                i += 1
    return current


def equivalent(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    """Plain homomorphic equivalence (identity on free variables)."""
    return (cq_homomorphism(q1, q2) is not None
            and cq_homomorphism(q2, q1) is not None)


def _entails(
    src: ConjunctiveQuery,
    dst: ConjunctiveQuery,
    rules: Sequence[Rule],
    cfg: ChaseConfig,
) -> Tri:
    """Does src together with the rules entail dst?"""
    res = run_chase(build_canondb(src), rules, cfg)
    pin = {v: canon_constant(v) for v in dst.free_vars}
    if find_homomorphism(dst.atoms, res.instance, pin) is not None:
        return Tri.YES  # the chase only grows, so a match is definitive
    return Tri.NO if res.completed else Tri.UNKNOWN


def entails_under_rules(
    q1: ConjunctiveQuery,
    q2: ConjunctiveQuery,
    rules: Sequence[Rule] = (),
    cfg: Optional[ChaseConfig] = None,
) -> Tri:
    """Does q1 together with the rules entail q2? Decided by chasing q1's
    canonical database; without rules this is plain containment and never
    answers Unknown."""
    _guard_canon_collision(q1, q2)
    return _entails(q1, q2, rules, cfg or ChaseConfig())


def equivalent_under_rules(
    q1: ConjunctiveQuery,
    q2: ConjunctiveQuery,
    rules: Sequence[Rule],
    cfg: ChaseConfig = ChaseConfig(),
) -> Tri:
    if set(q1.free_vars) != set(q2.free_vars):
        raise InputError("equivalence needs identical free variables")
    _guard_canon_collision(q1, q2)
    forward = _entails(q1, q2, rules, cfg)
    if forward == Tri.NO:
        return Tri.NO
    backward = _entails(q2, q1, rules, cfg)
    if backward == Tri.NO:
        return Tri.NO
    if forward == Tri.YES and backward == Tri.YES:
        return Tri.YES
    return Tri.UNKNOWN


def minimize_under_rules(
    q: ConjunctiveQuery,
    rules: Sequence[Rule],
    cfg: ChaseConfig = ChaseConfig(),
) -> RuleMinimization:
    """Greedy deletion justified by rule-aware equivalence."""
    if not rules:
        return RuleMinimization(minimize(q), Tri.YES)
    current = q
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(current.atoms):
            candidate = _drop_atom(current, i)
            if candidate is None:
                i += 1
                continue
            verdict = equivalent_under_rules(candidate, current, rules, cfg)
            if verdict == Tri.UNKNOWN:
                return RuleMinimization(None, Tri.UNKNOWN)
            if verdict == Tri.YES:
                current = candidate
                changed = True
            else:
                i += 1
    return RuleMinimization(current, Tri.YES)
