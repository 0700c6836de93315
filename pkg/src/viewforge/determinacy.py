"""Determinacy of a query by a distributed view, decided by chase rounds.

The procedure materializes two copies of the base schema (plain and primed)
that share the view relations. Forward rules derive view facts from bodies;
backward rules re-derive bodies from view facts with fresh existential
witnesses. Starting from the canonical database of the query, each round
pushes facts through view relations into the primed copy and back; a match
of the primed query that fixes every free variable's frozen constant proves
determinacy, while a round that adds nothing new refutes it. Background
rules, when given, are chased on both copies. Rounds and per-chase fuel are
bounded, so Unknown is a possible outcome.

A NotDetermined verdict carries a frozen counterexample pair: the base side
satisfies the query, the unprimed image of the primed side does not, and
both have the same view image. The pair is validated on construction and
any defect is reported on the verdict rather than hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .chase import ChaseConfig, ChaseResult, run_chase
from .homomorphism import (
    Assignment,
    enumerate_matches,
    find_homomorphism,
)
from .model import (
    Atom,
    ConjunctiveQuery,
    DView,
    EqualityRule,
    ExistentialRule,
    InputError,
    Instance,
    NullFactory,
    RelationSymbol,
    Rule,
    Term,
    View,
    canon_constant,
    canondb_pinning,
    build_canondb,
    freeze_nulls,
)

PRIME = "'"

DETERMINED = "determined"
NOT_DETERMINED = "not_determined"
UNKNOWN = "unknown"


def prime_relation(r: RelationSymbol) -> RelationSymbol:
    return RelationSymbol(r.name + PRIME, r.arity, r.sources)


def unprime_relation(r: RelationSymbol) -> RelationSymbol:
    if not r.name.endswith(PRIME):
        raise InputError(f"relation {r.name} is not primed")
    return RelationSymbol(r.name[:-len(PRIME)], r.arity, r.sources)


def prime_atom(a: Atom) -> Atom:
    return Atom(prime_relation(a.relation), a.args)


def prime_query(q: ConjunctiveQuery) -> ConjunctiveQuery:
    return ConjunctiveQuery(
        q.name + PRIME, q.free_vars, tuple(prime_atom(a) for a in q.atoms))


def prime_rule(rule: Rule) -> Rule:
    if isinstance(rule, ExistentialRule):
        return ExistentialRule(
            rule.name + PRIME,
            tuple(prime_atom(a) for a in rule.body),
            tuple(prime_atom(a) for a in rule.head))
    return EqualityRule(
        rule.name + PRIME,
        tuple(prime_atom(a) for a in rule.body),
        rule.lhs, rule.rhs)


def unprime_instance(i: Instance) -> Instance:
    """The primed facts of i, with primes stripped; other facts dropped."""
    out = []
    for f in i.facts:
        if f.relation.name.endswith(PRIME):
            out.append(Atom(unprime_relation(f.relation), f.args))
    return Instance(frozenset(out))


def view_relation(v: View) -> RelationSymbol:
    return RelationSymbol(v.name, v.arity, (v.source,))


@dataclass(frozen=True)
class ViewRuleSet:
    forward: tuple[ExistentialRule, ...]
    backward: tuple[ExistentialRule, ...]
    forward_primed: tuple[ExistentialRule, ...]
    backward_primed: tuple[ExistentialRule, ...]


def make_view_rules(dview: DView) -> ViewRuleSet:
    """Forward/backward rules for each view, on both schema copies.

    Views must have conjunctive definitions; the view relations are shared
    between the copies, which is what lets facts flow across.
    """
    forward, backward, forward_p, backward_p = [], [], [], []
    for v in dview:
        defn = v.definition
        if not isinstance(defn, ConjunctiveQuery):
            raise InputError(
                f"view {v.name}: determinacy needs conjunctive definitions")
        if not defn.atoms:
            raise InputError(f"view {v.name}: empty definition")
        head = Atom(view_relation(v), tuple(defn.free_vars))
        primed_body = tuple(prime_atom(a) for a in defn.atoms)
        forward.append(ExistentialRule(
            f"forview_{v.name}", defn.atoms, (head,)))
        backward.append(ExistentialRule(
            f"backview_{v.name}", (head,), defn.atoms))
        forward_p.append(ExistentialRule(
            f"forview_p_{v.name}", primed_body, (head,)))
        backward_p.append(ExistentialRule(
            f"backview_p_{v.name}", (head,), primed_body))
    return ViewRuleSet(
        tuple(forward), tuple(backward), tuple(forward_p), tuple(backward_p))


@dataclass(frozen=True)
class RoundSnapshot:
    round: int
    f0: Instance
    f1: Instance
    f2: Instance
    g2: Instance
    f3: Optional[Instance] = None
    f4: Optional[Instance] = None
    g4: Optional[Instance] = None
    f5: Optional[Instance] = None


@dataclass(frozen=True)
class DeterminacyWitness:
    holds_query: Instance
    fails_query: Instance


@dataclass(frozen=True)
class DeterminacyVerdict:
    status: str
    round: int = 0
    match: Optional[Assignment] = None
    witness: Optional[DeterminacyWitness] = None
    witness_problems: tuple[str, ...] = ()
    reason: str = ""
    rounds: tuple[RoundSnapshot, ...] = ()
    initial: Optional[Instance] = None

    @property
    def determined(self) -> bool:
        return self.status == DETERMINED


def _base_relation_names(
    q: ConjunctiveQuery, dview: DView, rules: Sequence[Rule]
) -> set[str]:
    names = {a.relation.name for a in q.atoms}
    for v in dview:
        names.update(a.relation.name for a in v.definition.atoms)
    for r in rules:
        names.update(a.relation.name for a in r.body)
        if isinstance(r, ExistentialRule):
            names.update(a.relation.name for a in r.head)
    return names


def _restrict(i: Instance, names: set[str]) -> Instance:
    return Instance(frozenset(
        f for f in i.facts if f.relation.name in names))


def _view_image(v: View, i: Instance) -> frozenset[tuple[Term, ...]]:
    return frozenset(enumerate_matches(v.definition, i))


def validate_witness(
    q: ConjunctiveQuery, dview: DView, witness: DeterminacyWitness
) -> list[str]:
    """Independent check of a counterexample pair."""
    problems = []
    for v in dview:
        a = _view_image(v, witness.holds_query)
        b = _view_image(v, witness.fails_query)
        if a != b:
            problems.append(f"view {v.name}: images differ ({len(a)} vs {len(b)})")
    pinned_row = tuple(canon_constant(v) for v in q.free_vars)
    if pinned_row not in set(enumerate_matches(q, witness.holds_query)):
        problems.append("query does not hold on the base side")
    if pinned_row in set(enumerate_matches(q, witness.fails_query)):
        problems.append("query holds on the primed side")
    return problems


def check_determinacy(
    q: ConjunctiveQuery,
    dview: DView,
    rules: Sequence[Rule] = (),
    max_rounds: int = 8,
    fuel: int = 100_000,
) -> DeterminacyVerdict:
    vr = make_view_rules(dview)
    primed_rules = tuple(prime_rule(r) for r in rules)
    base_names = _base_relation_names(q, dview, rules)
    q_primed = prime_query(q)
    pin = canondb_pinning(q)
    nulls = NullFactory()

    def chase(i: Instance, rset: Sequence[Rule], tag: str) -> Optional[Instance]:
        res = run_chase(i, rset, ChaseConfig(
            fuel=fuel, nulls=nulls, null_prefix=tag))
        return res.instance if res.completed else None

    start = chase(build_canondb(q), rules, "r0_")
    if start is None:
        return DeterminacyVerdict(UNKNOWN, reason="chase fuel exhausted")
    f0 = start
    snapshots: list[RoundSnapshot] = []

    for rnd in range(1, max_rounds + 1):
        f1 = chase(f0, vr.forward, f"r{rnd}a_")
        f2 = None if f1 is None else chase(f1, vr.backward_primed, f"r{rnd}b_")
        if f2 is None:
            g2 = None
        else:
            g2 = chase(f2, primed_rules, f"r{rnd}c_") if rules else f2
        if g2 is None:
            return DeterminacyVerdict(
                UNKNOWN, round=rnd, reason="chase fuel exhausted",
                rounds=tuple(snapshots), initial=start)
        match = find_homomorphism(q_primed.atoms, g2, pin)
        if match is not None:
            snapshots.append(RoundSnapshot(rnd, f0, f1, f2, g2))
            return DeterminacyVerdict(
                DETERMINED, round=rnd, match=match,
                rounds=tuple(snapshots), initial=start)
        f3 = chase(g2, vr.forward_primed, f"r{rnd}d_")
        f4 = None if f3 is None else chase(f3, vr.backward, f"r{rnd}e_")
        if f4 is None:
            g4 = None
        else:
            g4 = chase(f4, rules, f"r{rnd}f_") if rules else f4
        if g4 is None:
            return DeterminacyVerdict(
                UNKNOWN, round=rnd, reason="chase fuel exhausted",
                rounds=tuple(snapshots), initial=start)
        f5 = _restrict(g4, base_names)
        snapshots.append(RoundSnapshot(rnd, f0, f1, f2, g2, f3, f4, g4, f5))
        if f5.facts == f0.facts:
            witness = DeterminacyWitness(
                holds_query=freeze_nulls(f0, "a"),
                fails_query=freeze_nulls(unprime_instance(g2), "b"))
            problems = validate_witness(q, dview, witness)
            return DeterminacyVerdict(
                NOT_DETERMINED, round=rnd, witness=witness,
                witness_problems=tuple(problems),
                rounds=tuple(snapshots), initial=start)
        f0 = Instance(f0.facts | f5.facts)

    return DeterminacyVerdict(
        UNKNOWN, round=max_rounds, reason="round budget exhausted",
        rounds=tuple(snapshots), initial=start)


def backward_lemma_target_ok(
    snapshot: RoundSnapshot, target: Instance
) -> bool:
    """The unprimed image of F2 maps homomorphically into ``target`` while
    fixing all constants (nulls stay free)."""
    src = unprime_instance(snapshot.f2).sorted_facts()
    return find_homomorphism(src, target) is not None
