import random

import pytest

from viewforge.chase import ChaseConfig
from viewforge.homomorphism import all_homomorphisms
from viewforge.minimization import (
    entails_under_rules,
    equivalent,
    equivalent_under_rules,
    is_minimal,
    minimize,
    minimize_under_rules,
)
from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    RelationSymbol,
    Tri,
    Variable,
    build_canondb,
    canondb_pinning,
)

from bruteforce import naive_equivalent, naive_is_minimal, naive_minimize

R = RelationSymbol("R", 2, ("s",))
T = RelationSymbol("T", 2, ("s",))
R1 = RelationSymbol("R1", 2, ("s",))
S1 = RelationSymbol("S1", 2, ("s",))
x, y, z = Variable("x"), Variable("y"), Variable("z")

FORK = ConjunctiveQuery("fork", (), (Atom(R, (x, y)), Atom(R, (x, z))))

SYNC = (
    ExistentialRule("rs", (Atom(R1, (x, y)),), (Atom(S1, (x, y)),)),
    ExistentialRule("sr", (Atom(S1, (x, y)),), (Atom(R1, (x, y)),)),
)


class TestIsMinimal:
    def test_fork_folds(self):
        result = is_minimal(FORK)
        assert not result.minimal
        assert len(result.subquery.atoms) < 2
        assert result.folding is not None
        folded = {result.folding[v] for v in (y, z)}
        assert len(folded) == 1

    def test_duplicate_atoms_count_once(self):
        q = ConjunctiveQuery("q", (), (Atom(R, (x, y)), Atom(R, (x, y))))
        assert is_minimal(q).minimal
        assert minimize(q).atoms == (Atom(R, (x, y)),)

    def test_square_query_is_minimal(self, square):
        assert is_minimal(square.queries["Q"]).minimal

    def test_single_atom_is_minimal(self):
        q = ConjunctiveQuery("q", (), (Atom(R, (x, y)),))
        assert is_minimal(q).minimal


class TestMinimize:
    def test_fork_collapses_to_one_atom(self):
        core = minimize(FORK)
        assert len(core.atoms) == 1
        assert equivalent(core, FORK)

    def test_idempotent_on_minimal_input(self, square):
        q = square.queries["Q"]
        assert minimize(q) == q

    def test_loop_absorbs_edge(self):
        q = ConjunctiveQuery("q", (), (Atom(T, (x, y)), Atom(T, (x, x))))
        core = minimize(q)
        assert core.atoms == (Atom(T, (x, x)),)


class TestEquivalentUnderRules:
    def test_syntactic_equality(self):
        q = ConjunctiveQuery("q", (), (Atom(R, (x, y)),))
        assert equivalent_under_rules(q, q, ()) is Tri.YES

    def test_relation_sync_rules_identify_projections(self):
        q1 = ConjunctiveQuery("q1", (), (Atom(R1, (x, y)),))
        q2 = ConjunctiveQuery("q2", (), (Atom(S1, (x, y)),))
        assert equivalent_under_rules(q1, q2, ()) is Tri.NO
        assert equivalent_under_rules(q1, q2, SYNC) is Tri.YES

    def test_loop_vs_edge_without_rules(self):
        loop = ConjunctiveQuery("l", (), (Atom(R, (x, x)),))
        edge = ConjunctiveQuery("e", (), (Atom(R, (x, y)),))
        assert equivalent_under_rules(loop, edge, ()) is Tri.NO

    def test_definitive_no_despite_exhausted_direction(self):
        # One direction exhausts fuel, but the other completes and refutes,
        # which settles the equivalence.
        diverge = ExistentialRule(
            "d", (Atom(R, (x, y)),), (Atom(R, (y, z)),))
        q1 = ConjunctiveQuery("q1", (), (Atom(R, (x, y)),))
        q2 = ConjunctiveQuery("q2", (), (Atom(T, (x, y)),))
        verdict = equivalent_under_rules(
            q1, q2, (diverge,), ChaseConfig(fuel=2))
        assert verdict is Tri.NO

    def test_unknown_on_tiny_fuel(self):
        # A 4-edge path cannot fold into the 3-edge chain a fuel-2 chase
        # builds, so the forward direction stays open.
        diverge = ExistentialRule(
            "d", (Atom(R, (x, y)),), (Atom(R, (y, z)),))
        vs = [Variable(f"p{i}") for i in range(5)]
        edge = ConjunctiveQuery("edge", (), (Atom(R, (x, y)),))
        path = ConjunctiveQuery(
            "path", (),
            tuple(Atom(R, (vs[i], vs[i + 1])) for i in range(4)))
        verdict = equivalent_under_rules(
            edge, path, (diverge,), ChaseConfig(fuel=2))
        assert verdict is Tri.UNKNOWN


class TestMinimizeUnderRules:
    def test_no_rules_coincides_with_plain(self):
        for q in (FORK,
                  ConjunctiveQuery("q", (), (Atom(T, (x, y)), Atom(T, (x, x))))):
            assert minimize_under_rules(q, ()).query == minimize(q)

    def test_sync_rules_collapse_joined_pair(self):
        q = ConjunctiveQuery(
            "q", (), (Atom(R1, (x, y)), Atom(S1, (x, y))))
        result = minimize_under_rules(q, SYNC)
        assert result.query is not None
        assert len(result.query.atoms) == 1

    def test_unknown_propagates(self):
        # Rules grow A/E forever and never produce D, so dropping the
        # D-atom leads to an equivalence test the fuel cannot settle.
        A = RelationSymbol("A", 1, ("s",))
        E = RelationSymbol("E", 2, ("s",))
        D = RelationSymbol("D", 1, ("s",))
        u = Variable("u")
        rules = (
            ExistentialRule("ae", (Atom(A, (x,)),), (Atom(E, (x, y)),)),
            ExistentialRule("ea", (Atom(E, (x, y)),), (Atom(A, (y,)),)),
        )
        q = ConjunctiveQuery("q", (), (Atom(A, (x,)), Atom(D, (u,))))
        result = minimize_under_rules(q, rules, ChaseConfig(fuel=3))
        assert result.query is None
        assert result.status is Tri.UNKNOWN


class TestEntailment:
    def test_rule_closure_entails_consequences(self):
        q1 = ConjunctiveQuery("q1", (), (Atom(R1, (x, y)),))
        q2 = ConjunctiveQuery("q2", (), (Atom(S1, (x, y)),))
        assert entails_under_rules(q1, q2, SYNC) is Tri.YES
        assert entails_under_rules(q1, q2, ()) is Tri.NO


def _random_query(rng, max_atoms=4):
    pool = [Variable(f"v{i}") for i in range(3)]
    rels = [R, T]
    atoms = tuple(
        Atom(rng.choice(rels), (rng.choice(pool), rng.choice(pool)))
        for _ in range(rng.randint(1, max_atoms)))
    frees = tuple(
        v for v in {v for a in atoms for v in a.variables()}
        if rng.random() < 0.3)
    return ConjunctiveQuery("q", tuple(sorted(frees, key=str)), atoms)


class TestProperties:
    def test_minimize_preserves_equivalence_and_is_idempotent(self):
        rng = random.Random(7)
        for _ in range(80):
            q = _random_query(rng)
            core = minimize(q)
            assert equivalent(core, q)
            assert naive_equivalent(core, q)
            assert is_minimal(core).minimal
            assert minimize(core) == core

    def test_agrees_with_exhaustive_search(self):
        rng = random.Random(8)
        for _ in range(60):
            q = _random_query(rng)
            assert is_minimal(q).minimal == naive_is_minimal(q)
            assert len(minimize(q).atoms) == len(naive_minimize(q).atoms)

    def test_minimal_query_endomorphisms_never_merge_variables(self):
        rng = random.Random(9)
        checked = 0
        for _ in range(60):
            q = _random_query(rng)
            if not is_minimal(q).minimal:
                continue
            checked += 1
            db = build_canondb(q)
            pin = dict(canondb_pinning(q))
            for h in all_homomorphisms(q.atoms, db, pin):
                images = [h[v] for v in sorted(
                    {v for a in q.atoms for v in a.variables()}, key=str)]
                assert len(set(images)) == len(images)
        assert checked > 10
