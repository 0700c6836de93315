import pytest

from viewforge.determinacy import (
    DETERMINED,
    NOT_DETERMINED,
    UNKNOWN,
    backward_lemma_target_ok,
    check_determinacy,
    make_view_rules,
    unprime_instance,
    validate_witness,
)
from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    DView,
    InputError,
    RelationSymbol,
    Variable,
    View,
    build_canondb,
    canon_constant,
)
from viewforge.replication import replication_rules

from bruteforce import naive_answers, naive_views_agree

R = RelationSymbol("R", 2, ("s",))
S = RelationSymbol("S", 2, ("s",))
x, y, z = Variable("x"), Variable("y"), Variable("z")


class TestMakeViewRules:
    def test_two_atom_view_rules(self):
        defn = ConjunctiveQuery(
            "V", (x,), (Atom(R, (x, y)), Atom(S, (x, z))))
        dv = DView((View("V", "s", defn),))
        rules = make_view_rules(dv)
        fwd = rules.forward[0]
        assert fwd.body == defn.atoms
        assert fwd.head[0].relation.name == "V"
        assert fwd.head[0].args == (x,)
        back = rules.backward[0]
        assert back.body[0].relation.name == "V"
        assert back.head == defn.atoms
        assert set(back.existential_vars()) == {y, z}
        primed_names = {a.relation.name for a in rules.backward_primed[0].head}
        assert primed_names == {"R'", "S'"}
        assert rules.forward_primed[0].head[0].relation.name == "V"

    def test_boolean_view_gets_nullary_head(self):
        defn = ConjunctiveQuery("B", (), (Atom(R, (x, y)),))
        dv = DView((View("B", "s", defn),))
        rules = make_view_rules(dv)
        assert rules.forward[0].head[0].args == ()

    def test_two_views_yield_eight_rules(self, example1):
        rules = make_view_rules(example1.dviews["Canon"])
        total = (len(rules.forward) + len(rules.backward)
                 + len(rules.forward_primed) + len(rules.backward_primed))
        assert total == 8

    def test_non_cq_definition_rejected(self, makesafe):
        dv = DView((makesafe.views["M"],))
        with pytest.raises(InputError):
            make_view_rules(dv)


class TestCheckDeterminacy:
    def test_example1_canonical_determined_round_one(self, example1):
        q = example1.queries["Q"]
        verdict = check_determinacy(q, example1.dviews["Canon"])
        assert verdict.status == DETERMINED
        assert verdict.round == 1
        for v in q.free_vars:
            assert verdict.match[v] == canon_constant(v)

    def test_example1_dropped_pid_not_determined(self, example1):
        q = example1.queries["Q"]
        verdict = check_determinacy(q, example1.dviews["Dropped"])
        assert verdict.status == NOT_DETERMINED
        assert verdict.witness is not None
        assert verdict.witness_problems == ()
        assert validate_witness(q, example1.dviews["Dropped"], verdict.witness) == []

    def test_witness_pair_checks_out_naively(self, example1):
        q = example1.queries["Q"]
        dview = example1.dviews["Dropped"]
        w = check_determinacy(q, dview).witness
        d1, d2 = w.holds_query, w.fails_query
        for v in dview:
            assert naive_answers(v.definition, d1) == \
                naive_answers(v.definition, d2)
        pinned = tuple(canon_constant(v) for v in q.free_vars)
        assert pinned in naive_answers(q, d1)
        assert pinned not in naive_answers(q, d2)

    def test_square_with_replication_rules_determined(self, square):
        q = square.queries["Q"]
        rules = replication_rules(square.schema)
        verdict = check_determinacy(q, square.dviews["D1"], rules=rules)
        assert verdict.status == DETERMINED
        assert verdict.round == 1

    def test_unknown_when_rounds_run_out(self, example1):
        q = example1.queries["Q"]
        verdict = check_determinacy(q, example1.dviews["Canon"], max_rounds=0)
        assert verdict.status == UNKNOWN
        assert verdict.reason

    def test_all_square_dviews_determined(self, square):
        q = square.queries["Q"]
        rules = replication_rules(square.schema)
        for name in ("D1", "D2a", "D2b", "D3"):
            verdict = check_determinacy(q, square.dviews[name], rules=rules)
            assert verdict.status == DETERMINED, name


class TestBackwardLemma:
    def test_unprimed_f2_maps_into_start_every_round(self, example1, square):
        cases = [
            (example1.queries["Q"], example1.dviews["Canon"], ()),
            (example1.queries["Q"], example1.dviews["Dropped"], ()),
            (square.queries["Q"], square.dviews["D1"],
             replication_rules(square.schema)),
        ]
        for q, dview, rules in cases:
            verdict = check_determinacy(q, dview, rules=rules)
            assert verdict.rounds
            for snap in verdict.rounds:
                assert backward_lemma_target_ok(snap, verdict.initial)

    def test_lemma_target_is_the_chased_start(self, example1):
        # With empty rules the chased start is canondb(Q) itself.
        q = example1.queries["Q"]
        verdict = check_determinacy(q, example1.dviews["Canon"])
        assert verdict.initial == build_canondb(q)

    def test_unprime_strips_only_primed_facts(self, example1):
        verdict = check_determinacy(
            example1.queries["Q"], example1.dviews["Canon"])
        snap = verdict.rounds[0]
        stripped = unprime_instance(snap.f2)
        assert all(not f.relation.name.endswith("'") for f in stripped)
        assert any(f.relation.name == "Trtmnt" for f in stripped)
