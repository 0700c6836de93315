import pytest

from viewforge.canonical import canonical_dview
from viewforge.chase import (
    COMPLETED,
    FUEL_EXHAUSTED,
    ChaseConfig,
    EqualityClash,
    is_weakly_acyclic,
    run_chase,
    rules_satisfied,
    set_step_sink,
)
from viewforge.determinacy import make_view_rules
from viewforge.disclosure import STAR
from viewforge.model import (
    Atom,
    Constant,
    EqualityRule,
    ExistentialRule,
    InputError,
    Instance,
    LabeledNull,
    RelationSymbol,
    Variable,
)

from bruteforce import all_instances, naive_find

A = RelationSymbol("A", 1, ("s",))
B = RelationSymbol("B", 2, ("s",))
R = RelationSymbol("R", 2, ("s",))
S = RelationSymbol("S", 2, ("s",))
V = RelationSymbol("V", 1, ("s",))
x, y, z = Variable("x"), Variable("y"), Variable("z")
a = Constant("a")

GROW = ExistentialRule("grow", (Atom(A, (x,)),), (Atom(B, (x, y)),))
CYCLE = ExistentialRule("cycle", (Atom(R, (x, y)),), (Atom(R, (y, z)),))


class TestRunChase:
    def test_single_step_completion(self):
        result = run_chase(Instance.of([Atom(A, (a,))]), [GROW])
        assert result.completed
        assert len(result.instance) == 2
        added = result.instance.by_relation("B")[0]
        assert added.args[0] == a and isinstance(added.args[1], LabeledNull)

    def test_inverse_view_rule_from_star(self):
        back = ExistentialRule(
            "back", (Atom(V, (x,)),), (Atom(R, (x, y)), Atom(S, (x, y))))
        result = run_chase(Instance.of([Atom(V, (STAR,))]), [back])
        assert result.completed
        r_fact = result.instance.by_relation("R")[0]
        s_fact = result.instance.by_relation("S")[0]
        assert r_fact.args[0] == STAR and s_fact.args[0] == STAR
        assert r_fact.args[1] == s_fact.args[1]
        assert isinstance(r_fact.args[1], LabeledNull)

    def test_cyclic_rule_exhausts_fuel(self):
        start = Instance.of([Atom(R, (a, Constant("b")))])
        result = run_chase(start, [CYCLE], ChaseConfig(fuel=5))
        assert result.status == FUEL_EXHAUSTED
        assert len(result.steps) == 5
        assert result.pending >= 1

    def test_satisfied_trigger_consumes_no_fuel(self):
        b = Constant("b")
        start = Instance.of([Atom(A, (a,)), Atom(B, (a, b))])
        result = run_chase(start, [GROW])
        assert result.completed and result.steps == ()
        assert result.instance == start

    def test_completed_instance_satisfies_rules(self):
        # close precedes grow so each fresh element gets its loop before
        # grow can extend it; the reverse order diverges under FIFO.
        rules = [ExistentialRule("close", (Atom(A, (x,)),), (Atom(B, (x, x)),)),
                 GROW,
                 ExistentialRule("chain", (Atom(B, (x, y)),), (Atom(A, (y,)),))]
        result = run_chase(Instance.of([Atom(A, (a,))]), rules)
        assert result.completed
        assert rules_satisfied(result.instance, rules)

    def test_replay_determinism(self):
        start = Instance.of([Atom(R, (a, a)), Atom(R, (a, Constant("b")))])
        rules = [CYCLE]
        r1 = run_chase(start, rules, ChaseConfig(fuel=7))
        r2 = run_chase(start, rules, ChaseConfig(fuel=7))
        assert r1.steps == r2.steps
        assert r1.instance == r2.instance

    def test_null_names_carry_step_and_variable(self):
        result = run_chase(Instance.of([Atom(A, (a,))]), [GROW])
        null = result.instance.by_relation("B")[0].args[1]
        assert null.hint == "n_1_y"


class TestEqualityRules:
    FUNC = EqualityRule(
        "func", (Atom(B, (x, y)), Atom(B, (x, z))), y, z)

    def test_null_merges_into_constant(self):
        rules = [GROW, self.FUNC]
        b = Constant("b")
        start = Instance.of([Atom(A, (a,)), Atom(B, (a, b))])
        result = run_chase(start, rules)
        assert result.completed
        assert result.instance == start

    def test_constant_clash_raises(self):
        b, c = Constant("b"), Constant("c")
        start = Instance.of([Atom(B, (a, b)), Atom(B, (a, c))])
        with pytest.raises(EqualityClash):
            run_chase(start, [self.FUNC])

    def test_merge_keeps_lower_null(self):
        n1, n2 = LabeledNull(1), LabeledNull(2)
        start = Instance.of([Atom(B, (a, n1)), Atom(B, (a, n2))])
        result = run_chase(start, [self.FUNC])
        assert result.completed
        assert len(result.instance) == 1
        step = result.steps[0]
        assert step.merged == (n1, n2)


class TestStepSink:
    def test_sink_sees_every_step_and_restores(self):
        seen = []
        prev = set_step_sink(seen.append)
        try:
            result = run_chase(Instance.of([Atom(A, (a,))]), [GROW])
        finally:
            restored = set_step_sink(prev)
        assert restored is not prev or prev is None
        assert seen == list(result.steps)
        seen.clear()
        run_chase(Instance.of([Atom(A, (a,))]), [GROW])
        assert seen == []


class TestWeakAcyclicity:
    def test_terminal_head_is_acyclic(self):
        report = is_weakly_acyclic([GROW])
        assert report.acyclic and report.cycle == ()

    def test_special_self_loop(self):
        report = is_weakly_acyclic([CYCLE])
        assert not report.acyclic
        assert any(e.special for e in report.edges)
        assert report.cycle

    def test_example1_view_rules_are_acyclic(self, example1):
        dview = example1.dviews["Canon"]
        rules = make_view_rules(dview)
        assert is_weakly_acyclic(
            tuple(rules.forward) + tuple(rules.backward)).acyclic

    def test_rejects_equality_rules(self):
        eq = EqualityRule("e", (Atom(B, (x, y)),), x, y)
        with pytest.raises(InputError):
            is_weakly_acyclic([GROW, eq])

    def test_weakly_acyclic_sets_complete_on_small_instances(self, example1):
        rules = tuple(make_view_rules(example1.dviews["Canon"]).forward)
        assert is_weakly_acyclic(rules).acyclic
        schema = example1.schema
        domain = [Constant("d1"), Constant("d2")]
        for inst in all_instances(schema.relations, domain, 2):
            assert run_chase(inst, rules).completed


class TestHomomorphismUniversality:
    def test_chase_maps_into_every_superset_model(self):
        rules = [GROW]
        start = Instance.of([Atom(A, (a,))])
        chased = run_chase(start, rules).instance
        domain = [a, Constant("d1"), Constant("d2")]
        pinned = {t: t for t in (a,)}
        checked = 0
        for j in all_instances([A, B], domain, 3):
            full = j.union(start)
            if not rules_satisfied(full, rules):
                continue
            checked += 1
            assert naive_find(chased.sorted_facts(), full, pinned) is not None
        assert checked > 5
