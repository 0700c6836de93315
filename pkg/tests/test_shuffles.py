import pytest

from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    DSchema,
    ExistentialRule,
    InputError,
    Instance,
    RelationSymbol,
    Tri,
    Variable,
    boolean_closure,
)
from viewforge.oracle import sq_equivalence_exact
from viewforge.shuffles import (
    MAX_FRONTIER,
    Shuffle,
    TooManyFrontierVars,
    build_shuffle_views,
    enumerate_types_and_shuffles,
    has_only_trivial_shuffles,
    invariant_classes,
    is_invariant_shuffle,
    shuffle_equivalent,
)

from bruteforce import all_instances, constants

x, y = Variable("x"), Variable("y")


def _single_source_bool():
    r = RelationSymbol("R", 2, ("s",))
    schema = DSchema(("s",), (r,))
    q = ConjunctiveQuery("q", (), (Atom(r, (x, y)),))
    return q, schema


class TestEnumeration:
    def test_one_frontier_variable(self, example1):
        q = boolean_closure(example1.queries["Q"])
        types, shuffles = enumerate_types_and_shuffles(
            q, "hospital", example1.schema)
        assert len(types) == 1 and len(shuffles) == 1
        assert shuffles[0].is_identity

    def test_two_frontier_variables(self, symmetric):
        q = symmetric.queries["Sym"]
        types, shuffles = enumerate_types_and_shuffles(
            q, "left", symmetric.schema)
        assert len(types) == 2
        assert len(shuffles) == 4

    def test_empty_frontier(self):
        q, schema = _single_source_bool()
        types, shuffles = enumerate_types_and_shuffles(q, "s", schema)
        assert len(types) == 1 and len(shuffles) == 1

    def test_frontier_cap(self):
        rels = tuple(
            RelationSymbol(f"R{i}", 1, ("a", "b")) for i in range(7))
        schema = DSchema(("a", "b"), rels)
        vs = [Variable(f"v{i}") for i in range(7)]
        q = ConjunctiveQuery(
            "wide", (), tuple(Atom(r, (v,)) for r, v in zip(rels, vs)))
        with pytest.raises(TooManyFrontierVars):
            enumerate_types_and_shuffles(q, "a", schema)
        types, _ = enumerate_types_and_shuffles(q, "a", schema, max_frontier=7)
        assert len(types) > 0
        assert MAX_FRONTIER == 6

    def test_non_boolean_query_refused(self, example1):
        with pytest.raises(InputError):
            enumerate_types_and_shuffles(
                example1.queries["Q"], "hospital", example1.schema)


def _types_by_shape(types):
    merged = next(t for t in types if len(t.blocks) == 1)
    discrete = next(t for t in types if len(t.blocks) == 2)
    return merged, discrete


class TestInvariance:
    def test_identity_always_invariant(self, symmetric):
        q = symmetric.queries["Sym"]
        for source in ("left", "right"):
            types, shuffles = enumerate_types_and_shuffles(
                q, source, symmetric.schema)
            ident = next(s for s in shuffles if s.is_identity)
            for tau in types:
                assert is_invariant_shuffle(
                    ident, tau, q, source, symmetric.schema) is Tri.YES

    def test_swap_invariant_on_symmetric_context(self, symmetric):
        q = symmetric.queries["Sym"]
        types, shuffles = enumerate_types_and_shuffles(
            q, "left", symmetric.schema)
        _, discrete = _types_by_shape(types)
        swap = next(
            s for s in shuffles
            if not s.is_identity and set(s.images) == {x, y})
        assert is_invariant_shuffle(
            swap, discrete, q, "left", symmetric.schema) is Tri.YES

    def test_swap_not_invariant_against_oriented_context(self, symmetric):
        q = symmetric.queries["Sym"]
        types, shuffles = enumerate_types_and_shuffles(
            q, "right", symmetric.schema)
        _, discrete = _types_by_shape(types)
        swap = next(
            s for s in shuffles
            if not s.is_identity and set(s.images) == {x, y})
        assert is_invariant_shuffle(
            swap, discrete, q, "right", symmetric.schema) is Tri.NO

    def test_example1_admits_only_identity(self, example1):
        q = boolean_closure(example1.queries["Q"])
        types, shuffles = enumerate_types_and_shuffles(
            q, "hospital", example1.schema)
        assert [s.is_identity for s in shuffles] == [True]
        assert is_invariant_shuffle(
            shuffles[0], types[0], q, "hospital", example1.schema) is Tri.YES

    def test_empty_rules_match_plain_verdicts(self, symmetric):
        q = symmetric.queries["Sym"]
        schema = symmetric.schema
        e = schema.relation("E")
        vacuous = (ExistentialRule(
            "keep", (Atom(e, (x, y)),), (Atom(e, (x, y)),)),)
        for source in ("left", "right"):
            types, shuffles = enumerate_types_and_shuffles(q, source, schema)
            for tau in types:
                for mu in shuffles:
                    plain = is_invariant_shuffle(mu, tau, q, source, schema)
                    ruled = is_invariant_shuffle(
                        mu, tau, q, source, schema, rules=vacuous)
                    assert plain is ruled


class TestInvariantClasses:
    def test_identity_class_first(self, symmetric):
        q = symmetric.queries["Sym"]
        types, shuffles = enumerate_types_and_shuffles(
            q, "left", symmetric.schema)
        for tau in types:
            classes = invariant_classes(
                tau, q, "left", symmetric.schema, shuffles)
            assert classes[0].representative.is_identity
            assert classes[0].invariant is Tri.YES

    def test_merged_type_collapses_all_shuffles(self, symmetric):
        q = symmetric.queries["Sym"]
        types, shuffles = enumerate_types_and_shuffles(
            q, "left", symmetric.schema)
        merged, discrete = _types_by_shape(types)
        assert len(invariant_classes(
            merged, q, "left", symmetric.schema, shuffles)) == 1
        assert len(invariant_classes(
            discrete, q, "left", symmetric.schema, shuffles)) == 4


class TestBuildShuffleViews:
    def test_symmetric_bundle_shapes(self, symmetric):
        q = symmetric.queries["Sym"]
        design = build_shuffle_views(q, symmetric.schema)
        assert len(design.bundles) == 4
        shapes = {}
        for b in design.bundles:
            shapes[(b.view.source, len(b.eqtype.blocks))] = b
        left_discrete = shapes[("left", 2)]
        disjuncts = left_discrete.view.definition.disjuncts
        atom_sets = {
            tuple(str(a) for a in d.atoms) for d in disjuncts}
        assert atom_sets == {
            ("E(x, y)",), ("E(y, x)",), ("E(x, x)",), ("E(y, y)",)}
        assert left_discrete.view.definition.disequalities == ((x, y),)
        right_discrete = shapes[("right", 2)]
        assert len(right_discrete.view.definition.disjuncts) == 1

    def test_example1_views_reduce_to_canonical(self, example1):
        q = boolean_closure(example1.queries["Q"])
        design = build_shuffle_views(q, example1.schema)
        assert len(design.bundles) == 2
        for b in design.bundles:
            assert len(b.view.definition.disjuncts) == 1
            assert len(b.shuffles) == 1

    def test_single_source_boolean_query(self):
        q, schema = _single_source_bool()
        design = build_shuffle_views(q, schema)
        assert len(design.bundles) == 1
        defn = design.bundles[0].view.definition
        assert defn.head_vars == ()

    def test_undecided_shuffles_are_excluded_and_reported(self, symmetric):
        q = symmetric.queries["Sym"]
        schema = symmetric.schema
        e = schema.relation("E")
        z = Variable("z")
        diverge = (ExistentialRule(
            "d", (Atom(e, (x, y)),), (Atom(e, (y, z)),)),)
        from viewforge.chase import ChaseConfig
        design = build_shuffle_views(
            q, schema, rules=diverge, cfg=ChaseConfig(fuel=1))
        assert any(b.undecided for b in design.bundles)


class TestShuffleEquivalent:
    def test_reflexive(self, symmetric):
        q = symmetric.queries["Sym"]
        i = symmetric.instances["Eab"].local("left")
        res = shuffle_equivalent(i, i, q, "left", symmetric.schema)
        assert res.verdict is Tri.YES

    def test_swapped_edges_equivalent(self, symmetric):
        q = symmetric.queries["Sym"]
        i1 = symmetric.instances["Eab"].local("left")
        i2 = symmetric.instances["Eba"].local("left")
        res = shuffle_equivalent(i1, i2, q, "left", symmetric.schema)
        assert res.verdict is Tri.YES

    def test_example1_pid_rename_not_equivalent(self, example1):
        q = boolean_closure(example1.queries["Q"])
        i1 = example1.instances["I1"].local("hospital")
        i2 = example1.instances["I2"].local("hospital")
        res = shuffle_equivalent(i1, i2, q, "hospital", example1.schema)
        assert res.verdict is Tri.NO
        assert res.witness is not None

    def test_agrees_with_exact_equivalence_on_small_pool(self, symmetric):
        q = symmetric.queries["Sym"]
        schema = symmetric.schema
        e = schema.relation("E")
        pool = list(all_instances([e], constants(2), 2))
        for i1 in pool:
            for i2 in pool:
                fast = shuffle_equivalent(i1, i2, q, "left", schema)
                exact = sq_equivalence_exact(i1, i2, q, "left", schema)
                assert (fast.verdict is Tri.YES) == exact.equivalent


class TestOnlyTrivialShuffles:
    def test_example1_yes(self, example1):
        q = boolean_closure(example1.queries["Q"])
        assert has_only_trivial_shuffles(q, example1.schema) is Tri.YES

    def test_symmetric_no(self, symmetric):
        q = symmetric.queries["Sym"]
        assert has_only_trivial_shuffles(q, symmetric.schema) is Tri.NO

    def test_single_source_yes(self):
        q, schema = _single_source_bool()
        assert has_only_trivial_shuffles(q, schema) is Tri.YES
