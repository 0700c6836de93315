from itertools import product

import pytest

from viewforge.canonical import (
    canonical_context,
    canonical_dview,
    canonical_view,
    is_monadic_frontier,
    source_vars,
    sjvars,
)
from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DSchema,
    InputError,
    RelationSymbol,
    Variable,
)

from bruteforce import all_dinstances, constants, naive_answers, naive_query_holds


def _by_source(report):
    return {entry.source: entry for entry in report}


class TestSourceVars:
    def test_example1_hospital(self, example1):
        q = example1.queries["Q"]
        report = _by_source(source_vars(q, example1.schema))
        hosp = report["hospital"]
        assert set(v.name for v in hosp.svars) == {"pid", "tinfo", "tdate"}
        assert [v.name for v in hosp.sjvars] == ["pid"]
        assert [v.name for v in report["registry"].sjvars] == ["pid"]

    def test_single_source_has_no_join_variables(self):
        r = RelationSymbol("R", 2, ("s",))
        schema = DSchema(("s",), (r,))
        x, y = Variable("x"), Variable("y")
        q = ConjunctiveQuery("q", (), (Atom(r, (x, y)),))
        assert sjvars(q, schema, "s") == ()

    def test_square_replication_makes_all_vars_shared(self, square):
        q = square.queries["Q"]
        for s in square.schema.sources:
            assert [v.name for v in sjvars(q, square.schema, s)] == \
                ["x", "y", "z", "w"]


class TestCanonicalView:
    def test_example1_hospital_view(self, example1):
        v = canonical_view(example1.queries["Q"], example1.schema, "hospital")
        d = v.definition
        assert [fv.name for fv in d.free_vars] == ["pid", "tinfo"]
        assert [a.relation.name for a in d.atoms] == ["Trtmnt"]
        assert [t.name for t in d.atoms[0].args] == ["pid", "tinfo", "tdate"]

    def test_example1_registry_view(self, example1):
        v = canonical_view(example1.queries["Q"], example1.schema, "registry")
        d = v.definition
        assert [fv.name for fv in d.free_vars] == ["pid", "age"]
        assert [a.relation.name for a in d.atoms] == ["Patient"]

    def test_boolean_single_source_view_is_query_itself(self):
        r = RelationSymbol("R", 2, ("s",))
        schema = DSchema(("s",), (r,))
        x, y = Variable("x"), Variable("y")
        q = ConjunctiveQuery("q", (), (Atom(r, (x, y)),))
        v = canonical_view(q, schema, "s")
        assert v.definition.free_vars == ()
        assert v.definition.atoms == q.atoms

    def test_source_without_atoms_rejected(self, example1):
        r = RelationSymbol("Extra", 1, ("third",))
        schema = DSchema(
            example1.schema.sources + ("third",),
            example1.schema.relations + (r,))
        with pytest.raises(InputError):
            canonical_view(example1.queries["Q"], schema, "third")


class TestCanonicalContext:
    def test_example1_hospital_context(self, example1):
        ctx = canonical_context(example1.queries["Q"], example1.schema,
                                "hospital")
        assert [v.name for v in ctx.free_vars] == ["pid"]
        assert [a.relation.name for a in ctx.atoms] == ["Patient"]

    def test_single_source_context_is_degenerate(self):
        r = RelationSymbol("R", 2, ("s",))
        schema = DSchema(("s",), (r,))
        x, y = Variable("x"), Variable("y")
        q = ConjunctiveQuery("q", (), (Atom(r, (x, y)),))
        ctx = canonical_context(q, schema, "s")
        assert ctx.atoms == () and ctx.free_vars == ()

    def test_square_context_keeps_only_present_frontier(self, square):
        ctx = canonical_context(square.queries["Q"], square.schema, "S")
        assert [a.relation.name for a in ctx.atoms] == ["P"]
        assert [v.name for v in ctx.free_vars] == ["x", "w"]


class TestCanonicalDview:
    def test_example1_two_views(self, example1):
        dv = canonical_dview(example1.queries["Q"], example1.schema)
        assert sorted(v.source for v in dv.views) == ["hospital", "registry"]

    def test_square_views_share_replicated_atoms(self, square):
        dv = canonical_dview(square.queries["Q"], square.schema)
        by_source = {v.source: v.definition for v in dv.views}
        p_rels = [a.relation.name for a in by_source["P"].atoms]
        s_rels = [a.relation.name for a in by_source["S"].atoms]
        assert sorted(p_rels) == ["P", "T", "T"]
        assert sorted(s_rels) == ["S", "T", "T"]

    def test_bodies_cover_query_atoms(self, example1, square):
        for ws in (example1, square):
            q = ws.queries["Q"]
            dv = canonical_dview(q, ws.schema)
            covered = set()
            for v in dv.views:
                covered.update(v.definition.atoms)
            assert covered == set(q.atoms)


class TestMonadicFrontier:
    def test_example1_is_monadic(self, example1):
        assert is_monadic_frontier(example1.queries["Q"], example1.schema)

    def test_square_is_not(self, square):
        assert not is_monadic_frontier(square.queries["Q"], square.schema)

    def test_single_source_is_monadic(self):
        r = RelationSymbol("R", 2, ("s",))
        schema = DSchema(("s",), (r,))
        x, y = Variable("x"), Variable("y")
        q = ConjunctiveQuery("q", (x,), (Atom(r, (x, y)),))
        assert is_monadic_frontier(q, schema)


def _joined_rows(dview, d):
    """Naive join of the view outputs on shared variable names."""
    per_view = []
    for v in dview.views:
        defn = v.definition
        rows = naive_answers(defn, d.local(v.source))
        per_view.append((defn.free_vars, rows))
    results = []
    for combo in product(*(rows for _, rows in per_view)):
        binding = {}
        ok = True
        for (vars_, _), row in zip(per_view, combo):
            for var, val in zip(vars_, row):
                if binding.setdefault(var, val) != val:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            results.append(binding)
    return results


class TestRewritingCompleteness:
    def test_join_of_canonical_views_answers_the_query(self, example1):
        q = example1.queries["Q"]
        schema = example1.schema
        dv = canonical_dview(q, schema)
        domain = constants(2)
        checked = 0
        for d in all_dinstances(schema, domain, 2):
            holds = naive_query_holds(q, d.merged())
            rewritten = _joined_rows(dv, d)
            assert holds == bool(rewritten)
            if holds:
                checked += 1
                want = naive_answers(q, d.merged())
                got = {tuple(b[v] for v in q.free_vars) for b in rewritten}
                assert got == want
        assert checked > 10
