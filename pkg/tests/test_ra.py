import pathlib

import pytest

from viewforge.homomorphism import enumerate_matches
from viewforge.model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DisjunctiveQuery,
    InputError,
    Instance,
    RelationSymbol,
    Variable,
    View,
)
from viewforge.ra import (
    BaseScan,
    Difference,
    DomScan,
    Join,
    Project,
    RADefinition,
    Rename,
    Select,
    Union,
    compile_dcq_to_ra,
    eval_dcq,
    eval_ra,
    padded_domain,
    to_lisp,
    view_image,
)
from viewforge.shuffles import build_shuffle_views

from bruteforce import all_instances, constants

GOLDEN = pathlib.Path(__file__).parent / "golden" / "makesafe_ra.lisp"

R = RelationSymbol("R", 2, ("s",))
A1 = RelationSymbol("A", 1, ("s",))
B1 = RelationSymbol("B", 1, ("s",))
x, y = Variable("x"), Variable("y")
a, b = Constant("a"), Constant("b")


class TestEvalRa:
    def test_base_scan(self):
        rel = eval_ra(BaseScan(Atom(R, (x, y))), Instance.of([Atom(R, (a, b))]))
        assert rel.attrs == (x, y)
        assert rel.rows == {(a, b)}

    def test_difference_with_itself_is_empty(self):
        e = BaseScan(Atom(R, (x, y)))
        assert eval_ra(Difference(e, e), Instance.of([Atom(R, (a, b))])).rows \
            == frozenset()

    def test_join_on_shared_attribute(self):
        i = Instance.of([Atom(A1, (a,)), Atom(R, (a, b)), Atom(R, (b, b))])
        joined = eval_ra(Join(BaseScan(Atom(A1, (x,))), BaseScan(Atom(R, (x, y)))), i)
        assert joined.rows == {(a, b)}

    def test_select_equality_and_disequality(self):
        i = Instance.of([Atom(R, (a, a)), Atom(R, (a, b))])
        scan = BaseScan(Atom(R, (x, y)))
        assert eval_ra(Select(scan, (("=", x, y),)), i).rows == {(a, a)}
        assert eval_ra(Select(scan, (("!=", x, y),)), i).rows == {(a, b)}

    def test_project_and_rename(self):
        i = Instance.of([Atom(R, (a, b))])
        proj = eval_ra(Project(BaseScan(Atom(R, (x, y))), (y,)), i)
        assert proj.attrs == (y,) and proj.rows == {(b,)}
        ren = eval_ra(Rename(BaseScan(Atom(R, (x, y))), ((x, Variable("z")),)), i)
        assert [v.name for v in ren.attrs] == ["z", "y"]

    def test_dom_scan_uses_eval_domain(self):
        rel = eval_ra(DomScan(x), Instance.of([]), eval_domain=(a, b))
        assert rel.rows == {(a,), (b,)}

    def test_union_requires_equal_attrs(self):
        with pytest.raises(InputError):
            Union(BaseScan(Atom(R, (x, y))), BaseScan(Atom(A1, (x,))))


class TestEvalDcq:
    def _unsafe(self):
        d1 = ConjunctiveQuery("d1", (x,), (Atom(A1, (x,)),))
        d2 = ConjunctiveQuery("d2", (y,), (Atom(B1, (y,)),))
        return DisjunctiveQuery("V", (x, y), (d1, d2))

    def test_safe_view_matches_cq_semantics(self, makesafe):
        t = makesafe.schema.relation("T")
        q = ConjunctiveQuery("d", (x, y), (Atom(t, (x, y)),))
        view = DisjunctiveQuery("W", (x, y), (q,))
        i = Instance.of([Atom(t, (a, b))])
        for pad in ((), (a, b, Constant("f1"))):
            assert eval_dcq(view, i, pad) == frozenset(enumerate_matches(q, i))

    def test_unsafe_disjunct_pads_missing_variables(self):
        v = self._unsafe()
        f1, f2 = Constant("f1"), Constant("f2")
        got = eval_dcq(v, Instance.of([Atom(A1, (a,))]), (a, f1, f2))
        assert got == {(a, a), (a, f1), (a, f2)}

    def test_empty_instance_yields_nothing(self):
        assert eval_dcq(self._unsafe(), Instance.of([]), (a, b)) == frozenset()

    def test_guard_filters_rows(self):
        d1 = ConjunctiveQuery("d1", (x, y), (Atom(R, (x, y)),))
        v = DisjunctiveQuery("V", (x, y), (d1,), disequalities=((x, y),))
        i = Instance.of([Atom(R, (a, a)), Atom(R, (a, b))])
        assert eval_dcq(v, i, (a, b)) == {(a, b)}


class TestPaddedDomain:
    def test_adds_arity_many_fresh_elements(self):
        i = Instance.of([Atom(R, (a, b))])
        dom = padded_domain([i], 2)
        assert set(dom) >= {a, b}
        assert len(dom) == 4
        assert padded_domain([i], 2) == dom

    def test_skips_taken_names(self):
        i = Instance.of([Atom(A1, (Constant("pad1"),))])
        dom = padded_domain([i], 1)
        assert len(dom) == 2 and len(set(dom)) == 2


class TestCompile:
    def test_makesafe_compiles_to_golden_listing(self, makesafe):
        compiled = compile_dcq_to_ra(makesafe.views["M"])
        got = [
            f"{v.name}({', '.join(a.name for a in v.definition.output_vars)})"
            f" := {to_lisp(v.definition.expr)}"
            for v in compiled]
        want = [
            line for line in GOLDEN.read_text().splitlines()
            if line and not line.startswith(";")]
        assert got == want

    def test_single_safe_disjunct_compiles_to_itself(self):
        d = ConjunctiveQuery("d", (x, y), (Atom(R, (x, y)),))
        view = View("V", "s", DisjunctiveQuery("V", (x, y), (d,)))
        compiled = compile_dcq_to_ra(view)
        assert len(compiled) == 1
        i = Instance.of([Atom(R, (a, b)), Atom(R, (b, a))])
        assert view_image(compiled[0], i) == {(a, b), (b, a)}

    def test_shuffle_view_compiles_with_disequality_guard(self, symmetric):
        q = symmetric.queries["Sym"]
        design = build_shuffle_views(q, symmetric.schema)
        left_discrete = next(
            b.view for b in design.bundles
            if b.view.source == "left" and len(b.eqtype.blocks) == 2)
        compiled = compile_dcq_to_ra(left_discrete)
        assert compiled
        listing = " ".join(to_lisp(v.definition.expr) for v in compiled)
        assert "!=" in listing

    def test_cq_view_is_rejected(self, example1):
        with pytest.raises(InputError):
            compile_dcq_to_ra(example1.views["CanonHospital"])


def _profile_key(views, inst, dom):
    return tuple(view_image(v, inst, dom) for v in views)


class TestSameEcr:
    def test_shuffle_view_agreement_matches_compiled_views(self, symmetric):
        q = symmetric.queries["Sym"]
        design = build_shuffle_views(q, symmetric.schema)
        left_discrete = next(
            b.view for b in design.bundles
            if b.view.source == "left" and len(b.eqtype.blocks) == 2)
        compiled = compile_dcq_to_ra(left_discrete)
        e = symmetric.schema.relation("E")
        pool = list(all_instances([e], constants(2), 2))
        arity = len(left_discrete.definition.head_vars)
        for i1 in pool:
            for i2 in pool:
                dom = padded_domain([i1, i2], arity)
                dcq_agree = (
                    view_image(left_discrete, i1, dom)
                    == view_image(left_discrete, i2, dom))
                ra_agree = all(
                    view_image(v, i1, dom) == view_image(v, i2, dom)
                    for v in compiled)
                assert dcq_agree == ra_agree


class TestViewImage:
    def test_dispatches_on_definition_kind(self, makesafe, example1):
        t = makesafe.schema.relation("T")
        i = Instance.of([Atom(t, (a, b))])
        compiled = compile_dcq_to_ra(makesafe.views["M"])
        s3 = next(v for v in compiled if v.name == "M_s3")
        assert view_image(s3, i) == {(a, b)}
        hosp = example1.views["CanonHospital"]
        trt = example1.schema.relation("Trtmnt")
        assert view_image(hosp, Instance.of(
            [Atom(trt, (a, b, a))])) == {(a, b)}
