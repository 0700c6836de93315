"""Relational algebra over named attributes, and the unsafe-DCQ compiler.

Disjunctive views whose disjuncts use different variable sets cannot be
written as a single algebra expression, but a family of expressions, one per
realized variable subset, carries exactly the same information: each member
reports the bindings realized by its subset's disjuncts and not already
implied by a strictly smaller subset. ``compile_dcq_to_ra`` builds that
family; agreement on the family coincides with agreement on the original
view under a padded evaluation domain.

Attributes are variables. Base relations are scanned through an atom
pattern, so repeated variables and constants in view bodies filter during
the scan. ``DomScan`` stands for the padded evaluation domain itself; it is
materialized only at evaluation time and is what lets a smaller disjunct be
stretched to a wider attribute set before subtraction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .homomorphism import enumerate_matches
from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DisjunctiveQuery,
    InputError,
    Instance,
    Term,
    Variable,
    View,
    active_domain,
    term_key,
)

# ---------------------------------------------------------------------------
# expressions


class RAExpr:
    """Base class; concrete nodes define ``attrs`` (ordered, distinct)."""

    attrs: tuple[Variable, ...]


def _check_distinct(attrs: Sequence[Variable], where: str) -> None:
    if len(set(attrs)) != len(attrs):
        raise InputError(f"{where}: duplicate attribute")


@dataclass(frozen=True)
class BaseScan(RAExpr):
    """Scan a relation through an atom pattern."""

    atom: Atom

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return self.atom.variables()


@dataclass(frozen=True)
class DomScan(RAExpr):
    """The evaluation domain as a unary relation."""

    var: Variable

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return (self.var,)


@dataclass(frozen=True)
class Join(RAExpr):
    left: RAExpr
    right: RAExpr

    @property
    def attrs(self) -> tuple[Variable, ...]:
        extra = tuple(v for v in self.right.attrs if v not in self.left.attrs)
        return self.left.attrs + extra


@dataclass(frozen=True)
class Project(RAExpr):
    expr: RAExpr
    on: tuple[Variable, ...]

    def __post_init__(self) -> None:
        _check_distinct(self.on, "project")
        missing = [v for v in self.on if v not in self.expr.attrs]
        if missing:
            raise InputError(f"project: {missing[0]} not in input attributes")

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return self.on


Condition = tuple[str, Term, Term]  # ("=" | "!=", operand, operand)


@dataclass(frozen=True)
class Select(RAExpr):
    expr: RAExpr
    conditions: tuple[Condition, ...]

    def __post_init__(self) -> None:
        for op, a, b in self.conditions:
            if op not in ("=", "!="):
                raise InputError(f"select: unknown operator {op!r}")
            for t in (a, b):
                if isinstance(t, Variable) and t not in self.expr.attrs:
                    raise InputError(f"select: {t} not in input attributes")

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return self.expr.attrs


def _require_same_attrs(left: RAExpr, right: RAExpr, where: str) -> None:
    if set(left.attrs) != set(right.attrs):
        raise InputError(f"{where}: operand attribute sets differ")


@dataclass(frozen=True)
class Union(RAExpr):
    left: RAExpr
    right: RAExpr

    def __post_init__(self) -> None:
        _require_same_attrs(self.left, self.right, "union")

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return self.left.attrs


@dataclass(frozen=True)
class Difference(RAExpr):
    left: RAExpr
    right: RAExpr

    def __post_init__(self) -> None:
        _require_same_attrs(self.left, self.right, "difference")

    @property
    def attrs(self) -> tuple[Variable, ...]:
        return self.left.attrs


@dataclass(frozen=True)
class Rename(RAExpr):
    expr: RAExpr
    mapping: tuple[tuple[Variable, Variable], ...]  # old -> new

    def __post_init__(self) -> None:
        olds = [o for o, _ in self.mapping]
        _check_distinct(olds, "rename")
        for o, _ in self.mapping:
            if o not in self.expr.attrs:
                raise InputError(f"rename: {o} not in input attributes")
        _check_distinct(self.attrs, "rename")

    @property
    def attrs(self) -> tuple[Variable, ...]:
        m = dict(self.mapping)
        return tuple(m.get(v, v) for v in self.expr.attrs)


@dataclass(frozen=True)
class RADefinition:
    """A view definition in algebra form."""

    expr: RAExpr
    output_vars: tuple[Variable, ...]

    def __post_init__(self) -> None:
        if set(self.output_vars) != set(self.expr.attrs):
            raise InputError("definition output does not match expression")

    def __str__(self) -> str:
        return to_lisp(self.expr)


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class RARelation:
    attrs: tuple[Variable, ...]
    rows: frozenset

    def reorder(self, attrs: Sequence[Variable]) -> "RARelation":
        if tuple(attrs) == self.attrs:
            return self
        pos = [self.attrs.index(v) for v in attrs]
        return RARelation(
            tuple(attrs), frozenset(tuple(r[p] for p in pos) for r in self.rows))


def eval_ra(
    expr: RAExpr, instance: Instance, eval_domain: Sequence[Term] = ()
) -> RARelation:
    """Standard set semantics; ``eval_domain`` feeds DomScan nodes."""
    if isinstance(expr, BaseScan):
        rows = set()
        for fact in instance.by_relation(expr.atom.relation.name):
            row = _match_pattern(expr.atom, fact)
            if row is not None:
                rows.add(row)
        return RARelation(expr.attrs, frozenset(rows))
    if isinstance(expr, DomScan):
        return RARelation(expr.attrs, frozenset((t,) for t in eval_domain))
    if isinstance(expr, Join):
        left = eval_ra(expr.left, instance, eval_domain)
        right = eval_ra(expr.right, instance, eval_domain)
        return _join(left, right)
    if isinstance(expr, Project):
        inner = eval_ra(expr.expr, instance, eval_domain)
        pos = [inner.attrs.index(v) for v in expr.on]
        return RARelation(
            expr.on, frozenset(tuple(r[p] for p in pos) for r in inner.rows))
    if isinstance(expr, Select):
        inner = eval_ra(expr.expr, instance, eval_domain)
        idx = {v: i for i, v in enumerate(inner.attrs)}

        def value(row, t):
            return row[idx[t]] if isinstance(t, Variable) else t

        rows = frozenset(
            r for r in inner.rows
            if all(
                (value(r, a) == value(r, b)) == (op == "=")
                for op, a, b in expr.conditions))
        return RARelation(inner.attrs, rows)
    if isinstance(expr, Union):
        left = eval_ra(expr.left, instance, eval_domain)
        right = eval_ra(expr.right, instance, eval_domain).reorder(left.attrs)
        return RARelation(left.attrs, left.rows | right.rows)
    if isinstance(expr, Difference):
        left = eval_ra(expr.left, instance, eval_domain)
        right = eval_ra(expr.right, instance, eval_domain).reorder(left.attrs)
        return RARelation(left.attrs, left.rows - right.rows)
    if isinstance(expr, Rename):
        inner = eval_ra(expr.expr, instance, eval_domain)
        m = dict(expr.mapping)
        return RARelation(tuple(m.get(v, v) for v in inner.attrs), inner.rows)
    raise InputError(f"unknown algebra node {type(expr).__name__}")


def _match_pattern(pattern: Atom, fact: Atom) -> Optional[tuple[Term, ...]]:
    bound: dict[Variable, Term] = {}
    for p, f in zip(pattern.args, fact.args):
        if isinstance(p, Variable):
            if bound.setdefault(p, f) != f:
                return None
        elif p != f:
            return None
    return tuple(bound[v] for v in pattern.variables())


def _join(left: RARelation, right: RARelation) -> RARelation:
    shared = [v for v in right.attrs if v in left.attrs]
    lpos = [left.attrs.index(v) for v in shared]
    rpos = [right.attrs.index(v) for v in shared]
    extra = [i for i, v in enumerate(right.attrs) if v not in left.attrs]
    index: dict[tuple, list] = {}
    for r in right.rows:
        index.setdefault(tuple(r[p] for p in rpos), []).append(
            tuple(r[i] for i in extra))
    rows = set()
    for l in left.rows:
        for tail in index.get(tuple(l[p] for p in lpos), ()):
            rows.add(l + tail)
    return RARelation(
        left.attrs + tuple(right.attrs[i] for i in extra), frozenset(rows))


# ---------------------------------------------------------------------------
# the safety compiler


def compile_dcq_to_ra(view: View) -> tuple[View, ...]:
    """One algebra view per realized variable subset.

    A subset's view unions its disjuncts' join expressions, subtracts the
    padded extensions of every strictly-smaller subset's disjuncts, and
    applies the guard conditions that live entirely inside the subset.
    Guard conditions reaching outside the subset are deliberately dropped:
    on the reconstruction side those positions carry either a copied value
    (equalities) or a fresh pad (disequalities), so they hold by choice of
    extension and filtering here would lose information.
    """
    dcq = view.definition
    if not isinstance(dcq, DisjunctiveQuery):
        raise InputError(f"view {view.name} is not a disjunctive view")
    realized: list[frozenset[Variable]] = []
    for d in dcq.disjuncts:
        s = frozenset(d.free_vars)
        if s not in realized:
            realized.append(s)
    out = []
    for k, subset in enumerate(realized, start=1):
        ordered = tuple(v for v in dcq.head_vars if v in subset)
        members = [d for d in dcq.disjuncts if frozenset(d.free_vars) == subset]
        expr: RAExpr = _union_all(
            [_reorder(_disjunct_expr(d), ordered) for d in members])
        smaller = [
            d for d in dcq.disjuncts
            if frozenset(d.free_vars) < subset]
        if smaller:
            expr = Difference(
                expr,
                _union_all(
                    [_extend(_disjunct_expr(d), ordered) for d in smaller]))
        conditions = tuple(
            (op, a, b)
            for op, pairs in (("=", dcq.equalities), ("!=", dcq.disequalities))
            for a, b in pairs
            if a in subset and b in subset)
        if conditions:
            expr = Select(expr, conditions)
        out.append(View(
            f"{view.name}_s{k}",
            view.source,
            RADefinition(expr, ordered)))
    return tuple(out)


def _disjunct_expr(d: ConjunctiveQuery) -> RAExpr:
    """Join of the disjunct's atoms projected onto its free variables, so
    existential body variables can never collide with head attributes."""
    expr: Optional[RAExpr] = None
    for atom in d.atoms:
        scan = BaseScan(atom)
        expr = scan if expr is None else Join(expr, scan)
    if expr is None:
        raise InputError(f"disjunct {d.name} has no atoms")
    return _reorder(expr, d.free_vars)


def _reorder(expr: RAExpr, ordered: tuple[Variable, ...]) -> RAExpr:
    if expr.attrs == ordered:
        return expr
    return Project(expr, ordered)


def _extend(expr: RAExpr, ordered: tuple[Variable, ...]) -> RAExpr:
    for v in ordered:
        if v not in expr.attrs:
            expr = Join(expr, DomScan(v))
    return _reorder(expr, ordered)


def _union_all(exprs: Sequence[RAExpr]) -> RAExpr:
    expr = exprs[0]
    for e in exprs[1:]:
        expr = Union(expr, e)
    return expr


# ---------------------------------------------------------------------------
# view images


def eval_dcq(
    dcq: DisjunctiveQuery, instance: Instance, eval_domain: Sequence[Term]
) -> frozenset:
    """Bindings of the full head over ``eval_domain`` passing the guard and
    some disjunct; head variables missing from the satisfied disjunct range
    over the whole domain."""
    rows = set()
    for d in dcq.disjuncts:
        missing = tuple(v for v in dcq.head_vars if v not in d.free_vars)
        for match in enumerate_matches(d, instance):
            base = dict(zip(d.free_vars, match))
            for pad in itertools.product(eval_domain, repeat=len(missing)):
                binding = dict(base)
                binding.update(zip(missing, pad))
                if dcq.guard_holds(binding):
                    rows.add(tuple(binding[v] for v in dcq.head_vars))
    return frozenset(rows)


def padded_domain(
    instances: Sequence[Instance], arity: int, extra: Iterable[Term] = ()
) -> tuple[Term, ...]:
    """Active domains of the given instances plus ``arity`` fresh constants.

    Fresh elements are named pad1, pad2, ... skipping collisions, so the
    result is deterministic for equal inputs."""
    adom = set(extra)
    for i in instances:
        adom |= active_domain(i)
    taken = {t.name for t in adom if isinstance(t, Constant)}
    fresh = []
    counter = 1
    while len(fresh) < arity:
        name = f"pad{counter}"
        counter += 1
        if name not in taken:
            fresh.append(Constant(name))
    return tuple(sorted(adom, key=term_key)) + tuple(fresh)


def view_image(
    view: View, instance: Instance, eval_domain: Sequence[Term] = ()
) -> frozenset:
    """The view's output rows on one source instance, aligned to
    ``view.output_vars``. CQ definitions ignore the evaluation domain."""
    d = view.definition
    if isinstance(d, ConjunctiveQuery):
        return frozenset(enumerate_matches(d, instance))
    if isinstance(d, DisjunctiveQuery):
        return eval_dcq(d, instance, eval_domain)
    if isinstance(d, RADefinition):
        return eval_ra(d.expr, instance, eval_domain).reorder(d.output_vars).rows
    raise InputError(f"view {view.name}: unknown definition kind")


# ---------------------------------------------------------------------------
# printing


def _term_str(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        return f'"{t.name}"'
    raise InputError(f"cannot print term {t!r} in algebra form")


def to_lisp(expr: RAExpr) -> str:
    if isinstance(expr, BaseScan):
        parts = [expr.atom.relation.name] + [_term_str(t) for t in expr.atom.args]
        return "(base " + " ".join(parts) + ")"
    if isinstance(expr, DomScan):
        return f"(dom {expr.var.name})"
    if isinstance(expr, Join):
        return f"(join {to_lisp(expr.left)} {to_lisp(expr.right)})"
    if isinstance(expr, Project):
        on = " ".join(v.name for v in expr.on)
        return f"(project {to_lisp(expr.expr)} {on})"
    if isinstance(expr, Select):
        conds = " ".join(
            f"({op} {_term_str(a)} {_term_str(b)})"
            for op, a, b in expr.conditions)
        return f"(select {to_lisp(expr.expr)} {conds})"
    if isinstance(expr, Union):
        return f"(union {to_lisp(expr.left)} {to_lisp(expr.right)})"
    if isinstance(expr, Difference):
        return f"(difference {to_lisp(expr.left)} {to_lisp(expr.right)})"
    if isinstance(expr, Rename):
        pairs = " ".join(f"({o.name} {n.name})" for o, n in expr.mapping)
        return f"(rename {to_lisp(expr.expr)} {pairs})"
    raise InputError(f"unknown algebra node {type(expr).__name__}")
