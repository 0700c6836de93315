"""Core vocabulary: terms, schemas, atoms, queries, instances, rules, views.

Everything here is immutable. Construction validates shape (arities, variable
scoping) and raises InputError on malformed input; downstream engines can then
assume well-formedness.

Conventions used throughout the package:

* canonical databases freeze a variable ``v`` to the constant ``c_v``;
* labeled nulls are numbered by a per-invocation monotone counter and carry a
  readable hint such as ``n_3_y`` (step 3, head variable y);
* term order (for deterministic iteration) is constants < variables < nulls
  < pairs, each sorted by their payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class InputError(ValueError):
    """Malformed model-level input (arity mismatch, bad scoping, ...)."""


class Tri(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:  # pragma: no cover - guard against misuse
        raise TypeError("Tri verdicts must be compared explicitly")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Constant:
    name: str

    def __repr__(self) -> str:
        return f"Constant({self.name!r})"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    name: str

    def __repr__(self) -> str:
        return f"Variable({self.name!r})"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class LabeledNull:
    """A fresh unknown introduced by the chase. ``uid`` orders nulls globally
    within one top-level computation; ``hint`` is a human-readable tag."""

    uid: int
    hint: str = ""

    def __repr__(self) -> str:
        return f"LabeledNull({self.uid}, {self.hint!r})"

    def __str__(self) -> str:
        return self.hint or f"_n{self.uid}"


@dataclass(frozen=True)
class Pair:
    """Synchronous-product element combining one term from each factor."""

    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return f"({self.left},{self.right})"


Term = Union[Constant, Variable, LabeledNull, Pair]


def term_key(t: Term):
    """Total deterministic order on terms."""
    if isinstance(t, Constant):
        return (0, t.name)
    if isinstance(t, Variable):
        return (1, t.name)
    if isinstance(t, LabeledNull):
        return (2, t.uid)
    return (3, term_key(t.left), term_key(t.right))


def pair_height(t: Term) -> int:
    """Nesting depth of Pair structure; 0 for flat terms."""
    if isinstance(t, Pair):
        return 1 + max(pair_height(t.left), pair_height(t.right))
    return 0


class NullFactory:
    """Monotone counter for labeled nulls.

    One factory is created per top-level operation so outputs are
    reproducible; engines that chain several chase calls share a single
    factory to keep nulls globally fresh within the computation.
    """

    def __init__(self, start: int = 1) -> None:
        self._next = start

    def fresh(self, hint: str = "") -> LabeledNull:
        n = LabeledNull(self._next, hint)
        self._next += 1
        return n


def canon_constant(v: Variable) -> Constant:
    """The frozen image of a variable in a canonical database."""
    return Constant(f"c_{v.name}")


# ---------------------------------------------------------------------------
# Schema


@dataclass(frozen=True)
class RelationSymbol:
    """A relation owned by one source, or replicated across several.

    ``sources`` lists the owning sources; length one means local, length
    two or more means the relation is replicated with identical content
    required at every member source.
    """

    name: str
    arity: int
    sources: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise InputError(f"relation {self.name}: negative arity")
        if not self.sources:
            raise InputError(f"relation {self.name}: no owning source")

    @property
    def is_replicated(self) -> bool:
        return len(self.sources) > 1

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class DSchema:
    """A distributed schema: ordered sources, relations tagged by owner."""

    sources: tuple[str, ...]
    relations: tuple[RelationSymbol, ...]

    def __post_init__(self) -> None:
        if len(set(self.sources)) != len(self.sources):
            raise InputError("duplicate source identifiers")
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise InputError("duplicate relation names")
        for r in self.relations:
            for s in r.sources:
                if s not in self.sources:
                    raise InputError(
                        f"relation {r.name}: unknown source {s!r}")

    def relation(self, name: str) -> RelationSymbol:
        for r in self.relations:
            if r.name == name:
                return r
        raise InputError(f"unknown relation {name!r}")

    def has_relation(self, name: str) -> bool:
        return any(r.name == name for r in self.relations)

    def relations_of(self, source: str) -> tuple[RelationSymbol, ...]:
        """Local schema of a source, replicated relations included."""
        if source not in self.sources:
            raise InputError(f"unknown source {source!r}")
        return tuple(r for r in self.relations if source in r.sources)

    def replicated(self) -> tuple[RelationSymbol, ...]:
        return tuple(r for r in self.relations if r.is_replicated)


# ---------------------------------------------------------------------------
# Atoms and queries


@dataclass(frozen=True)
class Atom:
    relation: RelationSymbol
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.args) != self.relation.arity:
            raise InputError(
                f"atom {self.relation.name}: {len(self.args)} args, "
                f"arity {self.relation.arity}")

    def variables(self) -> tuple[Variable, ...]:
        """Variables in first-occurrence order."""
        seen: list[Variable] = []
        for a in self.args:
            if isinstance(a, Variable) and a not in seen:
                seen.append(a)
        return tuple(seen)

    def __str__(self) -> str:
        return f"{self.relation.name}({', '.join(map(str, self.args))})"


def atoms_variables(atoms: Iterable[Atom]) -> tuple[Variable, ...]:
    """Variables of an atom list in first-occurrence order."""
    seen: list[Variable] = []
    for at in atoms:
        for v in at.variables():
            if v not in seen:
                seen.append(v)
    return tuple(seen)


def atom_key(a: Atom):
    return (a.relation.name, tuple(term_key(t) for t in a.args))


@dataclass(frozen=True)
class ConjunctiveQuery:
    """A conjunctive query. Non-listed variables are existential.

    Zero atoms is the degenerate always-true query; it only arises
    internally (canonical context of a single-source query) and never from
    the parser.
    """

    name: str
    free_vars: tuple[Variable, ...]
    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if len(set(self.free_vars)) != len(self.free_vars):
            raise InputError(f"query {self.name}: duplicate head variable")
        body_vars = set(atoms_variables(self.atoms))
        for v in self.free_vars:
            if v not in body_vars:
                raise InputError(
                    f"query {self.name}: head variable {v} not in body")
        for at in self.atoms:
            for t in at.args:
                if isinstance(t, (LabeledNull, Pair)):
                    raise InputError(
                        f"query {self.name}: non-query term {t} in body")

    @property
    def is_boolean(self) -> bool:
        return not self.free_vars

    def variables(self) -> tuple[Variable, ...]:
        return atoms_variables(self.atoms)

    def existential_vars(self) -> tuple[Variable, ...]:
        frees = set(self.free_vars)
        return tuple(v for v in self.variables() if v not in frees)

    def __str__(self) -> str:
        head = f"{self.name}({', '.join(map(str, self.free_vars))})"
        body = ", ".join(map(str, self.atoms)) if self.atoms else "true"
        return f"{head} := {body}"


def boolean_closure(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Existentially close all free variables."""
    if q.is_boolean:
        return q
    return ConjunctiveQuery(q.name, (), q.atoms)


def substitute_term(sub: Mapping[Term, Term], t: Term) -> Term:
    if isinstance(t, Pair):
        return Pair(substitute_term(sub, t.left), substitute_term(sub, t.right))
    return sub.get(t, t)


def substitute_atom(sub: Mapping[Term, Term], a: Atom) -> Atom:
    return Atom(a.relation, tuple(substitute_term(sub, t) for t in a.args))


def substitute_atoms(sub: Mapping[Term, Term], atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    return tuple(substitute_atom(sub, a) for a in atoms)


@dataclass(frozen=True)
class DisjunctiveQuery:
    """A possibly-unsafe disjunction of CQs under an equality-type guard.

    ``head_vars`` is the full output variable list. Each disjunct is a CQ
    whose free variables form a subset of ``head_vars``; a disjunct need not
    mention every head variable, which is exactly the unsafe case. The guard
    is a list of equalities and disequalities over head variables.
    """

    name: str
    head_vars: tuple[Variable, ...]
    disjuncts: tuple[ConjunctiveQuery, ...]
    equalities: tuple[tuple[Variable, Variable], ...] = ()
    disequalities: tuple[tuple[Variable, Variable], ...] = ()

    def __post_init__(self) -> None:
        if not self.disjuncts:
            raise InputError(f"view {self.name}: no disjuncts")
        head = set(self.head_vars)
        if len(head) != len(self.head_vars):
            raise InputError(f"view {self.name}: duplicate head variable")
        for d in self.disjuncts:
            for v in d.free_vars:
                if v not in head:
                    raise InputError(
                        f"view {self.name}: disjunct variable {v} "
                        "missing from head")
        for x, y in self.equalities + self.disequalities:
            if x not in head or y not in head:
                raise InputError(
                    f"view {self.name}: guard over non-head variable")

    def guard_holds(self, binding: Mapping[Variable, Term]) -> bool:
        for x, y in self.equalities:
            if binding[x] != binding[y]:
                return False
        for x, y in self.disequalities:
            if binding[x] == binding[y]:
                return False
        return True

    def __str__(self) -> str:
        head = f"{self.name}({', '.join(map(str, self.head_vars))})"
        body = " | ".join(
            ", ".join(map(str, d.atoms)) if d.atoms else "true"
            for d in self.disjuncts)
        guards = [f"{x}={y}" for x, y in self.equalities]
        guards += [f"{x}!={y}" for x, y in self.disequalities]
        where = f" where {', '.join(guards)}" if guards else ""
        return f"{head} := {body}{where}"


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class Instance:
    """A set of ground facts (no variables)."""

    facts: frozenset[Atom]

    def __post_init__(self) -> None:
        for f in self.facts:
            for t in f.args:
                if isinstance(t, Variable):
                    raise InputError(f"instance fact {f} contains a variable")

    @staticmethod
    def of(facts: Iterable[Atom]) -> "Instance":
        return Instance(frozenset(facts))

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.sorted_facts())

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, fact: Atom) -> bool:
        return fact in self.facts

    def sorted_facts(self) -> list[Atom]:
        return sorted(self.facts, key=atom_key)

    def by_relation(self, name: str) -> list[Atom]:
        return sorted((f for f in self.facts if f.relation.name == name),
                      key=atom_key)

    def relation_names(self) -> list[str]:
        return sorted({f.relation.name for f in self.facts})

    def union(self, other: "Instance") -> "Instance":
        return Instance(self.facts | other.facts)

    def restrict_relations(self, names: Iterable[str]) -> "Instance":
        keep = set(names)
        return Instance(frozenset(
            f for f in self.facts if f.relation.name in keep))

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.sorted_facts()) + "}"


EMPTY_INSTANCE = Instance(frozenset())


def active_domain(i: Instance) -> frozenset[Term]:
    dom: set[Term] = set()
    for f in i.facts:
        dom.update(f.args)
    return frozenset(dom)


def substitute_instance(sub: Mapping[Term, Term], i: Instance) -> Instance:
    return Instance(frozenset(substitute_atom(sub, f) for f in i.facts))


def freeze_nulls(i: Instance, prefix: str = "k") -> Instance:
    """Promote labeled nulls to fresh distinct constants.

    Used to turn chase results into ordinary instances that can serve as
    witnesses; naming is deterministic in the null uid.
    """
    nulls = sorted(
        {t for f in i.facts for t in _terms_of(f) if isinstance(t, LabeledNull)},
        key=term_key)
    sub: dict[Term, Term] = {
        n: Constant(f"{prefix}{idx + 1}") for idx, n in enumerate(nulls)}
    return substitute_instance(sub, i)


def _terms_of(fact: Atom) -> Iterator[Term]:
    for t in fact.args:
        yield from _subterms(t)


def _subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Pair):
        yield from _subterms(t.left)
        yield from _subterms(t.right)


@dataclass(frozen=True)
class DInstance:
    """A distributed instance: one local instance per source.

    Stored per source so that replication violations are representable and
    detectable by validate_dschema; the convenience constructor from_facts
    places each fact at every source owning its relation, which is always
    replication-consistent.
    """

    schema: DSchema
    locals: tuple[tuple[str, Instance], ...]

    def __post_init__(self) -> None:
        names = [s for s, _ in self.locals]
        if names != sorted(self.schema.sources):
            raise InputError("d-instance must list every source exactly once")

    @staticmethod
    def from_locals(schema: DSchema, per_source: Mapping[str, Instance]) -> "DInstance":
        pairs = tuple(
            (s, per_source.get(s, EMPTY_INSTANCE))
            for s in sorted(schema.sources))
        return DInstance(schema, pairs)

    @staticmethod
    def from_facts(schema: DSchema, facts: Iterable[Atom]) -> "DInstance":
        per: dict[str, set[Atom]] = {s: set() for s in schema.sources}
        for f in facts:
            for s in f.relation.sources:
                per[s].add(f)
        return DInstance.from_locals(
            schema, {s: Instance(frozenset(fs)) for s, fs in per.items()})

    def local(self, source: str) -> Instance:
        for s, inst in self.locals:
            if s == source:
                return inst
        raise InputError(f"unknown source {source!r}")

    def merged(self) -> Instance:
        all_facts: set[Atom] = set()
        for _, inst in self.locals:
            all_facts |= inst.facts
        return Instance(frozenset(all_facts))

    def __str__(self) -> str:
        return "; ".join(f"{s}: {inst}" for s, inst in self.locals)


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True)
class ExistentialRule:
    """body -> exists(head vars not in body) head."""

    name: str
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.body or not self.head:
            raise InputError(f"rule {self.name}: empty body or head")

    def body_vars(self) -> tuple[Variable, ...]:
        return atoms_variables(self.body)

    def head_vars(self) -> tuple[Variable, ...]:
        return atoms_variables(self.head)

    def existential_vars(self) -> tuple[Variable, ...]:
        bv = set(self.body_vars())
        return tuple(v for v in self.head_vars() if v not in bv)

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        ex = self.existential_vars()
        prefix = f"exists {', '.join(map(str, ex))} . " if ex else ""
        head = ", ".join(map(str, self.head))
        return f"{self.name}: {body} -> {prefix}{head}"


@dataclass(frozen=True)
class EqualityRule:
    """body -> lhs = rhs, with lhs/rhs body variables or constants."""

    name: str
    body: tuple[Atom, ...]
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if not self.body:
            raise InputError(f"rule {self.name}: empty body")
        bv = set(atoms_variables(self.body))
        for t in (self.lhs, self.rhs):
            if isinstance(t, Variable) and t not in bv:
                raise InputError(
                    f"rule {self.name}: equality over non-body variable {t}")
            if isinstance(t, (LabeledNull, Pair)):
                raise InputError(f"rule {self.name}: bad equality term {t}")

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        return f"{self.name}: {body} -> {self.lhs} = {self.rhs}"


Rule = Union[ExistentialRule, EqualityRule]


# ---------------------------------------------------------------------------
# Views


@dataclass(frozen=True)
class View:
    """A named view reading exactly one source.

    The definition is a ConjunctiveQuery, a DisjunctiveQuery, or a compiled
    relational-algebra definition (see the ra module); output arity is the
    number of free variables of the definition.
    """

    name: str
    source: str
    definition: object

    @property
    def output_vars(self) -> tuple[Variable, ...]:
        d = self.definition
        if isinstance(d, ConjunctiveQuery):
            return d.free_vars
        if isinstance(d, DisjunctiveQuery):
            return d.head_vars
        return d.output_vars  # RA definitions carry their own list

    @property
    def arity(self) -> int:
        return len(self.output_vars)

    def __str__(self) -> str:
        return f"{self.name}@{self.source}: {self.definition}"


@dataclass(frozen=True)
class DView:
    """A distributed view: a tuple of single-source views."""

    views: tuple[View, ...]

    def __post_init__(self) -> None:
        names = [v.name for v in self.views]
        if len(set(names)) != len(names):
            raise InputError("duplicate view name in d-view")

    def __iter__(self) -> Iterator[View]:
        return iter(self.views)

    def __len__(self) -> int:
        return len(self.views)

    def of_source(self, source: str) -> tuple[View, ...]:
        return tuple(v for v in self.views if v.source == source)


# ---------------------------------------------------------------------------
# Canonical databases and validation


def build_canondb(q: ConjunctiveQuery) -> Instance:
    """Freeze each variable v of q to the constant c_v, one fact per atom."""
    sub: dict[Term, Term] = {v: canon_constant(v) for v in q.variables()}
    return Instance(frozenset(substitute_atoms(sub, q.atoms)))


def canondb_pinning(q: ConjunctiveQuery) -> dict[Variable, Constant]:
    """The frozen images of q's free variables, for pinned matching."""
    return {v: canon_constant(v) for v in q.free_vars}


def validate_dschema(schema: DSchema, dinst: Optional[DInstance] = None) -> list[str]:
    """Structural checks; returns human-readable violations, empty = valid.

    With an instance: ownership (facts only at owning sources), arity (atom
    construction enforces it, rechecked defensively), and replication
    consistency (same fact set at every member source).
    """
    problems: list[str] = []
    if not schema.sources:
        problems.append("schema has no sources")
    for r in schema.relations:
        if r.is_replicated and len(set(r.sources)) < 2:
            problems.append(f"relation {r.name}: replication needs >=2 distinct sources")
    if dinst is None:
        return problems
    if dinst.schema != schema:
        problems.append("d-instance built against a different schema")
        return problems
    for s, inst in dinst.locals:
        for f in inst.facts:
            if not schema.has_relation(f.relation.name):
                problems.append(f"source {s}: fact {f} over unknown relation")
                continue
            declared = schema.relation(f.relation.name)
            if f.relation != declared:
                problems.append(
                    f"source {s}: fact {f} disagrees with declared "
                    f"{declared}")
            elif s not in declared.sources:
                problems.append(
                    f"source {s}: fact {f} stored at non-owning source")
    for r in schema.replicated():
        images = {}
        for s in r.sources:
            images[s] = frozenset(
                f for f in dinst.local(s).facts if f.relation.name == r.name)
        baseline = images[r.sources[0]]
        for s in r.sources[1:]:
            if images[s] != baseline:
                problems.append(
                    f"replicated relation {r.name}: content differs between "
                    f"{r.sources[0]} and {s}")
    return problems
