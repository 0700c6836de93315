"""Shuffle views: disjunctive views invariant under frontier self-maps.

A shuffle is a total map from a canonical view's frontier (its source-join
variables) to itself. Relative to an equality type tau (a partition of the
frontier), a shuffle mu is invariant when the canonical context still entails
the shuffled context at tau's most general binding; the guarded disjunction
of all invariant shuffles' view bodies is then exactly as informative as
membership in the (s,Q)-equivalence class, which is what makes these views
the minimally informative useful ones beyond the conjunctive class.

Invariance relative to tau is decided once, at the most general binding
sigma_tau (one fresh constant per block): any binding that satisfies tau
factors through sigma_tau by merging block constants, and homomorphisms
transport along that merge. Per-match checks in ``shuffle_equivalent`` use
the match's own equality type, which is the exact per-binding notion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .chase import ChaseConfig, run_chase
from .homomorphism import enumerate_matches, find_homomorphism
from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DSchema,
    DisjunctiveQuery,
    DView,
    ExistentialRule,
    InputError,
    Instance,
    Term,
    Tri,
    Variable,
    View,
    atoms_variables,
    canon_constant,
    substitute_atoms,
)
from .canonical import canonical_context, canonical_view, sjvars

MAX_FRONTIER = 6


class TooManyFrontierVars(InputError):
    """Raised when a frontier exceeds the enumeration cap."""


@dataclass(frozen=True)
class EqualityType:
    """A partition of the frontier variables, blocks in first-occurrence
    order."""

    blocks: tuple[tuple[Variable, ...], ...]

    def __post_init__(self) -> None:
        seen: set[Variable] = set()
        for block in self.blocks:
            if not block:
                raise InputError("equality type with an empty block")
            for v in block:
                if v in seen:
                    raise InputError(f"variable {v} in two blocks")
                seen.add(v)

    @property
    def frontier(self) -> tuple[Variable, ...]:
        return tuple(v for block in self.blocks for v in block)

    def block_index(self, v: Variable) -> int:
        for i, block in enumerate(self.blocks):
            if v in block:
                return i
        raise KeyError(v)

    def binding(self) -> dict[Variable, Constant]:
        """The most general binding sigma_tau: one fresh constant per
        block, named after the block's representative."""
        out: dict[Variable, Constant] = {}
        for i, block in enumerate(self.blocks):
            c = Constant(f"grp{i + 1}_{block[0].name}")
            for v in block:
                out[v] = c
        return out

    def equalities(self) -> tuple[tuple[Variable, Variable], ...]:
        pairs = []
        for block in self.blocks:
            pairs.extend((block[0], v) for v in block[1:])
        return tuple(pairs)

    def disequalities(self) -> tuple[tuple[Variable, Variable], ...]:
        reps = [block[0] for block in self.blocks]
        return tuple(
            (reps[i], reps[j])
            for i in range(len(reps))
            for j in range(i + 1, len(reps)))

    def __str__(self) -> str:
        return "".join(
            "{" + ",".join(v.name for v in block) + "}"
            for block in self.blocks) or "{}"


@dataclass(frozen=True)
class Shuffle:
    """A total self-map of the frontier, stored as parallel tuples."""

    frontier: tuple[Variable, ...]
    images: tuple[Variable, ...]

    def __post_init__(self) -> None:
        if len(self.frontier) != len(self.images):
            raise InputError("shuffle arity mismatch")
        carrier = set(self.frontier)
        for v in self.images:
            if v not in carrier:
                raise InputError(f"shuffle image {v} outside the frontier")

    def mapping(self) -> dict[Variable, Variable]:
        return dict(zip(self.frontier, self.images))

    @property
    def is_identity(self) -> bool:
        return self.frontier == self.images

    def apply(self, atoms: Sequence[Atom]) -> tuple[Atom, ...]:
        return substitute_atoms(self.mapping(), atoms)

    def class_key(self, tau: EqualityType) -> tuple[int, ...]:
        """Shuffles with equal keys coincide after sigma_tau."""
        return tuple(tau.block_index(w) for w in self.images)

    def __str__(self) -> str:
        return (
            "("
            + ", ".join(
                f"{v.name}>{w.name}" for v, w in zip(self.frontier, self.images))
            + ")")


def _frontier(q: ConjunctiveQuery, schema: DSchema, source: str) -> tuple[Variable, ...]:
    if q.free_vars:
        raise InputError(
            f"shuffle views are defined for Boolean queries; {q.name} has "
            "free variables")
    return sjvars(q, schema, source)


def enumerate_types_and_shuffles(
    q: ConjunctiveQuery,
    source: str,
    schema: DSchema,
    max_frontier: int = MAX_FRONTIER,
) -> tuple[tuple[EqualityType, ...], tuple[Shuffle, ...]]:
    """All set partitions and all self-maps of the frontier, in a fixed
    order (partitions by restricted growth string, maps lexicographically)."""
    frontier = _frontier(q, schema, source)
    if len(frontier) > max_frontier:
        raise TooManyFrontierVars(
            f"{len(frontier)} frontier variables at {source}, cap is "
            f"{max_frontier}")
    types = tuple(
        EqualityType(blocks) for blocks in _partitions(frontier))
    shuffles = tuple(
        Shuffle(frontier, tuple(frontier[i] for i in picks))
        for picks in itertools.product(range(len(frontier)), repeat=len(frontier)))
    if not frontier:
        shuffles = (Shuffle((), ()),)
    return types, shuffles


def _partitions(vs: tuple[Variable, ...]) -> list[tuple[tuple[Variable, ...], ...]]:
    if not vs:
        return [()]
    out = []
    for smaller in _partitions(vs[:-1]):
        v = vs[-1]
        for i in range(len(smaller)):
            out.append(smaller[:i] + (smaller[i] + (v,),) + smaller[i + 1:])
        out.append(smaller + ((v,),))
    # Restricted-growth order: partitions keeping v with earlier blocks first.
    return out


def _sigma_instance(
    ctx: ConjunctiveQuery, sigma: Mapping[Variable, Constant]
) -> Instance:
    """Canonical database of the context under sigma: block constants stay,
    remaining variables freeze."""
    atoms = substitute_atoms(dict(sigma), ctx.atoms)
    frozen = {v: canon_constant(v) for v in atoms_variables(atoms)}
    return Instance.of(substitute_atoms(frozen, atoms))


def is_invariant_shuffle(
    mu: Shuffle,
    tau: EqualityType,
    q: ConjunctiveQuery,
    source: str,
    schema: DSchema,
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
) -> Tri:
    """Does the context entail its mu-image at tau's most general binding?

    Without rules the check is a single homomorphism search and always
    decides. With rules the target is chased first; fuel exhaustion can
    leave the answer open, but a match inside the partial chase still
    certifies Yes because existential rules only add facts.
    """
    ctx = canonical_context(q, schema, source)
    sigma = tau.binding()
    for c in sigma.values():
        if any(c in a.args for a in ctx.atoms):
            raise InputError(f"context mentions reserved constant {c}")
    src_atoms = substitute_atoms(dict(sigma), mu.apply(ctx.atoms))
    target = _sigma_instance(ctx, sigma)
    if find_homomorphism(src_atoms, target) is not None:
        return Tri.YES
    if not rules:
        return Tri.NO
    result = run_chase(target, tuple(rules), cfg or ChaseConfig())
    if find_homomorphism(src_atoms, result.instance) is not None:
        return Tri.YES
    return Tri.NO if result.completed else Tri.UNKNOWN


@dataclass(frozen=True)
class ShuffleClass:
    """One equivalence class of shuffles modulo tau, with its invariance
    verdict at sigma_tau."""

    representative: Shuffle
    key: tuple[int, ...]
    invariant: Tri


def invariant_classes(
    tau: EqualityType,
    q: ConjunctiveQuery,
    source: str,
    schema: DSchema,
    shuffles: Sequence[Shuffle],
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
) -> tuple[ShuffleClass, ...]:
    """Group shuffles modulo tau and decide invariance once per class.

    The identity's class is always listed first and always Yes."""
    identity = next(s for s in shuffles if s.is_identity)
    ident_key = identity.class_key(tau)
    reps: dict[tuple[int, ...], Shuffle] = {ident_key: identity}
    order = [ident_key]
    for mu in shuffles:
        key = mu.class_key(tau)
        if key not in reps:
            reps[key] = mu
            order.append(key)
    out = []
    for key in order:
        mu = reps[key]
        verdict = (
            Tri.YES
            if key == ident_key
            else is_invariant_shuffle(mu, tau, q, source, schema, rules, cfg))
        out.append(ShuffleClass(mu, key, verdict))
    return tuple(out)


@dataclass(frozen=True)
class ShuffleViewBundle:
    """A built shuffle view plus the bookkeeping behind it."""

    view: View
    eqtype: EqualityType
    shuffles: tuple[Shuffle, ...]
    undecided: tuple[Shuffle, ...]


@dataclass(frozen=True)
class ShuffleDesign:
    bundles: tuple[ShuffleViewBundle, ...]

    def dview(self) -> DView:
        return DView(tuple(b.view for b in self.bundles))

    @property
    def has_undecided(self) -> bool:
        return any(b.undecided for b in self.bundles)


def build_shuffle_views(
    q: ConjunctiveQuery,
    schema: DSchema,
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
    max_frontier: int = MAX_FRONTIER,
) -> ShuffleDesign:
    """One guarded disjunctive view per (source, equality type).

    Disjuncts are the invariant shuffles' images of the canonical view,
    deduplicated modulo the type, identity first. Shuffles whose invariance
    stayed open under rules are reported but not included as disjuncts.
    """
    bundles = []
    for source in schema.sources:
        if not any(source in a.relation.sources for a in q.atoms):
            continue
        canonv = canonical_view(q, schema, source).definition
        types, shuffles = enumerate_types_and_shuffles(
            q, source, schema, max_frontier)
        for t_index, tau in enumerate(types, start=1):
            classes = invariant_classes(
                tau, q, source, schema, shuffles, rules, cfg)
            included = [c.representative for c in classes if c.invariant is Tri.YES]
            undecided = tuple(
                c.representative for c in classes if c.invariant is Tri.UNKNOWN)
            name = f"shuffle_{source}_t{t_index}"
            disjuncts = tuple(
                ConjunctiveQuery(
                    f"{name}_d{k}",
                    _image_frees(canonv.free_vars, mu),
                    mu.apply(canonv.atoms))
                for k, mu in enumerate(included, start=1))
            dcq = DisjunctiveQuery(
                name,
                canonv.free_vars,
                disjuncts,
                equalities=tau.equalities(),
                disequalities=tau.disequalities())
            bundles.append(ShuffleViewBundle(
                View(name, source, dcq), tau, tuple(included), undecided))
    return ShuffleDesign(tuple(bundles))


def _image_frees(
    frontier: tuple[Variable, ...], mu: Shuffle
) -> tuple[Variable, ...]:
    images = set(mu.mapping()[v] for v in frontier) if frontier else set()
    return tuple(v for v in frontier if v in images)


@dataclass(frozen=True)
class MatchCover:
    """How one match of the canonical view on one side was (or was not)
    matched on the other side."""

    side: int
    match: tuple[tuple[Variable, Term], ...]
    eqtype: EqualityType
    shuffle: Optional[Shuffle]
    undecided: bool


@dataclass(frozen=True)
class ShuffleEquivalence:
    verdict: Tri
    covers: tuple[MatchCover, ...]
    witness: Optional[MatchCover]


def shuffle_equivalent(
    i1: Instance,
    i2: Instance,
    q: ConjunctiveQuery,
    source: str,
    schema: DSchema,
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
    max_frontier: int = MAX_FRONTIER,
) -> ShuffleEquivalence:
    """Decide (source, q)-equivalence of two source instances.

    Each match of the canonical view on one side must be reachable on the
    other side through some shuffle invariant at the match's own equality
    type, and symmetrically. No witnessing shuffle and none undecided on
    some match refutes equivalence with that match as witness.
    """
    canonv = canonical_view(q, schema, source).definition
    frontier = _frontier(q, schema, source)
    _, shuffles = enumerate_types_and_shuffles(q, source, schema, max_frontier)
    classes_at: dict[tuple[tuple[Variable, ...], ...], tuple[ShuffleClass, ...]] = {}
    covers = []
    witness = None
    saw_unknown = False
    for side, a, b in ((1, i1, i2), (2, i2, i1)):
        for row in enumerate_matches(canonv, a):
            match = dict(zip(frontier, row))
            tau = _type_of_match(frontier, match)
            if tau.blocks not in classes_at:
                classes_at[tau.blocks] = invariant_classes(
                    tau, q, source, schema, shuffles, rules, cfg)
            covering = None
            undecided_hit = False
            for cls in classes_at[tau.blocks]:
                if cls.invariant is Tri.NO:
                    continue
                mu = cls.representative
                pinned = {v: match[mu.mapping()[v]] for v in frontier}
                if find_homomorphism(canonv.atoms, b, pinned=pinned) is None:
                    continue
                if cls.invariant is Tri.YES:
                    covering = mu
                    break
                undecided_hit = True
            cover = MatchCover(
                side, tuple(zip(frontier, row)), tau, covering, undecided_hit)
            covers.append(cover)
            if covering is None:
                if undecided_hit:
                    saw_unknown = True
                else:
                    witness = cover
    if witness is not None:
        return ShuffleEquivalence(Tri.NO, tuple(covers), witness)
    if saw_unknown:
        return ShuffleEquivalence(Tri.UNKNOWN, tuple(covers), None)
    return ShuffleEquivalence(Tri.YES, tuple(covers), None)


def _type_of_match(
    frontier: tuple[Variable, ...], match: Mapping[Variable, Term]
) -> EqualityType:
    blocks: list[list[Variable]] = []
    values: list[Term] = []
    for v in frontier:
        image = match[v]
        for block, val in zip(blocks, values):
            if val == image:
                block.append(v)
                break
        else:
            blocks.append([v])
            values.append(image)
    return EqualityType(tuple(tuple(b) for b in blocks))


def has_only_trivial_shuffles(
    q: ConjunctiveQuery,
    schema: DSchema,
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
    max_frontier: int = MAX_FRONTIER,
) -> Tri:
    """Yes when, at every source and type, only the identity class is
    invariant. Such queries get nothing from the disjunctive class: the
    canonical views already decide (s,q)-equivalence."""
    saw_unknown = False
    for source in schema.sources:
        if not any(source in a.relation.sources for a in q.atoms):
            continue
        types, shuffles = enumerate_types_and_shuffles(
            q, source, schema, max_frontier)
        for tau in types:
            for cls in invariant_classes(
                    tau, q, source, schema, shuffles, rules, cfg):
                if cls.representative.is_identity:
                    continue
                if cls.invariant is Tri.YES:
                    return Tri.NO
                if cls.invariant is Tri.UNKNOWN:
                    saw_unknown = True
    return Tri.UNKNOWN if saw_unknown else Tri.YES
