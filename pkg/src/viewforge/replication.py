"""Replication constraints and the synchronous-product view construction.

A replicated relation keeps one shared symbol whose content must coincide
at every owning source. This module provides the machinery for designs
that exploit replication: the synchronous product of two instances, the
product-with-canondb transformation (`str_transform`) that stretches an
instance without changing its query answer, the equivalence checkers built
from its iterates, and the existence test for a useful non-disclosing
design based on them. The equivalence-class views built here are not
expressible in relational algebra over the instance alone (they tell
apart isomorphic instances), so the deliverable is an executable checker
plus a demonstration bundle, not a query.

Pair terms enter instances only through this module. In serialized form a
pair is a two-element array, so an element reads ["a",["c_x","c_y"]]; a
plain string decodes to a constant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .homomorphism import cq_homomorphism, find_homomorphism, query_holds, verify_homomorphism
from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DInstance,
    DSchema,
    ExistentialRule,
    Instance,
    InputError,
    Pair,
    RelationSymbol,
    Term,
    Variable,
    atom_key,
    build_canondb,
    pair_height,
    term_key,
)


# ---------------------------------------------------------------------------
# synchronous product


def synchronous_product(i1: Instance, i2: Instance) -> Instance:
    """Pair the two instances relation by relation.

    R((x1,y1),...,(xn,yn)) holds exactly when R(x1..xn) is in i1 and
    R(y1..yn) is in i2. Both component projections are homomorphisms
    back onto the factors; see projection_map.
    """
    facts = []
    by_rel: dict[str, list[Atom]] = {}
    for f2 in i2.facts:
        by_rel.setdefault(f2.relation.name, []).append(f2)
    for f1 in i1.facts:
        for f2 in by_rel.get(f1.relation.name, ()):
            args = tuple(Pair(a, b) for a, b in zip(f1.args, f2.args))
            facts.append(Atom(f1.relation, args))
    return Instance(frozenset(facts))


def projection_map(product: Instance, component: int) -> dict[Term, Term]:
    """Explicit element mapping for one projection of a product instance.

    Covers every pair element occurring in the product; verify against a
    factor with verify_homomorphism, whose explicit entries override the
    default rigid treatment of pair terms.
    """
    if component not in (1, 2):
        raise InputError("projection component must be 1 or 2")
    mapping: dict[Term, Term] = {}
    for f in product.facts:
        for t in f.args:
            if isinstance(t, Pair):
                mapping[t] = t.left if component == 1 else t.right
    return mapping


# ---------------------------------------------------------------------------
# the stretching transformation


def _canon_local(q: ConjunctiveQuery, schema: DSchema, source: str) -> Instance:
    local = {r.name for r in schema.relations_of(source)}
    return build_canondb(q).restrict_relations(local)


def str_transform(d: DInstance, q: ConjunctiveQuery, schema: DSchema) -> DInstance:
    """Replace each local instance by its product with the canonical
    database of q, restricted to the relations the source holds.

    Replicated content stays aligned: every owning source pairs the same
    facts with the same canondb atoms. Any match of q survives (send each
    variable v to the pair of its old image and c_v), and the first
    projection is a homomorphism back, so q is preserved in both
    directions. On a nonempty replicated relation mentioned by q the
    minimal pair height of its elements grows by exactly one per
    application, which is what makes iterates distinguishable.
    """
    per = {
        s: synchronous_product(d.local(s), _canon_local(q, schema, s))
        for s in schema.sources
    }
    return DInstance.from_locals(schema, per)


def str_iterate(d: DInstance, q: ConjunctiveQuery, schema: DSchema, i: int) -> DInstance:
    if i < 0:
        raise InputError("iterate count must be nonnegative")
    cur = d
    for _ in range(i):
        cur = str_transform(cur, q, schema)
    return cur


def min_replicated_height(d: DInstance, schema: DSchema) -> Optional[int]:
    """Minimal pair height over elements of replicated-relation facts,
    or None when every replicated relation is empty."""
    heights = []
    replicated = {r.name for r in schema.replicated()}
    for _, inst in d.locals:
        for f in inst.facts:
            if f.relation.name in replicated:
                heights.extend(pair_height(t) for t in f.args)
    return min(heights) if heights else None


# ---------------------------------------------------------------------------
# equivalence checkers


@dataclass(frozen=True)
class SourceIterate:
    """Outcome of the per-source chain check between two local instances.

    forward is the least i with other = str^i(mine), backward the least i
    for the opposite direction; both None means the bound was exhausted
    without a hit.
    """

    source: str
    forward: Optional[int]
    backward: Optional[int]

    @property
    def equivalent(self) -> bool:
        return self.forward is not None or self.backward is not None


@dataclass(frozen=True)
class StrEquivalence:
    """Per-source and global verdicts for the iterate equivalences.

    equivalent is the per-source conjunction (each source may use its own
    iterate count and direction); globally_equivalent demands one count
    and direction shared by all sources. qi_consistent records whether
    the two verdicts coincide, checked only when the first instance
    satisfies q; the coincidence is the point of the construction when q
    mentions a relation replicated across every source.
    """

    per_source: tuple[SourceIterate, ...]
    equivalent: bool
    global_forward: Optional[int]
    global_backward: Optional[int]
    qi_consistent: Optional[bool]

    @property
    def globally_equivalent(self) -> bool:
        return self.global_forward is not None or self.global_backward is not None


def _chain_index(
    start: Instance, target: Instance, canon: Instance, max_iter: int
) -> Optional[int]:
    cur = start
    for i in range(max_iter + 1):
        if cur == target:
            return i
        cur = synchronous_product(cur, canon)
    return None


def str_equivalent(
    d: DInstance,
    d2: DInstance,
    q: ConjunctiveQuery,
    schema: DSchema,
    max_iter: int = 4,
) -> StrEquivalence:
    """Decide the iterate equivalences between two distributed instances.

    Per source the check walks the str chain from either side up to
    max_iter steps and reports the least hit. The global check walks the
    chain on whole distributed instances.
    """
    if max_iter < 0:
        raise InputError("max_iter must be nonnegative")
    per = []
    for s in schema.sources:
        canon = _canon_local(q, schema, s)
        fw = _chain_index(d.local(s), d2.local(s), canon, max_iter)
        bw = _chain_index(d2.local(s), d.local(s), canon, max_iter)
        per.append(SourceIterate(s, fw, bw))
    equivalent = all(it.equivalent for it in per)

    gfw = gbw = None
    cur = d
    for i in range(max_iter + 1):
        if cur == d2:
            gfw = i
            break
        cur = str_transform(cur, q, schema)
    cur = d2
    for i in range(max_iter + 1):
        if cur == d:
            gbw = i
            break
        cur = str_transform(cur, q, schema)

    qi: Optional[bool] = None
    if query_holds(q, d.merged()):
        qi = equivalent == (gfw is not None or gbw is not None)
    return StrEquivalence(tuple(per), equivalent, gfw, gbw, qi)


# ---------------------------------------------------------------------------
# existence of a useful non-disclosing design under full replication


@dataclass(frozen=True)
class ReplicationDesign:
    applicable: bool
    reason: str
    replicated_in_query: tuple[str, ...] = ()
    bundle: Optional[dict] = None

    def to_json(self) -> str:
        payload = {
            "applicable": self.applicable,
            "reason": self.reason,
            "replicated_in_query": list(self.replicated_in_query),
            "bundle": self.bundle,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _fully_replicated_in(q: ConjunctiveQuery, schema: DSchema) -> tuple[str, ...]:
    everywhere = set(schema.sources)
    names = []
    for a in q.atoms:
        r = a.relation
        if r.arity > 0 and set(r.sources) == everywhere and r.name not in names:
            names.append(r.name)
    return tuple(names)


def full_replication_design(
    q: ConjunctiveQuery,
    p: ConjunctiveQuery,
    schema: DSchema,
    max_iter: int = 3,
) -> ReplicationDesign:
    """Existence test for a useful, non-disclosing equivalence-class view
    when some relation of q is replicated at every source.

    Applicable needs two things: a positive-arity relation of q replicated
    across all sources (so per-source iterate counts are pinned together
    whenever q holds), and no homomorphism from the secret into q (so the
    stretched instance, which maps into canondb(q), can never satisfy the
    secret). The bundle demonstrates the mechanism on canondb(q) itself:
    the str iterates, their verified projection homomorphisms, query
    preservation along the chain, the secret failing on every stretched
    iterate, and the equivalence checker's verdicts.
    """
    if not (q.is_boolean and p.is_boolean):
        raise InputError("query and secret must be Boolean")
    replicated = _fully_replicated_in(q, schema)
    if not replicated:
        return ReplicationDesign(
            False,
            "no positive-arity relation of the query is replicated across "
            "all sources")
    hom = cq_homomorphism(p, q)
    if hom is not None:
        return ReplicationDesign(
            False,
            "the secret maps homomorphically into the query, so any useful "
            "views disclose it wherever the query holds",
            replicated)

    sample = DInstance.from_facts(schema, build_canondb(q).facts)
    iterates = [sample]
    for _ in range(max_iter):
        iterates.append(str_transform(iterates[-1], q, schema))

    projections = []
    for s in schema.sources:
        base = sample.local(s)
        canon = _canon_local(q, schema, s)
        stretched = iterates[1].local(s)
        for component, target in ((1, base), (2, canon)):
            mapping = projection_map(stretched, component)
            projections.append({
                "source": s,
                "component": component,
                "onto": "previous iterate" if component == 1 else "canondb",
                "mapping": [
                    [term_to_data(a), term_to_data(b)]
                    for a, b in sorted(mapping.items(),
                                       key=lambda kv: term_key(kv[0]))
                ],
                "verified": verify_homomorphism(
                    mapping, sorted(stretched.facts, key=atom_key), target),
            })

    heights = [min_replicated_height(i, schema) for i in iterates]
    secret_failures = [
        find_homomorphism(p.atoms, i.merged()) is None for i in iterates[1:]
    ]
    equiv = str_equivalent(sample, iterates[1], q, schema, max_iter)
    bundle = {
        "ecr": (
            "two distributed instances are equivalent when every source "
            "relates its local instances by some iterate of the product "
            "with canondb of the query; whenever the query holds, the "
            "shared replicated relation forces one simultaneous iterate, "
            "so equivalent instances agree on the query, while every "
            "stretched instance maps into canondb and so never satisfies "
            "the secret"
        ),
        "query_atoms": [str(a) for a in q.atoms],
        "secret_atoms": [str(a) for a in p.atoms],
        "iterates": [dinstance_to_data(i) for i in iterates],
        "min_replicated_pair_height": heights,
        "projections": projections,
        "query_preserved": [query_holds(q, i.merged()) for i in iterates],
        "secret_fails_on_stretched": secret_failures,
        "equivalence_check": {
            "per_source": [
                {"source": it.source, "forward": it.forward,
                 "backward": it.backward}
                for it in equiv.per_source
            ],
            "equivalent": equiv.equivalent,
            "global_forward": equiv.global_forward,
            "global_backward": equiv.global_backward,
            "qi_consistent": equiv.qi_consistent,
        },
    }
    return ReplicationDesign(True, "replicated relation pins a simultaneous "
                             "iterate and the stretched instances kill the "
                             "secret", replicated, bundle)


# ---------------------------------------------------------------------------
# lowering to rules, serialization


def replication_rules(schema: DSchema) -> tuple[ExistentialRule, ...]:
    """Inclusion rules stating both directions of content equality for each
    replicated relation, for engines that consume constraints as rules.

    Over a shared symbol both inclusions are self-inclusions, satisfied by
    construction; they exist so rule sets can name the constraint
    explicitly and stay well-formed if symbols are ever split per source.
    """
    rules = []
    for r in schema.replicated():
        args = tuple(Variable(f"x{i + 1}") for i in range(r.arity))
        atom = Atom(r, args)
        rules.append(ExistentialRule(f"repl_{r.name}_fwd", (atom,), (atom,)))
        rules.append(ExistentialRule(f"repl_{r.name}_bwd", (atom,), (atom,)))
    return tuple(rules)


def term_to_data(t: Term):
    """Constants to bare strings, pairs to two-element arrays."""
    if isinstance(t, Constant):
        return t.name
    if isinstance(t, Pair):
        return [term_to_data(t.left), term_to_data(t.right)]
    raise InputError(f"cannot serialize non-ground term {t}")


def data_to_term(x) -> Term:
    if isinstance(x, str):
        return Constant(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return Pair(data_to_term(x[0]), data_to_term(x[1]))
    raise InputError(f"malformed serialized term {x!r}")


def instance_to_data(i: Instance) -> dict[str, list]:
    out: dict[str, list] = {}
    for f in sorted(i.facts, key=atom_key):
        out.setdefault(f.relation.name, []).append(
            [term_to_data(t) for t in f.args])
    return out


def data_to_instance(schema: DSchema, data: Mapping[str, Sequence]) -> Instance:
    facts = []
    for name, rows in data.items():
        r = schema.relation(name)
        for row in rows:
            if len(row) != r.arity:
                raise InputError(
                    f"relation {name}: row of length {len(row)}, arity {r.arity}")
            facts.append(Atom(r, tuple(data_to_term(x) for x in row)))
    return Instance(frozenset(facts))


def dinstance_to_data(d: DInstance) -> dict[str, dict]:
    return {s: instance_to_data(inst) for s, inst in d.locals}


def data_to_dinstance(schema: DSchema, data: Mapping[str, Mapping]) -> DInstance:
    per = {s: data_to_instance(schema, rows) for s, rows in data.items()}
    return DInstance.from_locals(schema, per)
