"""Certain-answer non-disclosure at the critical instance.

A set of conjunctive views discloses a secret exactly when it does so at the
single-element instance where every relation holds. Deciding that takes one
terminating chase: start from the views' image of the critical instance
(one all-star tuple each), fire each inverse view definition once, then
repeatedly collapse to star every element that some view body forces to
produce an output, because each view's output is known to be exactly the
star tuple. The secret is disclosed exactly when it matches the final
instance with its free variables on star; otherwise the final instance
itself, nulls promoted to fresh constants, is an instance other than the
critical one with the same view image and the secret false, which is the
formal content of a NonDisclosing verdict and is re-validated on every run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .chase import ChaseConfig, rules_satisfied
from .homomorphism import (
    Assignment,
    all_homomorphisms,
    enumerate_matches,
    find_homomorphism,
)
from .minimization import RuleMinimization, entails_under_rules, minimize_under_rules
from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DInstance,
    DSchema,
    DView,
    ExistentialRule,
    InputError,
    Instance,
    LabeledNull,
    NullFactory,
    Rule,
    Term,
    Tri,
    View,
    freeze_nulls,
    substitute_instance,
    term_key,
)
from .canonical import canonical_dview, canonical_view
from .oracle import enumerate_dinstances, views_agree
from .ra import padded_domain, view_image

STAR = Constant("*")


def critical_instance(schema: DSchema) -> DInstance:
    """One all-star fact per relation; trivially replication-consistent."""
    return DInstance.from_facts(
        schema,
        (Atom(r, (STAR,) * r.arity) for r in schema.relations))


class DisclosureStatus(Enum):
    DISCLOSING = "Disclosing"
    NON_DISCLOSING = "NonDisclosing"


@dataclass(frozen=True)
class DisclosureVerdict:
    status: DisclosureStatus
    chase_instance: Instance
    secret_match: Optional[Assignment] = None
    witness: Optional[DInstance] = None
    witness_problems: tuple[str, ...] = ()

    @property
    def disclosing(self) -> bool:
        return self.status is DisclosureStatus.DISCLOSING


def _cq_definition(view: View) -> ConjunctiveQuery:
    if not isinstance(view.definition, ConjunctiveQuery):
        raise InputError(
            f"view {view.name}: the critical-instance procedure needs "
            "conjunctive definitions")
    return view.definition


def check_un_disclosure_cq(
    dview: DView, p: ConjunctiveQuery, schema: DSchema
) -> DisclosureVerdict:
    """Decide whether the views' certain answers reveal the secret.

    Free variables of the secret are pinned to star: at the critical
    instance the star tuple is the only answer that could ever become
    certain.
    """
    definitions = [(v, _cq_definition(v)) for v in dview.views]
    nulls = NullFactory()
    facts: set[Atom] = set()
    for view, defn in definitions:
        binding: dict[Term, Term] = {v: STAR for v in defn.free_vars}
        for var in defn.variables():
            if var not in binding:
                binding[var] = nulls.fresh(f"{view.name}_{var.name}")
        for atom in defn.atoms:
            facts.add(Atom(
                atom.relation,
                tuple(binding.get(t, t) for t in atom.args)))
    working = Instance(frozenset(facts))

    # Exactness: every body match must output the star tuple, so any
    # non-star head image collapses. Only nulls can appear there; merging
    # them to star never clashes and strictly shrinks the term universe.
    while True:
        merge: dict[Term, Term] = {}
        for _, defn in definitions:
            for hom in all_homomorphisms(defn.atoms, working):
                for v in defn.free_vars:
                    image = hom[v]
                    if image == STAR or image in merge:
                        continue
                    if not isinstance(image, LabeledNull):
                        raise InputError(
                            f"exactness would equate constant {image} "
                            "with star")
                    merge[image] = STAR
        if not merge:
            break
        working = substitute_instance(merge, working)

    match = find_homomorphism(
        p.atoms, working, pinned={v: STAR for v in p.free_vars})
    if match is not None:
        return DisclosureVerdict(
            DisclosureStatus.DISCLOSING, working, secret_match=match)

    witness = DInstance.from_facts(schema, freeze_nulls(working, "w").facts)
    problems = validate_escape_witness(dview, p, schema, witness)
    return DisclosureVerdict(
        DisclosureStatus.NON_DISCLOSING, working,
        witness=witness, witness_problems=problems)


def validate_escape_witness(
    dview: DView, p: ConjunctiveQuery, schema: DSchema, witness: DInstance
) -> tuple[str, ...]:
    """Independent check that the witness ties with the critical instance
    on every view and makes the secret false."""
    problems = []
    critical = critical_instance(schema)
    for view in dview.views:
        defn = _cq_definition(view)
        want = frozenset(enumerate_matches(defn, critical.local(view.source)))
        got = frozenset(enumerate_matches(defn, witness.local(view.source)))
        if want != got:
            problems.append(
                f"view {view.name}: witness image {sorted(map(str, got))} "
                f"differs from critical image {sorted(map(str, want))}")
    if find_homomorphism(
            p.atoms, witness.merged(),
            pinned={v: STAR for v in p.free_vars}) is not None:
        problems.append("secret still matches the witness on star")
    return tuple(problems)


# ---------------------------------------------------------------------------
# the design question for the conjunctive class


@dataclass(frozen=True)
class SourceVerdict:
    source: str
    secret_view: ConjunctiveQuery
    verdict: DisclosureVerdict


@dataclass(frozen=True)
class UsefulNonDisclosing:
    answer: Tri
    stage: str
    design: Optional[DView] = None
    minimized: Optional[ConjunctiveQuery] = None
    per_source: tuple[SourceVerdict, ...] = ()
    direct: Optional[DisclosureVerdict] = None
    decomposition_consistent: Optional[bool] = None


def exists_useful_nondisclosing_cq(
    q: ConjunctiveQuery,
    p: ConjunctiveQuery,
    schema: DSchema,
    rules: Sequence[ExistentialRule] = (),
    cfg: Optional[ChaseConfig] = None,
) -> UsefulNonDisclosing:
    """Is there a conjunctive d-view useful for q and non-disclosing for p?

    The canonical d-view of the minimized query decides the whole class:
    it is the least informative useful choice, so if it discloses the
    secret's projection at every source, everything useful does. The
    answer is Yes exactly when some source's projection of the secret
    survives, and the canonical d-view itself is the returned design.

    Free variables ride along under the naming conventions used
    everywhere else: the canonical views keep them exposed, entailment
    pins them by name, and disclosure pins them to star.
    """
    entailed = entails_under_rules(q, p, rules, cfg)
    if entailed is Tri.YES:
        return UsefulNonDisclosing(Tri.NO, "secret entailed by the query")
    mres = minimize_under_rules(q, rules, cfg)
    if mres.status is Tri.UNKNOWN:
        return UsefulNonDisclosing(Tri.UNKNOWN, "minimization")
    minq = mres.query
    cdv = canonical_dview(minq, schema)
    per_source = []
    answer = Tri.NO
    for source in schema.sources:
        if not any(source in a.relation.sources for a in p.atoms):
            continue
        secret_view = canonical_view(p, schema, source).definition
        verdict = check_un_disclosure_cq(cdv, secret_view, schema)
        per_source.append(SourceVerdict(source, secret_view, verdict))
        if not verdict.disclosing:
            answer = Tri.YES
    direct = check_un_disclosure_cq(cdv, p, schema)
    consistent = direct.disclosing == all(
        sv.verdict.disclosing for sv in per_source)
    return UsefulNonDisclosing(
        answer,
        "per-source decomposition",
        design=cdv if answer is Tri.YES else None,
        minimized=minq,
        per_source=tuple(per_source),
        direct=direct,
        decomposition_consistent=consistent)


# ---------------------------------------------------------------------------
# bounded oracle


@dataclass(frozen=True)
class BoundedDisclosure:
    disclosing_within_bound: bool
    witness: Optional[DInstance] = None
    certain_answer: Optional[tuple[Term, ...]] = None
    classes_checked: int = 0


def check_un_disclosure_oracle(
    dview: DView,
    p: ConjunctiveQuery,
    schema: DSchema,
    rules: Sequence[Rule] = (),
    domain_size: int = 3,
    max_facts: int = 1,
    extra: Sequence[DInstance] = (),
) -> BoundedDisclosure:
    """Bounded search for an instance whose whole view-equivalence class
    (within the bound) shares a true secret answer.

    A hit is a claim about the bound only: instances outside it may agree
    on the views yet falsify the secret, so the class seen here can be a
    strict subset of the real one.  A miss proves nothing beyond the bound
    either.  `extra` adds caller-supplied instances (say, an escape witness
    with a larger domain) to the pool so their classes are grouped too.
    """
    candidates = list(enumerate_dinstances(schema, domain_size, max_facts, rules))
    candidates.extend(d for d in extra if rules_satisfied(d.merged(), rules))
    all_cq = all(
        isinstance(v.definition, ConjunctiveQuery) for v in dview.views)
    classes: list[tuple[DInstance, list[DInstance]]] = []
    if all_cq:
        table: dict = {}
        order = []
        for d in candidates:
            key = tuple(
                frozenset(enumerate_matches(v.definition, d.local(v.source)))
                for v in dview.views)
            if key not in table:
                table[key] = (d, [])
                order.append(key)
            table[key][1].append(d)
        classes = [table[k] for k in order]
    else:
        for d in candidates:
            for rep, members in classes:
                if views_agree(dview, rep, d).agree:
                    members.append(d)
                    break
            else:
                classes.append((d, [d]))
    for rep, members in classes:
        certain: Optional[frozenset] = None
        for d in members:
            answers = frozenset(enumerate_matches(p, d.merged()))
            certain = answers if certain is None else certain & answers
            if not certain:
                break
        if certain:
            first = min(certain, key=lambda row: tuple(term_key(t) for t in row))
            return BoundedDisclosure(True, rep, first, len(classes))
    return BoundedDisclosure(False, classes_checked=len(classes))
