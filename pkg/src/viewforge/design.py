"""Pipelines behind the command line: reports and their re-validation.

Every command produces a JSON-ready dict that is self-contained. It embeds
the normalized workspace it ran on, the verdict, the knobs, and the
witnesses backing the verdict. verify_report replays those witnesses
against the direct checkers (homomorphism verification, view-image
comparison, query evaluation) and re-derives the rest, so a report can be
audited later without the original input files.

Reports are versioned through the "viewforge_report" key; this module
reads and writes version 1 only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .canonical import canonical_dview, is_monadic_frontier, sjvars
from .chase import ChaseConfig
from .determinacy import (
    DETERMINED,
    NOT_DETERMINED,
    DeterminacyWitness,
    check_determinacy,
    unprime_instance,
    validate_witness,
)
from .disclosure import (
    STAR,
    DisclosureVerdict,
    check_un_disclosure_cq,
    check_un_disclosure_oracle,
    exists_useful_nondisclosing_cq,
    validate_escape_witness,
)
from .homomorphism import cq_homomorphism, enumerate_matches, query_holds, verify_homomorphism
from .minimization import RuleMinimization, minimize, minimize_under_rules
from .model import (
    ConjunctiveQuery,
    Constant,
    ExistentialRule,
    InputError,
    Instance,
    LabeledNull,
    Pair,
    Term,
    Tri,
    Variable,
    View,
    build_canondb,
    canon_constant,
    substitute_instance,
    term_key,
)
from .oracle import refute_determinacy, sq_equivalence_exact, views_agree
from .ra import compile_dcq_to_ra, to_lisp
from .replication import (
    data_to_dinstance,
    data_to_instance,
    data_to_term,
    dinstance_to_data,
    full_replication_design,
    instance_to_data,
    replication_rules,
    term_to_data,
)
from .shuffles import (
    Shuffle,
    TooManyFrontierVars,
    build_shuffle_views,
    has_only_trivial_shuffles,
    shuffle_equivalent,
)
from .workspace import Workspace, parse_workspace, print_query, print_view, print_workspace

REPORT_VERSION = 1

NO_DESIGN_STATEMENT = "No useful and non-disclosing d-view exists"

Trace = Optional[Callable[[dict], None]]


@dataclass(frozen=True)
class RunConfig:
    """Knobs shared by the longer pipelines; defaults suit desk-sized inputs."""

    fuel: int = 100_000
    max_rounds: int = 8
    domain_size: int = 3
    max_facts: int = 1
    max_iter: int = 3
    jobs: int = 1

    def chase(self) -> ChaseConfig:
        return ChaseConfig(fuel=self.fuel)


def _cfg_data(cfg: RunConfig) -> dict:
    return {
        "fuel": cfg.fuel,
        "max_rounds": cfg.max_rounds,
        "domain_size": cfg.domain_size,
        "max_facts": cfg.max_facts,
        "max_iter": cfg.max_iter,
    }


def _cfg_from(data: Mapping) -> RunConfig:
    return RunConfig(
        fuel=data["fuel"],
        max_rounds=data["max_rounds"],
        domain_size=data["domain_size"],
        max_facts=data["max_facts"],
        max_iter=data["max_iter"],
    )


def _emit(trace: Trace, stage: str, **data) -> None:
    if trace is not None:
        payload = {"stage": stage}
        payload.update(data)
        trace(payload)


def _need(table: Mapping, name: str, kind: str):
    if name not in table:
        raise InputError(f"unknown {kind} {name!r}")
    return table[name]


def _envelope(command: str, ws: Workspace, body: dict) -> dict:
    report = {
        "viewforge_report": REPORT_VERSION,
        "command": command,
        "workspace": print_workspace(ws),
    }
    report.update(body)
    return report


# ---------------------------------------------------------------------------
# witness serialization

def _subterms(t: Term):
    yield t
    if isinstance(t, Pair):
        yield from _subterms(t.left)
        yield from _subterms(t.right)


def _freeze_map(i: Instance, prefix: str) -> dict[Term, Term]:
    """Null-to-constant renaming, named the way freeze_nulls names them."""
    nulls = sorted(
        {t for f in i.facts for a in f.args for t in _subterms(a)
         if isinstance(t, LabeledNull)},
        key=term_key)
    return {n: Constant(f"{prefix}{k + 1}") for k, n in enumerate(nulls)}


def _match_data(match: Mapping, sub: Optional[Mapping] = None) -> dict:
    out = {}
    for k, v in match.items():
        if not isinstance(k, Variable):
            continue
        t = sub.get(v, v) if sub else v
        out[k.name] = term_to_data(t)
    return dict(sorted(out.items()))


def _data_to_match(data: Mapping) -> dict:
    return {Variable(name): data_to_term(x) for name, x in data.items()}


def _rows_data(rows) -> list:
    return sorted([term_to_data(t) for t in row] for row in rows)


def _shuffle_data(s: Shuffle) -> list[list[str]]:
    return [[v.name, w.name] for v, w in zip(s.frontier, s.images)]


def effective_rules(
    ws: Workspace, names: Optional[Sequence[str]] = None
) -> tuple[ExistentialRule, ...]:
    """The rules a pipeline runs under.

    With names=None this is every workspace rule plus the inclusion rules
    induced by replicated relations; the copies share one symbol in this
    model, so those are identity inclusions, kept so rule-aware pipelines
    see replication spelled out and reports list it explicitly. Explicit
    names pick exactly the rules given, and may name the induced ones.
    """
    repl = replication_rules(ws.schema)
    if names is None:
        return tuple(ws.rules[n] for n in sorted(ws.rules)) + repl
    table = dict(ws.rules)
    for r in repl:
        table[r.name] = r
    return tuple(_need(table, n, "rule") for n in names)


# ---------------------------------------------------------------------------
# report builders

def report_validate(text: str) -> dict:
    res = parse_workspace(text)
    report = {
        "viewforge_report": REPORT_VERSION,
        "command": "validate",
        "source": text,
        "ok": res.ok,
        "diagnostics": [
            {"line": d.line, "column": d.column,
             "message": d.message, "hint": d.hint}
            for d in res.diagnostics],
    }
    if res.ok:
        report["workspace"] = print_workspace(res.workspace)
    return report


def report_canonical(ws: Workspace, query_name: str) -> dict:
    q = _need(ws.queries, query_name, "query")
    dview = canonical_dview(q, ws.schema)
    views = [
        {"source": v.source,
         "join_vars": [x.name for x in sjvars(q, ws.schema, v.source)],
         "view": print_view(v)}
        for v in dview]
    return _envelope("canonical", ws, {
        "query": query_name,
        "views": views,
        "monadic_frontier": is_monadic_frontier(q, ws.schema),
    })


def report_minimize(
    ws: Workspace,
    query_name: str,
    rule_names: Optional[Sequence[str]] = None,
    cfg: Optional[RunConfig] = None,
) -> dict:
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    rules = effective_rules(ws, rule_names)
    if rules:
        rm = minimize_under_rules(q, rules, cfg.chase())
    else:
        rm = RuleMinimization(minimize(q), Tri.YES)
    body = {
        "query": query_name,
        "original": print_query(q),
        "rules": [r.name for r in rules],
        "status": rm.status.value,
        "config": _cfg_data(cfg),
    }
    if rm.query is not None:
        mini = rm.query
        fwd = cq_homomorphism(q, mini)
        bwd = cq_homomorphism(mini, q)
        body.update({
            "minimized": print_query(mini),
            "atoms_before": len(q.atoms),
            "atoms_after": len(mini.atoms),
            "method": "folding" if fwd and bwd else "chase",
            "hom_original_to_minimized": _match_data(fwd) if fwd else None,
            "hom_minimized_to_original": _match_data(bwd) if bwd else None,
        })
    return _envelope("minimize", ws, body)


def report_shuffles(
    ws: Workspace,
    query_name: str,
    rule_names: Optional[Sequence[str]] = None,
    cfg: Optional[RunConfig] = None,
) -> dict:
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    rules = effective_rules(ws, rule_names)
    design = build_shuffle_views(q, ws.schema, rules, cfg.chase())
    bundles = [
        {"source": b.view.source,
         "eqtype": [[v.name for v in block] for block in b.eqtype.blocks],
         "view": print_view(b.view),
         "invariant_shuffles": [_shuffle_data(s) for s in b.shuffles],
         "undecided_shuffles": [_shuffle_data(s) for s in b.undecided]}
        for b in design.bundles]
    trivial = has_only_trivial_shuffles(q, ws.schema, rules, cfg.chase())
    return _envelope("shuffles", ws, {
        "query": query_name,
        "rules": [r.name for r in rules],
        "config": _cfg_data(cfg),
        "bundles": bundles,
        "only_trivial": trivial.value,
        "has_undecided": design.has_undecided,
    })


def report_to_ra(ws: Workspace, view_name: str) -> dict:
    v = _need(ws.views, view_name, "view")
    compiled = [
        {"name": c.name,
         "source": c.source,
         "output": [x.name for x in c.definition.output_vars],
         "lisp": to_lisp(c.definition.expr)}
        for c in compile_dcq_to_ra(v)]
    return _envelope("to-ra", ws, {"view": view_name, "compiled": compiled})


def report_determinacy(
    ws: Workspace,
    query_name: str,
    dview_name: str,
    rule_names: Optional[Sequence[str]] = None,
    cfg: Optional[RunConfig] = None,
    trace: Trace = None,
) -> dict:
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    dview = _need(ws.dviews, dview_name, "dview")
    rules = effective_rules(ws, rule_names)
    _emit(trace, "determinacy:start", query=query_name, dview=dview_name)
    verdict = check_determinacy(q, dview, rules, cfg.max_rounds, cfg.fuel)
    _emit(trace, "determinacy:done", status=verdict.status, round=verdict.round)
    body = {
        "query": query_name,
        "dview": dview_name,
        "rules": [r.name for r in rules],
        "config": _cfg_data(cfg),
        "status": verdict.status,
        "round": verdict.round,
        "rounds_run": len(verdict.rounds),
    }
    if verdict.status == DETERMINED:
        snap = next(s for s in verdict.rounds if s.round == verdict.round)
        sub = _freeze_map(snap.g2, "g")
        target = substitute_instance(sub, unprime_instance(snap.g2))
        body["target_instance"] = instance_to_data(target)
        body["match"] = _match_data(verdict.match, sub)
    elif verdict.status == NOT_DETERMINED:
        w = verdict.witness
        body["witness"] = {
            "holds_query": instance_to_data(w.holds_query),
            "fails_query": instance_to_data(w.fails_query),
        }
        body["witness_problems"] = list(verdict.witness_problems)
    else:
        body["reason"] = verdict.reason
    return _envelope("determinacy", ws, body)


def _disclosure_entry(name: str, verdict: DisclosureVerdict) -> dict:
    entry = {"secret": name, "status": verdict.status.value}
    sub = _freeze_map(verdict.chase_instance, "n")
    entry["chase_instance"] = instance_to_data(
        substitute_instance(sub, verdict.chase_instance))
    if verdict.disclosing:
        entry["secret_match"] = _match_data(verdict.secret_match, sub)
    else:
        entry["witness"] = dinstance_to_data(verdict.witness)
        entry["witness_problems"] = list(verdict.witness_problems)
    return entry


def report_disclosure(
    ws: Workspace, dview_name: str, secret_names: Sequence[str],
    trace: Trace = None,
) -> dict:
    dview = _need(ws.dviews, dview_name, "dview")
    entries = []
    for name in secret_names:
        p = _need(ws.secrets, name, "secret")
        _emit(trace, "disclosure:check", dview=dview_name, secret=name)
        entries.append(_disclosure_entry(name, check_un_disclosure_cq(dview, p, ws.schema)))
    return _envelope("disclosure", ws, {"dview": dview_name, "secrets": entries})


def report_replication(
    ws: Workspace, query_name: str, secret_name: str,
    cfg: Optional[RunConfig] = None,
) -> dict:
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    p = _need(ws.secrets, secret_name, "secret")
    design = full_replication_design(q, p, ws.schema, cfg.max_iter)
    return _envelope("replication", ws, {
        "query": query_name,
        "secret": secret_name,
        "config": _cfg_data(cfg),
        "applicable": design.applicable,
        "reason": design.reason,
        "replicated_in_query": list(design.replicated_in_query),
        "bundle": design.bundle,
    })


def report_oracle_equiv(
    ws: Workspace, query_name: str, source: str, inst1: str, inst2: str,
) -> dict:
    q = _need(ws.queries, query_name, "query")
    if source not in ws.schema.sources:
        raise InputError(f"unknown source {source!r}")
    i1 = _need(ws.instances, inst1, "instance").local(source)
    i2 = _need(ws.instances, inst2, "instance").local(source)
    exact = sq_equivalence_exact(i1, i2, q, source, ws.schema)
    body = {
        "query": query_name,
        "source": source,
        "instances": [inst1, inst2],
        "equivalent": exact.equivalent,
    }
    if not q.free_vars:
        body["shuffle_verdict"] = shuffle_equivalent(
            i1, i2, q, source, ws.schema).verdict.value
    if not exact.equivalent:
        body["witness"] = {
            "side": exact.witness_side,
            "match": {v.name: term_to_data(t) for v, t in exact.witness_match},
            "context": instance_to_data(exact.witness_context),
        }
    return _envelope("oracle-equiv", ws, body)


def report_oracle_determinacy(
    ws: Workspace,
    query_name: str,
    dview_name: str,
    rule_names: Optional[Sequence[str]] = None,
    cfg: Optional[RunConfig] = None,
) -> dict:
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    dview = _need(ws.dviews, dview_name, "dview")
    rules = effective_rules(ws, rule_names)
    ref = refute_determinacy(
        q, dview, ws.schema, cfg.domain_size, cfg.max_facts, rules)
    body = {
        "query": query_name,
        "dview": dview_name,
        "rules": [r.name for r in rules],
        "config": _cfg_data(cfg),
        "found": ref.found,
    }
    if ref.found:
        body["pair"] = [dinstance_to_data(ref.d1), dinstance_to_data(ref.d2)]
        body["answers"] = [_rows_data(ref.answers1), _rows_data(ref.answers2)]
    return _envelope("oracle-determinacy", ws, body)


def report_oracle_disclosure(
    ws: Workspace,
    dview_name: str,
    secret_name: str,
    rule_names: Optional[Sequence[str]] = None,
    cfg: Optional[RunConfig] = None,
    extra_names: Sequence[str] = (),
) -> dict:
    cfg = cfg or RunConfig()
    dview = _need(ws.dviews, dview_name, "dview")
    p = _need(ws.secrets, secret_name, "secret")
    rules = effective_rules(ws, rule_names)
    extra = tuple(_need(ws.instances, n, "instance") for n in extra_names)
    res = check_un_disclosure_oracle(
        dview, p, ws.schema, rules,
        domain_size=cfg.domain_size, max_facts=cfg.max_facts, extra=extra)
    body = {
        "dview": dview_name,
        "secret": secret_name,
        "rules": [r.name for r in rules],
        "config": _cfg_data(cfg),
        "extra": list(extra_names),
        "classes_checked": res.classes_checked,
        "disclosing_within_bound": res.disclosing_within_bound,
    }
    if res.disclosing_within_bound:
        body["witness"] = dinstance_to_data(res.witness)
        body["certain_answer"] = [term_to_data(t) for t in res.certain_answer]
    return _envelope("oracle-disclosure", ws, body)


# ---------------------------------------------------------------------------
# the design pipeline

@dataclass(frozen=True)
class DesignReport:
    data: dict

    @property
    def answer(self) -> str:
        return self.data["answer"]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def _aggregate(answers: Sequence[Tri]) -> Tri:
    if any(a is Tri.NO for a in answers):
        return Tri.NO
    if all(a is Tri.YES for a in answers):
        return Tri.YES
    return Tri.UNKNOWN


def run_design(
    ws: Workspace,
    query_name: str,
    secret_names: Sequence[str],
    design_class: str = "cq",
    cfg: Optional[RunConfig] = None,
    rule_names: Optional[Sequence[str]] = None,
    trace: Trace = None,
) -> DesignReport:
    """Decide whether a useful and non-disclosing d-view exists, and
    produce one when the answer is yes.

    Classes: "cq" searches conjunctive views, where the canonical d-view
    of the minimized query settles the question; "all" additionally closes
    the question over arbitrary view languages when the frontier is monadic
    or no nontrivial shuffle is invariant, and otherwise reports shuffle
    views and bounded-oracle probes as evidence; "replication" builds the
    equivalence-class design available when the query uses a relation
    replicated at every source.
    """
    cfg = cfg or RunConfig()
    q = _need(ws.queries, query_name, "query")
    secrets = [(n, _need(ws.secrets, n, "secret")) for n in secret_names]
    if not secrets:
        raise InputError("design needs at least one secret")
    if design_class not in ("cq", "all", "replication"):
        raise InputError(f"unknown design class {design_class!r}")
    rules = effective_rules(ws, rule_names)
    if design_class == "replication":
        data = _design_replication(ws, query_name, q, secrets, cfg, trace)
    else:
        data, minq = _design_cq(ws, query_name, q, secrets, rules, cfg, trace)
        if design_class == "all" and minq is not None:
            _design_all(ws, minq, secrets, rules, cfg, data, trace)
    data["class"] = design_class
    data["secret_names"] = [n for n, _ in secrets]
    data["config"] = _cfg_data(cfg)
    return DesignReport(_envelope("design", ws, data))


def _design_cq(ws, query_name, q, secrets, rules, cfg, trace):
    _emit(trace, "design:minimize", query=query_name)
    if rules:
        rm = minimize_under_rules(q, rules, cfg.chase())
    else:
        rm = RuleMinimization(minimize(q), Tri.YES)
    data = {"query": query_name, "rules": [r.name for r in rules]}
    if rm.query is None:
        data.update({
            "answer": Tri.UNKNOWN.value,
            "stage": "minimization",
            "statement": "minimization under the rules did not settle, so "
                         "the canonical construction has no starting point",
        })
        return data, None
    minq = rm.query
    data["minimized_query"] = print_query(minq)
    per_secret = []
    answers = []
    design_dview = None
    for name, p in secrets:
        _emit(trace, "design:secret", secret=name)
        res = exists_useful_nondisclosing_cq(minq, p, ws.schema, rules, cfg.chase())
        entry = {
            "secret": name,
            "answer": res.answer.value,
            "stage": res.stage,
            "decomposition_consistent": res.decomposition_consistent,
        }
        if res.design is not None:
            design_dview = res.design
        if res.direct is not None:
            entry["direct"] = _disclosure_entry(name, res.direct)
        entry["per_source"] = [
            {"source": sv.source,
             "secret_view": print_view(
                 View(sv.secret_view.name, sv.source, sv.secret_view)),
             **_disclosure_entry(name, sv.verdict)}
            for sv in res.per_source]
        per_secret.append(entry)
        answers.append(res.answer)
    agg = _aggregate(answers)
    data["cq"] = {"per_secret": per_secret, "answer": agg.value}
    data["answer"] = agg.value
    if agg is Tri.YES and design_dview is not None:
        data["design"] = [print_view(v) for v in design_dview]
        data["statement"] = ("the canonical d-view of the minimized query "
                             "is useful and non-disclosing for every secret")
    elif agg is Tri.NO:
        data["statement"] = ("every useful conjunctive d-view discloses "
                             "at least one secret")
    else:
        data["statement"] = "undecided within the conjunctive class"
    if ws.schema.replicated():
        data["replication_note"] = (
            "replicated relations are present; a No above rules out the "
            "canonical construction relative to the stated rules, and "
            "designs outside it may exist (see the replication class)")
    return data, minq


def _design_all(ws, minq, secrets, rules, cfg, data, trace):
    cq_answer = Tri(data["answer"])
    monadic = is_monadic_frontier(minq, ws.schema)
    trivial = Tri.UNKNOWN
    if minq.free_vars:
        data["shuffle_note"] = (
            "shuffle machinery is defined for Boolean queries; skipped")
    else:
        try:
            trivial = has_only_trivial_shuffles(
                minq, ws.schema, rules, cfg.chase())
        except TooManyFrontierVars as e:
            data["shuffle_budget_note"] = str(e)
    data["monadic_frontier"] = monadic
    data["only_trivial_shuffles"] = trivial.value
    if cq_answer is Tri.YES:
        data["statement"] = "a conjunctive design settles every class"
        return
    if not ws.schema.replicated() and (monadic or trivial is Tri.YES):
        data["answer"] = cq_answer.value
        data["closure_reason"] = (
            "monadic frontier" if monadic else "only trivial shuffles")
        if cq_answer is Tri.NO:
            data["statement"] = NO_DESIGN_STATEMENT
        return
    data["answer"] = Tri.UNKNOWN.value
    data["stage"] = "arbitrary views"
    data["statement"] = (
        "undecided beyond the conjunctive class"
        + ("; the replication class may still apply"
           if ws.schema.replicated() else ""))
    if minq.free_vars:
        return
    _emit(trace, "design:shuffle-evidence")
    try:
        sd = build_shuffle_views(minq, ws.schema, rules, cfg.chase())
    except TooManyFrontierVars as e:
        data["shuffle_views_error"] = str(e)
        return
    data["shuffle_views"] = [print_view(b.view) for b in sd.bundles]
    data["shuffle_ra"] = {
        b.view.name: [
            {"name": c.name, "lisp": to_lisp(c.definition.expr)}
            for c in compile_dcq_to_ra(b.view)]
        for b in sd.bundles}
    shuffle_dview = sd.dview()
    probes = []
    for name, p in secrets:
        res = check_un_disclosure_oracle(
            shuffle_dview, p, ws.schema, rules,
            domain_size=cfg.domain_size, max_facts=cfg.max_facts)
        probe = {
            "secret": name,
            "disclosing_within_bound": res.disclosing_within_bound,
            "classes_checked": res.classes_checked,
        }
        if res.disclosing_within_bound:
            probe["witness"] = dinstance_to_data(res.witness)
        probes.append(probe)
    data["shuffle_probe"] = probes


def _design_replication(ws, query_name, q, secrets, cfg, trace):
    per_secret = []
    answers = []
    for name, p in secrets:
        _emit(trace, "design:replication", secret=name)
        design = full_replication_design(q, p, ws.schema, cfg.max_iter)
        if design.applicable:
            a = Tri.YES
        elif design.replicated_in_query:
            a = Tri.NO
        else:
            a = Tri.UNKNOWN
        per_secret.append({
            "secret": name,
            "answer": a.value,
            "applicable": design.applicable,
            "reason": design.reason,
            "replicated_in_query": list(design.replicated_in_query),
            "bundle": design.bundle,
        })
        answers.append(a)
    agg = _aggregate(answers)
    data = {
        "query": query_name,
        "per_secret": per_secret,
        "answer": agg.value,
    }
    if agg is Tri.YES:
        data["statement"] = (
            "publishing each source's class of the stretching equivalence "
            "is useful and non-disclosing for every secret")
    elif agg is Tri.NO:
        data["statement"] = (
            "some secret maps into the query, so every useful design "
            "discloses it wherever the query holds")
    else:
        data["statement"] = (
            "the query uses no relation replicated at every source, so "
            "this construction does not apply")
    return data


# ---------------------------------------------------------------------------
# exit codes

def exit_code_for(report: Mapping) -> int:
    """0 for a definitive verdict, 2 when undecided within the budget."""
    command = report.get("command")
    if command == "validate":
        return 0 if report.get("ok") else 3
    if command == "minimize":
        return 0 if report.get("status") == Tri.YES.value else 2
    if command == "shuffles":
        return 2 if report.get("has_undecided") else 0
    if command == "determinacy":
        return 0 if report.get("status") in (DETERMINED, NOT_DETERMINED) else 2
    if command == "oracle-determinacy":
        return 0 if report.get("found") else 2
    if command == "oracle-disclosure":
        return 0 if report.get("disclosing_within_bound") else 2
    if command == "replication":
        if report.get("applicable") or report.get("replicated_in_query"):
            return 0
        return 2
    if command == "design":
        return 0 if report.get("answer") in ("yes", "no") else 2
    return 0


# ---------------------------------------------------------------------------
# re-validation

@dataclass(frozen=True)
class VerifyOutcome:
    problems: tuple[str, ...] = ()
    unchecked: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    @property
    def exit_code(self) -> int:
        """0 when everything re-checked, 3 on any failure, 2 when parts
        of the report carry no witness this build can replay."""
        if self.problems:
            return 3
        if self.unchecked:
            return 2
        return 0


def _compare(problems: list, label: str, got, want) -> None:
    if got != want:
        problems.append(f"{label}: recomputed {got!r} differs from recorded {want!r}")


def verify_report(report) -> VerifyOutcome:
    """Re-validate a report without trusting its recorded verdicts.

    Embedded witnesses (homomorphisms, counterexample pairs, escape
    instances) are replayed through the direct checkers; everything else
    is re-derived from the embedded workspace and compared field by field.
    """
    if not isinstance(report, Mapping):
        return VerifyOutcome(("report is not a JSON object",))
    if report.get("viewforge_report") != REPORT_VERSION:
        return VerifyOutcome(
            (f"unsupported report version {report.get('viewforge_report')!r}",))
    command = report.get("command")
    checker = _CHECKERS.get(command)
    if checker is None:
        return VerifyOutcome((f"unknown command {command!r}",))
    if command == "validate":
        return checker(None, report)
    text = report.get("workspace")
    if not isinstance(text, str):
        return VerifyOutcome(("missing workspace text",))
    parsed = parse_workspace(text)
    if not parsed.ok:
        return VerifyOutcome(tuple(
            f"embedded workspace: {d}" for d in parsed.diagnostics))
    try:
        return checker(parsed.workspace, report)
    except (KeyError, TypeError, ValueError, AttributeError, InputError) as e:
        return VerifyOutcome((f"malformed report: {e!r}",))


def _verify_validate(_ws, report) -> VerifyOutcome:
    problems: list[str] = []
    res = parse_workspace(report["source"])
    got = [
        {"line": d.line, "column": d.column,
         "message": d.message, "hint": d.hint}
        for d in res.diagnostics]
    _compare(problems, "ok", res.ok, report["ok"])
    _compare(problems, "diagnostics", got, report["diagnostics"])
    if res.ok and "workspace" in report:
        _compare(problems, "normal form",
                 print_workspace(res.workspace), report["workspace"])
    return VerifyOutcome(tuple(problems))


def _verify_canonical(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    fresh = report_canonical(ws, report["query"])
    _compare(problems, "views", fresh["views"], report["views"])
    _compare(problems, "monadic_frontier",
             fresh["monadic_frontier"], report["monadic_frontier"])
    return VerifyOutcome(tuple(problems))


def _check_query_hom(problems, label, data, src: ConjunctiveQuery,
                     dst: ConjunctiveQuery) -> None:
    match = _data_to_match(data)
    if not verify_homomorphism(match, src.atoms, build_canondb(dst)):
        problems.append(f"{label}: mapping is not a homomorphism")
    for v in src.free_vars:
        if match.get(v) != canon_constant(v):
            problems.append(f"{label}: free variable {v.name} is not fixed")


def _verify_minimize(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    q = _need(ws.queries, report["query"], "query")
    rules = effective_rules(ws, report["rules"])
    cfg = _cfg_from(report["config"])
    if rules:
        rm = minimize_under_rules(q, rules, cfg.chase())
    else:
        rm = RuleMinimization(minimize(q), Tri.YES)
    _compare(problems, "status", rm.status.value, report["status"])
    if rm.query is None or "minimized" not in report:
        return VerifyOutcome(tuple(problems))
    mini = rm.query
    _compare(problems, "minimized", print_query(mini), report["minimized"])
    if report.get("hom_original_to_minimized"):
        _check_query_hom(problems, "hom into minimized",
                         report["hom_original_to_minimized"], q, mini)
    if report.get("hom_minimized_to_original"):
        _check_query_hom(problems, "hom into original",
                         report["hom_minimized_to_original"], mini, q)
    return VerifyOutcome(tuple(problems))


def _verify_shuffles(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    fresh = report_shuffles(
        ws, report["query"],
        rule_names=report["rules"], cfg=_cfg_from(report["config"]))
    for key in ("bundles", "only_trivial", "has_undecided"):
        _compare(problems, key, fresh[key], report[key])
    return VerifyOutcome(tuple(problems))


def _verify_to_ra(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    fresh = report_to_ra(ws, report["view"])
    _compare(problems, "compiled", fresh["compiled"], report["compiled"])
    return VerifyOutcome(tuple(problems))


def _verify_determinacy(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    unchecked: list[str] = []
    q = _need(ws.queries, report["query"], "query")
    dview = _need(ws.dviews, report["dview"], "dview")
    rules = effective_rules(ws, report["rules"])
    cfg = _cfg_from(report["config"])
    status = report["status"]
    if status == DETERMINED:
        target = data_to_instance(ws.schema, report["target_instance"])
        match = _data_to_match(report["match"])
        if not verify_homomorphism(match, q.atoms, target):
            problems.append("determined: match does not embed the query")
        for v in q.free_vars:
            if match.get(v) != canon_constant(v):
                problems.append(
                    f"determined: free variable {v.name} moved off its pin")
    elif status == NOT_DETERMINED:
        w = DeterminacyWitness(
            data_to_instance(ws.schema, report["witness"]["holds_query"]),
            data_to_instance(ws.schema, report["witness"]["fails_query"]))
        problems.extend(
            f"witness: {p}" for p in validate_witness(q, dview, w))
    else:
        unchecked.append("undecided verdict carries no witness")
    verdict = check_determinacy(q, dview, rules, cfg.max_rounds, cfg.fuel)
    _compare(problems, "status", verdict.status, status)
    if status == DETERMINED:
        _compare(problems, "round", verdict.round, report["round"])
    return VerifyOutcome(tuple(problems), tuple(unchecked))


def _check_disclosure_entry(ws, dview, p, entry, problems, label) -> None:
    if entry["status"] == "Disclosing":
        chase_inst = data_to_instance(ws.schema, entry["chase_instance"])
        match = _data_to_match(entry["secret_match"])
        if not verify_homomorphism(match, p.atoms, chase_inst):
            problems.append(f"{label}: secret match does not embed")
        for v in p.free_vars:
            if match.get(v) != STAR:
                problems.append(
                    f"{label}: free variable {v.name} not pinned to star")
    else:
        witness = data_to_dinstance(ws.schema, entry["witness"])
        problems.extend(
            f"{label}: {s}"
            for s in validate_escape_witness(dview, p, ws.schema, witness))
    verdict = check_un_disclosure_cq(dview, p, ws.schema)
    _compare(problems, f"{label}: status", verdict.status.value, entry["status"])


def _verify_disclosure(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    dview = _need(ws.dviews, report["dview"], "dview")
    for entry in report["secrets"]:
        p = _need(ws.secrets, entry["secret"], "secret")
        _check_disclosure_entry(
            ws, dview, p, entry, problems, f"secret {entry['secret']}")
    return VerifyOutcome(tuple(problems))


def _verify_replication(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    fresh = report_replication(
        ws, report["query"], report["secret"], cfg=_cfg_from(report["config"]))
    for key in ("applicable", "reason", "replicated_in_query", "bundle"):
        _compare(problems, key, fresh[key], report[key])
    bundle = report.get("bundle")
    if bundle:
        q = ws.queries[report["query"]]
        p = ws.secrets[report["secret"]]
        for i, entry in enumerate(bundle["query_preserved"]):
            inst = data_to_dinstance(ws.schema, bundle["iterates"][i])
            _compare(problems, f"query_preserved[{i}]",
                     query_holds(q, inst.merged()), entry)
        for i, entry in enumerate(bundle["secret_fails_on_stretched"]):
            inst = data_to_dinstance(ws.schema, bundle["iterates"][i + 1])
            _compare(problems, f"secret_fails_on_stretched[{i}]",
                     not query_holds(p, inst.merged()), entry)
    return VerifyOutcome(tuple(problems))


def _verify_oracle_equiv(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    q = _need(ws.queries, report["query"], "query")
    source = report["source"]
    n1, n2 = report["instances"]
    i1 = _need(ws.instances, n1, "instance").local(source)
    i2 = _need(ws.instances, n2, "instance").local(source)
    exact = sq_equivalence_exact(i1, i2, q, source, ws.schema)
    _compare(problems, "equivalent", exact.equivalent, report["equivalent"])
    if "shuffle_verdict" in report:
        _compare(problems, "shuffle_verdict",
                 shuffle_equivalent(i1, i2, q, source, ws.schema).verdict.value,
                 report["shuffle_verdict"])
    if not report["equivalent"] and "witness" in report:
        w = report["witness"]
        context = data_to_instance(ws.schema, w["context"])
        own, other = (i1, i2) if w["side"] == 1 else (i2, i1)
        if not query_holds(q, own.union(context)):
            problems.append("witness: query fails on its own side")
        if query_holds(q, other.union(context)):
            problems.append("witness: query holds on the other side too")
    return VerifyOutcome(tuple(problems))


def _verify_oracle_determinacy(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    q = _need(ws.queries, report["query"], "query")
    dview = _need(ws.dviews, report["dview"], "dview")
    rules = effective_rules(ws, report["rules"])
    cfg = _cfg_from(report["config"])
    ref = refute_determinacy(
        q, dview, ws.schema, cfg.domain_size, cfg.max_facts, rules)
    _compare(problems, "found", ref.found, report["found"])
    if report["found"] and "pair" in report:
        d1 = data_to_dinstance(ws.schema, report["pair"][0])
        d2 = data_to_dinstance(ws.schema, report["pair"][1])
        if not views_agree(dview, d1, d2).agree:
            problems.append("pair: view images differ")
        a1 = _rows_data(frozenset(enumerate_matches(q, d1.merged())))
        a2 = _rows_data(frozenset(enumerate_matches(q, d2.merged())))
        _compare(problems, "answers1", a1, report["answers"][0])
        _compare(problems, "answers2", a2, report["answers"][1])
        if a1 == a2:
            problems.append("pair: query answers coincide")
    return VerifyOutcome(tuple(problems))


def _verify_oracle_disclosure(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    fresh = report_oracle_disclosure(
        ws, report["dview"], report["secret"],
        rule_names=report["rules"], cfg=_cfg_from(report["config"]),
        extra_names=report["extra"])
    for key in ("classes_checked", "disclosing_within_bound"):
        _compare(problems, key, fresh[key], report[key])
    if report["disclosing_within_bound"] and "witness" in report:
        p = _need(ws.secrets, report["secret"], "secret")
        witness = data_to_dinstance(ws.schema, report["witness"])
        row = tuple(data_to_term(x) for x in report["certain_answer"])
        if row not in set(enumerate_matches(p, witness.merged())):
            problems.append("certain answer is not an answer on the witness")
    return VerifyOutcome(tuple(problems))


def _verify_design(ws, report) -> VerifyOutcome:
    problems: list[str] = []
    unchecked: list[str] = []
    fresh = run_design(
        ws, report["query"], report["secret_names"],
        design_class=report["class"],
        cfg=_cfg_from(report["config"]),
        rule_names=report.get("rules")).data
    for key, want in report.items():
        if key in ("viewforge_report", "workspace"):
            continue
        _compare(problems, key, fresh.get(key), want)
    if report["class"] in ("cq", "all") and "minimized_query" in report:
        q = _need(ws.queries, report["query"], "query")
        rules = effective_rules(ws, report["rules"])
        cfg = _cfg_from(report["config"])
        if rules:
            rm = minimize_under_rules(q, rules, cfg.chase())
        else:
            rm = RuleMinimization(minimize(q), Tri.YES)
        if rm.query is None:
            unchecked.append("minimization did not settle on re-run")
        else:
            _compare(problems, "minimized_query",
                     print_query(rm.query), report["minimized_query"])
            dview = canonical_dview(rm.query, ws.schema)
            for entry in report.get("cq", {}).get("per_secret", ()):
                direct = entry.get("direct")
                if direct is None:
                    continue
                p = _need(ws.secrets, entry["secret"], "secret")
                _check_disclosure_entry(
                    ws, dview, p, direct, problems,
                    f"direct check for {entry['secret']}")
    if report["answer"] == Tri.UNKNOWN.value:
        unchecked.append("undecided answer carries no closing witness")
    return VerifyOutcome(tuple(problems), tuple(unchecked))


_CHECKERS = {
    "validate": _verify_validate,
    "canonical": _verify_canonical,
    "minimize": _verify_minimize,
    "shuffles": _verify_shuffles,
    "to-ra": _verify_to_ra,
    "determinacy": _verify_determinacy,
    "disclosure": _verify_disclosure,
    "replication": _verify_replication,
    "oracle-equiv": _verify_oracle_equiv,
    "oracle-determinacy": _verify_oracle_determinacy,
    "oracle-disclosure": _verify_oracle_disclosure,
    "design": _verify_design,
}
