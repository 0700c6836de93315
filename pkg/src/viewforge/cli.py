"""Command-line surface.

One subcommand per pipeline. Each loads a workspace file, builds the
matching report, prints it (readable text by default, the full JSON
document with --json) and exits 0 on a definitive answer, 2 when the
answer is undecided within the configured budgets, 3 on input errors.
--trace streams progress events and applied chase steps as JSON lines
on stderr. `verify` replays the witnesses embedded in a saved report,
independently of the code paths that produced them.
"""

from __future__ import annotations

import argparse
import json
import sys

from .chase import ChaseStep, set_step_sink
from .design import (
    RunConfig,
    exit_code_for,
    report_canonical,
    report_determinacy,
    report_disclosure,
    report_minimize,
    report_oracle_determinacy,
    report_oracle_disclosure,
    report_oracle_equiv,
    report_replication,
    report_shuffles,
    report_to_ra,
    report_validate,
    run_design,
    verify_report,
)
from .model import InputError
from .workspace import parse_workspace


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e


def _load(path: str):
    res = parse_workspace(_read(path))
    if not res.ok:
        lines = []
        for d in res.diagnostics:
            hint = f" ({d.hint})" if d.hint else ""
            lines.append(f"{path}:{d.line}:{d.column}: {d.message}{hint}")
        raise InputError("\n".join(lines))
    return res.workspace


def _config(args) -> RunConfig:
    return RunConfig(
        fuel=args.fuel,
        max_rounds=args.max_rounds,
        domain_size=args.domain_size,
        max_facts=args.max_facts,
        max_iter=args.max_iter,
        jobs=args.jobs,
    )


def _trace_sink(args):
    if not args.trace:
        return None

    def sink(event: dict) -> None:
        print(json.dumps(event, sort_keys=True), file=sys.stderr)

    return sink


def _chase_step_event(step: ChaseStep) -> dict:
    event = {
        "chase_step": step.index,
        "rule": step.rule_name,
        "binding": {v.name: str(t) for v, t in step.binding},
    }
    if step.added:
        event["added"] = [str(a) for a in step.added]
    if step.merged is not None:
        kept, dropped = step.merged
        event["merged"] = {"kept": str(kept), "dropped": str(dropped)}
    return event


def _chase_step_sink(step: ChaseStep) -> None:
    print(json.dumps(_chase_step_event(step), sort_keys=True), file=sys.stderr)


# ---------------------------------------------------------------------------
# text rendering of reports

def _term_text(x) -> str:
    if isinstance(x, str):
        return x
    return f"({_term_text(x[0])},{_term_text(x[1])})"


def _row_text(row) -> str:
    return "(" + ", ".join(_term_text(t) for t in row) + ")"


def _instance_text(data) -> str:
    parts = [f"{rel}{_row_text(row)}"
             for rel, rows in sorted(data.items()) for row in rows]
    return "{" + ", ".join(parts) + "}"


def _dinstance_lines(data, indent: str) -> list[str]:
    return [f"{indent}{s}: {_instance_text(inst)}"
            for s, inst in sorted(data.items())]


def _match_text(data) -> str:
    return ", ".join(f"{v} -> {_term_text(t)}"
                     for v, t in sorted(data.items()))


def _yesno(flag: bool) -> str:
    return "yes" if flag else "no"


def _r_validate(r):
    if r["ok"]:
        return ["workspace ok"]
    out = [f"{len(r['diagnostics'])} problem(s)"]
    for d in r["diagnostics"]:
        hint = f" ({d['hint']})" if d.get("hint") else ""
        out.append(f"  line {d['line']}, col {d['column']}: "
                   f"{d['message']}{hint}")
    return out


def _r_canonical(r):
    out = [f"canonical d-view of {r['query']}:"]
    for v in r["views"]:
        out.append(f"  {v['view']}")
        joins = ", ".join(v["join_vars"]) or "none"
        out.append(f"    join variables at {v['source']}: {joins}")
    out.append(f"monadic frontier: {_yesno(r['monadic_frontier'])}")
    return out


def _r_minimize(r):
    out = [f"original:  {r['original']}"]
    if "minimized" in r:
        out.append(f"minimized: {r['minimized']}")
        out.append(f"atoms {r['atoms_before']} -> {r['atoms_after']} "
                   f"({r['method']})")
    if r["status"] != "yes":
        out.append(f"status: {r['status']} "
                   "(the chase budget ran out before this settled)")
    return out


def _r_shuffles(r):
    out = [f"shuffle views for {r['query']}:"]
    for b in r["bundles"]:
        blocks = "".join("{" + ", ".join(bl) + "}" for bl in b["eqtype"])
        line = (f"  [{b['source']}] type {blocks}: "
                f"{len(b['invariant_shuffles'])} invariant class(es)")
        if b["undecided_shuffles"]:
            line += f", {len(b['undecided_shuffles'])} undecided"
        out.append(line)
        out.append(f"    {b['view']}")
    out.append(f"only trivial shuffles: {r['only_trivial']}")
    return out


def _r_to_ra(r):
    out = [f"{len(r['compiled'])} algebra view(s) compiled from {r['view']}:"]
    for c in r["compiled"]:
        out.append(f"  {c['name']}({', '.join(c['output'])}) @ {c['source']}")
        out.append(f"    {c['lisp']}")
    return out


def _r_determinacy(r):
    out = [f"{r['dview']} determines {r['query']}: {r['status']}"]
    if r["status"] == "determined":
        out.append(f"  settled at round {r['round']}")
        out.append(f"  match: {_match_text(r['match'])}")
    elif r["status"] == "not_determined":
        w = r["witness"]
        out.append(f"  witness found at round {r['round']}:")
        out.append(f"    query holds on {_instance_text(w['holds_query'])}")
        out.append(f"    query fails on {_instance_text(w['fails_query'])}")
    else:
        out.append(f"  {r['reason']}")
    return out


def _disclosure_lines(e, indent: str) -> list[str]:
    out = [f"{indent}{e['secret']}: {e['status']}"]
    if "secret_match" in e:
        out.append(f"{indent}  match: {_match_text(e['secret_match'])}")
    else:
        out.append(f"{indent}  escape witness:")
        out.extend(_dinstance_lines(e["witness"], indent + "    "))
    return out


def _r_disclosure(r):
    out = [f"secrets through {r['dview']}:"]
    for e in r["secrets"]:
        out.extend(_disclosure_lines(e, "  "))
    return out


def _r_replication(r):
    verdict = "applicable" if r["applicable"] else "not applicable"
    out = [f"replication design for {r['query']} against {r['secret']}: "
           f"{verdict}"]
    out.append(f"  {r['reason']}")
    if r["replicated_in_query"]:
        out.append("  replicated relations in the query: "
                   + ", ".join(r["replicated_in_query"]))
    b = r.get("bundle")
    if b:
        eq = b["equivalence_check"]
        out.append(f"  iterates shipped: {len(b['iterates'])}, "
                   f"pair heights {b['min_replicated_pair_height']}")
        out.append(f"  query preserved on every iterate: "
                   f"{_yesno(all(b['query_preserved']))}")
        out.append(f"  secret fails on every stretched iterate: "
                   f"{_yesno(all(b['secret_fails_on_stretched']))}")
        out.append(f"  stretch equivalence verified: "
                   f"{_yesno(eq['equivalent'])}")
    return out


def _r_design(r):
    out = [f"answer: {r['answer']}", r["statement"]]
    if "stage" in r:
        out.append(f"undecided at stage: {r['stage']}")
    if "minimized_query" in r:
        out.append(f"minimized query: {r['minimized_query']}")
    cq = r.get("cq")
    if cq:
        for e in cq["per_secret"]:
            out.append(f"  secret {e['secret']}: {e['answer']} ({e['stage']})")
    for e in r.get("per_secret", ()):
        out.append(f"  secret {e['secret']}: {e['answer']}")
    if "design" in r:
        out.append("published views:")
        out.extend(f"  {v}" for v in r["design"])
    if "closure_reason" in r:
        out.append(f"closed over all view languages by: {r['closure_reason']}")
    if "monadic_frontier" in r:
        out.append(f"monadic frontier: {_yesno(r['monadic_frontier'])}")
    if "only_trivial_shuffles" in r:
        out.append(f"only trivial shuffles: {r['only_trivial_shuffles']}")
    if "shuffle_views" in r:
        out.append("shuffle views attached as evidence:")
        out.extend(f"  {v}" for v in r["shuffle_views"])
    for probe in r.get("shuffle_probe", ()):
        out.append(f"  bounded probe of {probe['secret']}: "
                   f"{'hit' if probe['disclosing_within_bound'] else 'miss'} "
                   f"over {probe['classes_checked']} class(es)")
    for key in ("replication_note", "shuffle_note", "shuffle_budget_note",
                "shuffle_views_error"):
        if key in r:
            out.append(f"note: {r[key]}")
    return out


def _r_oracle_equiv(r):
    i1, i2 = r["instances"]
    word = "equivalent" if r["equivalent"] else "not equivalent"
    out = [f"{i1} and {i2} are {word} for {r['query']} at {r['source']}"]
    if "shuffle_verdict" in r:
        out.append(f"  shuffle-view verdict: {r['shuffle_verdict']}")
    if "witness" in r:
        w = r["witness"]
        out.append(f"  separating context (answer on side {w['side']}): "
                   f"{_instance_text(w['context'])}")
        out.append(f"    match: {_match_text(w['match'])}")
    return out


def _r_oracle_determinacy(r):
    cfg = r["config"]
    if not r["found"]:
        return [f"no counterexample for {r['dview']} vs {r['query']} within "
                f"domain {cfg['domain_size']}, "
                f"{cfg['max_facts']} fact(s) per relation"]
    out = ["determinacy counterexample:"]
    for tag, d, rows in zip("12", r["pair"], r["answers"]):
        out.append(f"  instance {tag}:")
        out.extend(_dinstance_lines(d, "    "))
        answers = "; ".join(_row_text(row) for row in rows) or "none"
        out.append(f"    answers: {answers}")
    return out


def _r_oracle_disclosure(r):
    hit = r["disclosing_within_bound"]
    out = [f"bounded probe of {r['secret']} through {r['dview']}: "
           + ("certain answer forced" if hit else "no certain answer forced")]
    out.append(f"  equivalence classes checked: {r['classes_checked']}")
    if hit:
        out.append("  witness:")
        out.extend(_dinstance_lines(r["witness"], "    "))
        out.append("  certain answer: "
                   + _row_text(r["certain_answer"]))
    else:
        out.append("  a miss is evidence only within the bound")
    return out


_RENDERERS = {
    "validate": _r_validate,
    "canonical": _r_canonical,
    "minimize": _r_minimize,
    "shuffles": _r_shuffles,
    "to-ra": _r_to_ra,
    "determinacy": _r_determinacy,
    "disclosure": _r_disclosure,
    "replication": _r_replication,
    "design": _r_design,
    "oracle-equiv": _r_oracle_equiv,
    "oracle-determinacy": _r_oracle_determinacy,
    "oracle-disclosure": _r_oracle_disclosure,
}


def _print_report(report: dict, args) -> None:
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(_RENDERERS[report["command"]](report)))


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_validate(args) -> int:
    report = report_validate(_read(args.workspace))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_canonical(args) -> int:
    report = report_canonical(_load(args.workspace), args.query)
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_minimize(args) -> int:
    report = report_minimize(
        _load(args.workspace), args.query,
        rule_names=args.rules, cfg=_config(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_shuffles(args) -> int:
    report = report_shuffles(
        _load(args.workspace), args.query,
        rule_names=args.rules, cfg=_config(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_to_ra(args) -> int:
    report = report_to_ra(_load(args.workspace), args.view)
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_determinacy(args) -> int:
    report = report_determinacy(
        _load(args.workspace), args.query, args.dview,
        rule_names=args.rules, cfg=_config(args), trace=_trace_sink(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_disclosure(args) -> int:
    report = report_disclosure(
        _load(args.workspace), args.dview, args.secret,
        trace=_trace_sink(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_design(args) -> int:
    result = run_design(
        _load(args.workspace), args.query, args.secret, args.design_class,
        cfg=_config(args), rule_names=args.rules, trace=_trace_sink(args))
    _print_report(result.data, args)
    return exit_code_for(result.data)


def _cmd_replication(args) -> int:
    report = report_replication(
        _load(args.workspace), args.query, args.secret, cfg=_config(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_oracle_equiv(args) -> int:
    i1, i2 = args.instances
    report = report_oracle_equiv(
        _load(args.workspace), args.query, args.source, i1, i2)
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_oracle_determinacy(args) -> int:
    report = report_oracle_determinacy(
        _load(args.workspace), args.query, args.dview,
        rule_names=args.rules, cfg=_config(args))
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_oracle_disclosure(args) -> int:
    report = report_oracle_disclosure(
        _load(args.workspace), args.dview, args.secret,
        rule_names=args.rules, cfg=_config(args),
        extra_names=args.extra or ())
    _print_report(report, args)
    return exit_code_for(report)


def _cmd_verify(args) -> int:
    try:
        report = json.loads(_read(args.report))
    except json.JSONDecodeError as e:
        raise InputError(f"{args.report} is not JSON: {e}") from e
    outcome = verify_report(report)
    if args.json:
        print(json.dumps({
            "ok": outcome.ok,
            "problems": list(outcome.problems),
            "unchecked": list(outcome.unchecked),
        }, indent=2, sort_keys=True))
    else:
        if outcome.ok and not outcome.unchecked:
            print("report ok: every embedded claim re-validated")
        for p in outcome.problems:
            print(f"problem: {p}")
        for u in outcome.unchecked:
            print(f"unchecked: {u}")
    return outcome.exit_code


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--json", action="store_true",
                        help="print the full JSON report")
    shared.add_argument("--trace", action="store_true",
                        help="stream progress events and chase steps as "
                             "JSON lines on stderr")
    shared.add_argument("--fuel", type=int, default=100_000,
                        help="chase step budget (default 100000)")
    shared.add_argument("--max-rounds", type=int, default=8,
                        help="determinacy round budget (default 8)")
    shared.add_argument("--domain-size", type=int, default=3,
                        help="bounded-oracle domain size (default 3)")
    shared.add_argument("--max-facts", type=int, default=1,
                        help="bounded-oracle facts per relation (default 1)")
    shared.add_argument("--max-iter", type=int, default=3,
                        help="replication stretch depth (default 3)")
    shared.add_argument("--jobs", type=int, default=1,
                        help="worker budget for oracle stages; results do "
                             "not depend on it")
    shared.add_argument("--rules", nargs="*", metavar="NAME", default=None,
                        help="rules to apply; default is every workspace "
                             "rule plus replication inclusions, the bare "
                             "flag selects none")

    parser = argparse.ArgumentParser(
        prog="viewforge",
        description="Design and verify distributed views over "
                    "multi-source relational schemas.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command")

    def command(name, handler, help_):
        sp = sub.add_parser(name, parents=[shared], help=help_)
        sp.set_defaults(handler=handler)
        return sp

    sp = command("validate", _cmd_validate,
                 "parse a workspace file and list diagnostics")
    sp.add_argument("workspace")

    sp = command("canonical", _cmd_canonical,
                 "canonical d-view of a query")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)

    sp = command("minimize", _cmd_minimize,
                 "minimize a query, optionally under rules")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)

    sp = command("shuffles", _cmd_shuffles,
                 "invariant shuffle views of a Boolean query")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)

    sp = command("to-ra", _cmd_to_ra,
                 "compile a disjunctive view to relational algebra")
    sp.add_argument("workspace")
    sp.add_argument("--view", required=True)

    sp = command("determinacy", _cmd_determinacy,
                 "decide whether a d-view determines a query")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)
    sp.add_argument("--dview", required=True)

    sp = command("disclosure", _cmd_disclosure,
                 "decide UN disclosure of secrets through a d-view")
    sp.add_argument("workspace")
    sp.add_argument("--dview", required=True)
    sp.add_argument("--secret", action="append", required=True,
                    help="secret to check, repeatable")

    sp = command("design", _cmd_design,
                 "decide whether a useful non-disclosing d-view exists")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)
    sp.add_argument("--secret", action="append", required=True,
                    help="secret to protect, repeatable")
    sp.add_argument("--class", dest="design_class", default="cq",
                    choices=("cq", "all", "replication"),
                    help="view language to search (default cq)")

    sp = command("replication", _cmd_replication,
                 "equivalence-class design under full replication")
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)
    sp.add_argument("--secret", required=True)

    oracle = sub.add_parser("oracle", help="bounded enumeration checks")
    osub = oracle.add_subparsers(dest="oracle_command", required=True,
                                 metavar="check")

    sp = osub.add_parser("equiv", parents=[shared],
                         help="exact source-equivalence of two instances")
    sp.set_defaults(handler=_cmd_oracle_equiv)
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)
    sp.add_argument("--source", required=True)
    sp.add_argument("--instances", nargs=2, required=True,
                    metavar=("I1", "I2"))

    sp = osub.add_parser("determinacy", parents=[shared],
                         help="search for a determinacy counterexample")
    sp.set_defaults(handler=_cmd_oracle_determinacy)
    sp.add_argument("workspace")
    sp.add_argument("--query", required=True)
    sp.add_argument("--dview", required=True)

    sp = osub.add_parser("disclosure", parents=[shared],
                         help="bounded certain-answer probe of a secret")
    sp.set_defaults(handler=_cmd_oracle_disclosure)
    sp.add_argument("workspace")
    sp.add_argument("--dview", required=True)
    sp.add_argument("--secret", required=True)
    sp.add_argument("--extra", action="append", metavar="INSTANCE",
                    help="named instance to test as a candidate witness, "
                         "repeatable")

    sp = command("verify", _cmd_verify,
                 "re-validate the witnesses inside a saved report")
    sp.add_argument("report")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    prev = None
    if args.trace:
        prev = set_step_sink(_chase_step_sink)
    try:
        return args.handler(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    finally:
        if args.trace:
            set_step_sink(prev)


if __name__ == "__main__":
    sys.exit(main())
