"""Fair bounded chase for existential and equality rules.

Triggers are processed first-in-first-out; every applied step rescans for
newly enabled triggers and appends them, which makes the sequence fair. A
trigger is re-validated when popped, so merges performed by equality rules
never leave stale work in the queue. Fuel counts applied steps only; skipped
inactive triggers are free. Exhausting fuel is an explicit outcome, never an
exception, and the partial instance is returned with it.

Merging follows constant-over-null precedence: a null is replaced by the
constant, two nulls keep the older one, and two distinct constants raise
EqualityClash (the rule set is inconsistent with the instance).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .homomorphism import all_homomorphisms, find_homomorphism
from .model import (
    Atom,
    Constant,
    EqualityRule,
    ExistentialRule,
    InputError,
    Instance,
    LabeledNull,
    NullFactory,
    Pair,
    Rule,
    Term,
    Variable,
    atom_key,
    substitute_atoms,
    substitute_instance,
    substitute_term,
    term_key,
)


class EqualityClash(Exception):
    """An equality rule forced two distinct constants together."""

    def __init__(self, rule_name: str, left: Term, right: Term) -> None:
        super().__init__(
            f"rule {rule_name} equates distinct constants {left} and {right}")
        self.rule_name = rule_name
        self.left = left
        self.right = right


@dataclass(frozen=True)
class ChaseConfig:
    fuel: int = 100_000
    nulls: Optional[NullFactory] = None
    null_prefix: str = ""


@dataclass(frozen=True)
class ChaseStep:
    index: int
    rule_name: str
    binding: tuple[tuple[Variable, Term], ...]
    added: tuple[Atom, ...] = ()
    merged: Optional[tuple[Term, Term]] = None  # (kept, dropped)


COMPLETED = "completed"
FUEL_EXHAUSTED = "fuel_exhausted"


@dataclass(frozen=True)
class ChaseResult:
    status: str
    instance: Instance
    steps: tuple[ChaseStep, ...]
    pending: int = 0

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED


_step_sink = None


def set_step_sink(sink):
    """Install a process-wide callback receiving every applied ChaseStep.

    Returns the previous sink so callers can restore it. The CLI uses this
    to export traces; concurrent chase runs would interleave their steps.
    """
    global _step_sink
    prev = _step_sink
    _step_sink = sink
    return prev


def _binding_key(rule_idx: int, rule: Rule, h: dict) -> tuple:
    body_vars = (rule.body_vars() if isinstance(rule, ExistentialRule)
                 else _eq_body_vars(rule))
    return (rule_idx, tuple(term_key(h[v]) for v in body_vars))


def _eq_body_vars(rule: EqualityRule) -> tuple[Variable, ...]:
    from .model import atoms_variables

    return atoms_variables(rule.body)


def _body_vars(rule: Rule) -> tuple[Variable, ...]:
    if isinstance(rule, ExistentialRule):
        return rule.body_vars()
    return _eq_body_vars(rule)


def _trigger_valid(rule: Rule, binding: dict, facts: set[Atom]) -> bool:
    for a in substitute_atoms(binding, rule.body):
        if a not in facts:
            return False
    return True


def _trigger_active(rule: Rule, binding: dict, facts: set[Atom]) -> bool:
    """Active means the rule still demands work under this binding."""
    if isinstance(rule, EqualityRule):
        return (substitute_term(binding, rule.lhs)
                != substitute_term(binding, rule.rhs))
    frontier = {v: binding[v] for v in rule.body_vars()
                if v in set(rule.head_vars())}
    return find_homomorphism(
        rule.head, Instance(frozenset(facts)), frontier) is None


def _merge_terms(rule_name: str, a: Term, b: Term) -> tuple[Term, Term]:
    """Pick (kept, dropped) under constant-over-null precedence."""
    a_null = isinstance(a, LabeledNull)
    b_null = isinstance(b, LabeledNull)
    if a_null and b_null:
        return (a, b) if a.uid < b.uid else (b, a)
    if a_null:
        return (b, a)
    if b_null:
        return (a, b)
    raise EqualityClash(rule_name, a, b)


def run_chase(
    start: Instance,
    rules: Sequence[Rule],
    cfg: ChaseConfig = ChaseConfig(),
) -> ChaseResult:
    """Chase ``start`` with ``rules`` until quiescent or out of fuel."""
    facts: set[Atom] = set(start.facts)
    nulls = cfg.nulls if cfg.nulls is not None else NullFactory()
    queue: deque[tuple[int, dict]] = deque()
    seen: set[tuple] = set()
    steps: list[ChaseStep] = []

    def record(step: ChaseStep) -> None:
        steps.append(step)
        if _step_sink is not None:
            _step_sink(step)

    def rescan() -> None:
        snapshot = Instance(frozenset(facts))
        for idx, rule in enumerate(rules):
            for h in all_homomorphisms(rule.body, snapshot):
                key = _binding_key(idx, rule, h)
                if key not in seen:
                    seen.add(key)
                    queue.append((idx, h))

    rescan()
    applied = 0
    while queue:
        idx, binding = queue.popleft()
        rule = rules[idx]
        if not _trigger_valid(rule, binding, facts):
            continue
        if not _trigger_active(rule, binding, facts):
            continue
        if applied >= cfg.fuel:
            queue.appendleft((idx, binding))
            pending = sum(
                1 for j, b in queue
                if _trigger_valid(rules[j], b, facts)
                and _trigger_active(rules[j], b, facts))
            return ChaseResult(
                FUEL_EXHAUSTED, Instance(frozenset(facts)),
                tuple(steps), pending)
        applied += 1
        bound = tuple(
            (v, binding[v]) for v in _body_vars(rule))
        if isinstance(rule, ExistentialRule):
            extension = dict(binding)
            for v in rule.existential_vars():
                extension[v] = nulls.fresh(
                    f"{cfg.null_prefix}n_{applied}_{v.name}")
            new_facts = substitute_atoms(extension, rule.head)
            facts.update(new_facts)
            record(ChaseStep(
                applied, rule.name, bound,
                added=tuple(sorted(new_facts, key=atom_key))))
        else:
            left = substitute_term(binding, rule.lhs)
            right = substitute_term(binding, rule.rhs)
            kept, dropped = _merge_terms(rule.name, left, right)
            sub = {dropped: kept}
            facts = set(substitute_instance(
                sub, Instance(frozenset(facts))).facts)
            record(ChaseStep(
                applied, rule.name, bound, merged=(kept, dropped)))
        rescan()

    return ChaseResult(COMPLETED, Instance(frozenset(facts)), tuple(steps))


def rules_satisfied(i: Instance, rules: Sequence[Rule]) -> bool:
    """True when no rule has an active trigger on ``i``."""
    facts = set(i.facts)
    for rule in rules:
        for h in all_homomorphisms(rule.body, i):
            if _trigger_active(rule, h, facts):
                return False
    return True


# ---------------------------------------------------------------------------
# Weak acyclicity

Position = tuple[str, int]


@dataclass(frozen=True)
class DependencyEdge:
    src: Position
    dst: Position
    special: bool


@dataclass(frozen=True)
class WeakAcyclicityReport:
    acyclic: bool
    nodes: tuple[Position, ...]
    edges: tuple[DependencyEdge, ...]
    cycle: tuple[Position, ...] = ()


def is_weakly_acyclic(rules: Sequence[Rule]) -> WeakAcyclicityReport:
    """Position dependency graph test; a cycle through a special edge means
    the chase may not terminate. Defined for TGDs only."""
    for r in rules:
        if isinstance(r, EqualityRule):
            raise InputError(
                f"weak acyclicity is defined for TGDs, {r.name} is an "
                "equality rule")
    tgds = list(rules)
    nodes: set[Position] = set()
    edges: set[DependencyEdge] = set()
    for rule in tgds:
        for atom in rule.body + rule.head:
            for i in range(atom.relation.arity):
                nodes.add((atom.relation.name, i))
        exported = set(rule.body_vars()) & set(rule.head_vars())
        existential = set(rule.existential_vars())
        body_positions: dict[Variable, list[Position]] = {}
        for atom in rule.body:
            for i, t in enumerate(atom.args):
                if isinstance(t, Variable):
                    body_positions.setdefault(t, []).append(
                        (atom.relation.name, i))
        for x in exported:
            for p in body_positions.get(x, ()):
                for atom in rule.head:
                    for i, t in enumerate(atom.args):
                        q = (atom.relation.name, i)
                        if t == x:
                            edges.add(DependencyEdge(p, q, False))
                        elif isinstance(t, Variable) and t in existential:
                            edges.add(DependencyEdge(p, q, True))

    adjacency: dict[Position, list[Position]] = {n: [] for n in nodes}
    for e in edges:
        adjacency[e.src].append(e.dst)
    for succ in adjacency.values():
        succ.sort()

    component = _tarjan_scc(sorted(nodes), adjacency)
    cycle: tuple[Position, ...] = ()
    for e in sorted(edges, key=lambda e: (e.src, e.dst)):
        if e.special and component[e.src] == component[e.dst]:
            path = _find_path(e.dst, e.src, adjacency, component[e.src], component)
            cycle = (e.src,) + tuple(path)
            break
    return WeakAcyclicityReport(
        acyclic=not cycle,
        nodes=tuple(sorted(nodes)),
        edges=tuple(sorted(edges, key=lambda e: (e.src, e.dst, e.special))),
        cycle=cycle)


def _tarjan_scc(
    nodes: list[Position], adjacency: dict[Position, list[Position]]
) -> dict[Position, int]:
    index: dict[Position, int] = {}
    low: dict[Position, int] = {}
    on_stack: set[Position] = set()
    stack: list[Position] = []
    component: dict[Position, int] = {}
    counter = [0]
    comp_id = [0]

    def strongconnect(v: Position) -> None:
        work = [(v, iter(adjacency[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adjacency[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component[w] = comp_id[0]
                    if w == node:
                        break
                comp_id[0] += 1

    for v in nodes:
        if v not in index:
            strongconnect(v)
    return component


def _find_path(
    start: Position,
    goal: Position,
    adjacency: dict[Position, list[Position]],
    comp: int,
    component: dict[Position, int],
) -> list[Position]:
    """Path from start to goal inside one strongly connected component."""
    if start == goal:
        return [goal]
    parents: dict[Position, Position] = {}
    frontier = [start]
    while frontier:
        nxt: list[Position] = []
        for u in frontier:
            for w in adjacency[u]:
                if component.get(w) != comp or w in parents or w == start:
                    continue
                parents[w] = u
                if w == goal:
                    path = [w]
                    while path[-1] != start:
                        path.append(parents[path[-1]])
                    return list(reversed(path))
                nxt.append(w)
        frontier = nxt
    return [start, goal]  # unreachable for a genuine SCC, defensive
