"""The workspace text format: parser, validation, and normalized printer.

A workspace file declares everything a run needs, one declaration per
line except brace blocks, with `#` starting a comment:

    source S { Trtmnt/3 }
    replicate T/2 across P, S
    query Q(pid) := Trtmnt(pid, tinfo, tdate)
    secret p := Trtmnt(pid, tinfo, tdate)
    rule r1 := R(x, y) -> exists z . R(y, z)
    view V(x) @ S := R(x, y) | E(x) where x!=y
    dview DV { V, W }
    instance I { R(a, b). }

Inside query, secret, rule, and view bodies a bare identifier is a
variable and a double-quoted one is a constant; inside instance blocks
identifiers are constants. A query without a head is Boolean.

Parsing collects diagnostics (line, column, message, fix hint) instead of
stopping at the first problem; a workspace is returned only when the text
is clean. Printing emits the normal form: sorted declarations, one space
after commas, facts one per line. Parsing the printer's output reproduces
the workspace exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (
    Atom,
    ConjunctiveQuery,
    Constant,
    DInstance,
    DSchema,
    DView,
    DisjunctiveQuery,
    ExistentialRule,
    Instance,
    InputError,
    RelationSymbol,
    Term,
    Variable,
    View,
    atom_key,
    term_key,
)

DECL_KEYWORDS = (
    "source", "replicate", "query", "secret", "rule", "view", "dview",
    "instance",
)
RESERVED = DECL_KEYWORDS + ("across", "exists", "where")

_PUNCT2 = (":=", "->", "!=")
_PUNCT1 = "{}(),./@|="


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str
    hint: str = ""

    def __str__(self) -> str:
        tail = f" ({self.hint})" if self.hint else ""
        return f"{self.line}:{self.column}: {self.message}{tail}"


@dataclass(frozen=True)
class Workspace:
    schema: DSchema
    queries: dict[str, ConjunctiveQuery] = field(default_factory=dict)
    secrets: dict[str, ConjunctiveQuery] = field(default_factory=dict)
    rules: dict[str, ExistentialRule] = field(default_factory=dict)
    views: dict[str, View] = field(default_factory=dict)
    dviews: dict[str, DView] = field(default_factory=dict)
    instances: dict[str, DInstance] = field(default_factory=dict)

    @staticmethod
    def empty() -> "Workspace":
        return Workspace(DSchema((), ()))


@dataclass(frozen=True)
class ParseResult:
    workspace: Optional[Workspace]
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.workspace is not None


# ---------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class Token:
    kind: str  # ident | string | number | punct
    text: str
    line: int
    col: int


def _tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    problems: list[Diagnostic] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c == "#":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if c.isspace():
            advance(1)
            continue
        if c == '"':
            start_line, start_col = line, col
            advance(1)
            begin = i
            while i < n and text[i] not in '"\n':
                advance(1)
            if i >= n or text[i] == "\n":
                problems.append(Diagnostic(
                    start_line, start_col, "unterminated string",
                    'close the constant with "'))
                continue
            tokens.append(Token("string", text[begin:i], start_line, start_col))
            advance(1)
            continue
        two = text[i:i + 2]
        if two in _PUNCT2:
            tokens.append(Token("punct", two, line, col))
            advance(2)
            continue
        if c in _PUNCT1:
            tokens.append(Token("punct", c, line, col))
            advance(1)
            continue
        if c.isalpha() or c == "_":
            start_line, start_col = line, col
            begin = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                advance(1)
            tokens.append(Token("ident", text[begin:i], start_line, start_col))
            continue
        if c.isdigit():
            start_line, start_col = line, col
            begin = i
            while i < n and text[i].isdigit():
                advance(1)
            tokens.append(Token("number", text[begin:i], start_line, start_col))
            continue
        problems.append(Diagnostic(
            line, col, f"unexpected character {c!r}",
            "remove it or quote the constant"))
        advance(1)
    return tokens, problems


# ---------------------------------------------------------------------------
# raw declarations (before schema resolution)


@dataclass
class RawAtom:
    relation: Token
    terms: list[Token]  # ident or string tokens


@dataclass
class RawSource:
    name: Token
    relations: list[tuple[Token, Token]]  # (name, arity)


@dataclass
class RawReplicate:
    relation: Token
    arity: Token
    sources: list[Token]


@dataclass
class RawQuery:
    kind: str  # query | secret
    name: Token
    head: list[Token]
    atoms: list[RawAtom]


@dataclass
class RawRule:
    name: Token
    body: list[RawAtom]
    exists: list[Token]
    head: list[RawAtom]


@dataclass
class RawView:
    name: Token
    head: list[Token]
    source: Token
    disjuncts: list[list[RawAtom]]
    guards: list[tuple[Token, str, Token]]  # (left, "=" | "!=", right)


@dataclass
class RawDView:
    name: Token
    members: list[Token]


@dataclass
class RawInstance:
    name: Token
    facts: list[RawAtom]


class _Parser:
    def __init__(self, tokens: list[Token], problems: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.problems = problems
        self.decls: list = []

    # -- token helpers

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Optional[Token]:
        t = self.peek()
        if t is not None:
            self.pos += 1
        return t

    def at_punct(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.kind == "punct" and t.text == text

    def eat_punct(self, text: str, hint: str = "") -> bool:
        if self.at_punct(text):
            self.pos += 1
            return True
        t = self.peek()
        where = (t.line, t.col) if t else self._eof_pos()
        got = f"found {t.text!r}" if t else "found end of file"
        self.problems.append(Diagnostic(
            where[0], where[1], f"expected {text!r}, {got}", hint))
        return False

    def eat_name(self, what: str, hint: str = "") -> Optional[Token]:
        t = self.peek()
        if t is not None and t.kind == "ident" and t.text not in RESERVED:
            self.pos += 1
            return t
        if t is not None and t.kind == "ident":
            self.problems.append(Diagnostic(
                t.line, t.col, f"{t.text!r} is a reserved word",
                f"rename the {what}"))
            self.pos += 1
            return None
        where = (t.line, t.col) if t else self._eof_pos()
        got = f"found {t.text!r}" if t else "found end of file"
        self.problems.append(Diagnostic(
            where[0], where[1], f"expected a {what} name, {got}", hint))
        return None

    def _eof_pos(self) -> tuple[int, int]:
        if self.tokens:
            last = self.tokens[-1]
            return last.line, last.col + len(last.text)
        return 1, 1

    def skip_to_decl(self) -> None:
        while True:
            t = self.peek()
            if t is None:
                return
            if t.kind == "ident" and t.text in DECL_KEYWORDS:
                return
            self.pos += 1

    def bail(self) -> None:
        """Abandon the current declaration after a structural error."""
        self.skip_to_decl()

    # -- grammar

    def run(self) -> None:
        while True:
            t = self.peek()
            if t is None:
                return
            if t.kind == "ident" and t.text in DECL_KEYWORDS:
                self.pos += 1
                getattr(self, "parse_" + t.text)()
            else:
                self.problems.append(Diagnostic(
                    t.line, t.col,
                    f"expected a declaration keyword, found {t.text!r}",
                    "declarations start with one of: "
                    + ", ".join(DECL_KEYWORDS)))
                self.pos += 1
                self.skip_to_decl()

    def parse_source(self) -> None:
        name = self.eat_name("source")
        if name is None or not self.eat_punct("{", "source S { R/2 }"):
            return self.bail()
        rels: list[tuple[Token, Token]] = []
        if not self.at_punct("}"):
            while True:
                rel = self.eat_name("relation")
                if rel is None or not self.eat_punct("/", "declare arity as R/2"):
                    return self.bail()
                arity = self.take()
                if arity is None or arity.kind != "number":
                    self.problems.append(Diagnostic(
                        rel.line, rel.col, "arity must be a number",
                        "declare arity as R/2"))
                    return self.bail()
                rels.append((rel, arity))
                if self.at_punct(","):
                    self.pos += 1
                    continue
                break
        if not self.eat_punct("}", "close the source block"):
            return self.bail()
        self.decls.append(RawSource(name, rels))

    def parse_replicate(self) -> None:
        rel = self.eat_name("relation")
        if rel is None or not self.eat_punct("/", "declare arity as T/2"):
            return self.bail()
        arity = self.take()
        if arity is None or arity.kind != "number":
            self.problems.append(Diagnostic(
                rel.line, rel.col, "arity must be a number",
                "declare arity as T/2"))
            return self.bail()
        t = self.peek()
        if t is None or t.kind != "ident" or t.text != "across":
            where = (t.line, t.col) if t else self._eof_pos()
            self.problems.append(Diagnostic(
                where[0], where[1], "expected 'across'",
                "replicate T/2 across s1, s2"))
            return self.bail()
        self.pos += 1
        sources: list[Token] = []
        while True:
            s = self.eat_name("source")
            if s is None:
                return self.bail()
            sources.append(s)
            if self.at_punct(","):
                self.pos += 1
                continue
            break
        if len(sources) < 2:
            self.problems.append(Diagnostic(
                rel.line, rel.col,
                "replication needs at least two sources",
                "list them as: across s1, s2"))
        self.decls.append(RawReplicate(rel, arity, sources))

    def _parse_var_list(self, closer: str = ")") -> Optional[list[Token]]:
        out: list[Token] = []
        if self.at_punct(closer):
            self.pos += 1
            return out
        while True:
            v = self.eat_name("variable")
            if v is None:
                return None
            out.append(v)
            if self.at_punct(","):
                self.pos += 1
                continue
            break
        if not self.eat_punct(closer):
            return None
        return out

    def _parse_atom(self, ground: bool) -> Optional[RawAtom]:
        rel = self.eat_name("relation")
        if rel is None or not self.eat_punct("(", "write atoms as R(x, y)"):
            return None
        terms: list[Token] = []
        if not self.at_punct(")"):
            while True:
                t = self.peek()
                if t is not None and (
                        t.kind == "string"
                        or (t.kind == "ident" and t.text not in RESERVED)):
                    terms.append(t)
                    self.pos += 1
                else:
                    where = (t.line, t.col) if t else self._eof_pos()
                    kind = "constant" if ground else "term"
                    self.problems.append(Diagnostic(
                        where[0], where[1], f"expected a {kind}",
                        'variables are bare, constants are "quoted"'))
                    return None
                if self.at_punct(","):
                    self.pos += 1
                    continue
                break
        if not self.eat_punct(")", "close the atom"):
            return None
        return RawAtom(rel, terms)

    def _parse_atom_list(self, ground: bool = False) -> Optional[list[RawAtom]]:
        atoms: list[RawAtom] = []
        while True:
            a = self._parse_atom(ground)
            if a is None:
                return None
            atoms.append(a)
            if self.at_punct(","):
                self.pos += 1
                continue
            return atoms

    def parse_query(self, kind: str = "query") -> None:
        name = self.eat_name(kind)
        if name is None:
            return self.bail()
        head: list[Token] = []
        if self.at_punct("("):
            self.pos += 1
            got = self._parse_var_list()
            if got is None:
                return self.bail()
            head = got
        if not self.eat_punct(":=", f"{kind} Name := R(x, y)"):
            return self.bail()
        atoms = self._parse_atom_list()
        if atoms is None:
            return self.bail()
        self.decls.append(RawQuery(kind, name, head, atoms))

    def parse_secret(self) -> None:
        self.parse_query("secret")

    def parse_rule(self) -> None:
        name = self.eat_name("rule")
        if name is None or not self.eat_punct(
                ":=", "rule Name := body -> head"):
            return self.bail()
        body = self._parse_atom_list()
        if body is None or not self.eat_punct("->", "separate body and head with ->"):
            return self.bail()
        exists: list[Token] = []
        t = self.peek()
        if t is not None and t.kind == "ident" and t.text == "exists":
            self.pos += 1
            while True:
                v = self.eat_name("variable")
                if v is None:
                    return self.bail()
                exists.append(v)
                if self.at_punct(","):
                    self.pos += 1
                    continue
                break
            if not self.eat_punct(".", "end the exists list with a period"):
                return self.bail()
        head = self._parse_atom_list()
        if head is None:
            return self.bail()
        self.decls.append(RawRule(name, body, exists, head))

    def parse_view(self) -> None:
        name = self.eat_name("view")
        if name is None or not self.eat_punct(
                "(", "view V(x) @ src := R(x, y)"):
            return self.bail()
        head = self._parse_var_list()
        if head is None or not self.eat_punct("@", "name the source as @ src"):
            return self.bail()
        source = self.eat_name("source")
        if source is None or not self.eat_punct(":="):
            return self.bail()
        disjuncts: list[list[RawAtom]] = []
        while True:
            atoms = self._parse_atom_list()
            if atoms is None:
                return self.bail()
            disjuncts.append(atoms)
            if self.at_punct("|"):
                self.pos += 1
                continue
            break
        guards: list[tuple[Token, str, Token]] = []
        t = self.peek()
        if t is not None and t.kind == "ident" and t.text == "where":
            self.pos += 1
            while True:
                left = self.eat_name("variable")
                if left is None:
                    return self.bail()
                if self.at_punct("="):
                    op = "="
                elif self.at_punct("!="):
                    op = "!="
                else:
                    w = self.peek()
                    where = (w.line, w.col) if w else self._eof_pos()
                    self.problems.append(Diagnostic(
                        where[0], where[1], "expected = or != in guard",
                        "write guards as x=y or x!=y"))
                    return self.bail()
                self.pos += 1
                right = self.eat_name("variable")
                if right is None:
                    return self.bail()
                guards.append((left, op, right))
                if self.at_punct(","):
                    self.pos += 1
                    continue
                break
        self.decls.append(RawView(name, head, source, disjuncts, guards))

    def parse_dview(self) -> None:
        name = self.eat_name("dview")
        if name is None or not self.eat_punct("{", "dview D { V1, V2 }"):
            return self.bail()
        members: list[Token] = []
        if not self.at_punct("}"):
            while True:
                m = self.eat_name("view")
                if m is None:
                    return self.bail()
                members.append(m)
                if self.at_punct(","):
                    self.pos += 1
                    continue
                break
        if not self.eat_punct("}", "close the dview block"):
            return self.bail()
        self.decls.append(RawDView(name, members))

    def parse_instance(self) -> None:
        name = self.eat_name("instance")
        if name is None or not self.eat_punct(
                "{", "instance I { R(a, b). }"):
            return self.bail()
        facts: list[RawAtom] = []
        while not self.at_punct("}"):
            if self.peek() is None:
                self.eat_punct("}", "close the instance block")
                return self.bail()
            a = self._parse_atom(ground=True)
            if a is None or not self.eat_punct(".", "end each fact with a period"):
                return self.bail()
            facts.append(a)
        self.pos += 1
        self.decls.append(RawInstance(name, facts))


# ---------------------------------------------------------------------------
# resolution


class _Resolver:
    def __init__(self, decls: list, problems: list[Diagnostic]):
        self.decls = decls
        self.problems = problems

    def error(self, tok: Token, message: str, hint: str = "") -> None:
        self.problems.append(Diagnostic(tok.line, tok.col, message, hint))

    def build_schema(self) -> DSchema:
        sources: list[str] = []
        owner: dict[str, tuple[str, list[str], Token]] = {}  # name -> (kind, srcs, at)
        arities: dict[str, int] = {}
        for d in self.decls:
            if isinstance(d, RawSource):
                if d.name.text in sources:
                    self.error(d.name, f"source {d.name.text!r} declared twice",
                               "merge the two blocks")
                    continue
                sources.append(d.name.text)
        for d in self.decls:
            if isinstance(d, RawSource):
                for rel, arity in d.relations:
                    if rel.text in owner:
                        kind = owner[rel.text][0]
                        self.error(
                            rel, f"relation {rel.text!r} already declared "
                            f"({kind})",
                            "a relation lives at one source or one "
                            "replication group")
                        continue
                    owner[rel.text] = ("local", [d.name.text], rel)
                    arities[rel.text] = int(arity.text)
            elif isinstance(d, RawReplicate):
                if d.relation.text in owner:
                    kind = owner[d.relation.text][0]
                    self.error(
                        d.relation,
                        f"relation {d.relation.text!r} already declared "
                        f"({kind})",
                        "a relation lives at one source or one replication "
                        "group")
                    continue
                srcs: list[str] = []
                for s in d.sources:
                    if s.text not in sources:
                        self.error(s, f"unknown source {s.text!r}",
                                   "declare it with a source block")
                    elif s.text in srcs:
                        self.error(s, f"source {s.text!r} listed twice")
                    else:
                        srcs.append(s.text)
                if len(srcs) < 2:
                    self.error(d.relation,
                               "replication needs at least two distinct "
                               "sources")
                    continue
                owner[d.relation.text] = ("replicated", srcs, d.relation)
                arities[d.relation.text] = int(d.arity.text)
        relations = tuple(
            RelationSymbol(name, arities[name], tuple(srcs))
            for name, (_, srcs, _) in owner.items())
        try:
            return DSchema(tuple(sources), relations)
        except InputError as e:
            self.problems.append(Diagnostic(1, 1, str(e)))
            return DSchema((), ())

    def to_atom(self, schema: DSchema, raw: RawAtom, ground: bool) -> Optional[Atom]:
        if not schema.has_relation(raw.relation.text):
            self.error(raw.relation, f"unknown relation {raw.relation.text!r}",
                       "declare it in a source block or a replicate line")
            return None
        rel = schema.relation(raw.relation.text)
        if len(raw.terms) != rel.arity:
            self.error(raw.relation,
                       f"relation {rel.name} has arity {rel.arity}, "
                       f"got {len(raw.terms)} terms")
            return None
        args: list[Term] = []
        for t in raw.terms:
            if t.kind == "string" or ground:
                args.append(Constant(t.text))
            else:
                args.append(Variable(t.text))
        return Atom(rel, tuple(args))

    def to_atoms(self, schema: DSchema, raws: list[RawAtom],
                 ground: bool = False) -> Optional[tuple[Atom, ...]]:
        out = []
        bad = False
        for raw in raws:
            a = self.to_atom(schema, raw, ground)
            if a is None:
                bad = True
            else:
                out.append(a)
        return None if bad else tuple(out)

    def resolve(self) -> Workspace:
        schema = self.build_schema()
        ws = Workspace(schema)

        def fresh_name(table: dict, tok: Token, kind: str) -> Optional[str]:
            if tok.text in table:
                self.error(tok, f"{kind} {tok.text!r} declared twice",
                           "names are unique per declaration kind")
                return None
            return tok.text

        for d in self.decls:
            if isinstance(d, RawQuery):
                table = ws.queries if d.kind == "query" else ws.secrets
                name = fresh_name(table, d.name, d.kind)
                atoms = self.to_atoms(schema, d.atoms)
                if name is None or atoms is None:
                    continue
                head = tuple(Variable(v.text) for v in d.head)
                try:
                    table[name] = ConjunctiveQuery(name, head, atoms)
                except InputError as e:
                    self.error(d.name, str(e),
                               "head variables must occur in the body")
            elif isinstance(d, RawRule):
                name = fresh_name(ws.rules, d.name, "rule")
                body = self.to_atoms(schema, d.body)
                head = self.to_atoms(schema, d.head)
                if name is None or body is None or head is None:
                    continue
                try:
                    rule = ExistentialRule(name, body, head)
                except InputError as e:
                    self.error(d.name, str(e))
                    continue
                declared = tuple(v.text for v in d.exists)
                computed = tuple(v.name for v in rule.existential_vars())
                if sorted(declared) != sorted(computed):
                    self.error(
                        d.name,
                        f"rule {name}: exists clause lists "
                        f"[{', '.join(declared)}] but the head introduces "
                        f"[{', '.join(computed)}]",
                        "list exactly the head variables missing from the "
                        "body")
                    continue
                ws.rules[name] = rule
            elif isinstance(d, RawView):
                name = fresh_name(ws.views, d.name, "view")
                if name is None:
                    continue
                if d.source.text not in schema.sources:
                    self.error(d.source, f"unknown source {d.source.text!r}")
                    continue
                disjuncts = []
                bad = False
                for raws in d.disjuncts:
                    atoms = self.to_atoms(schema, raws)
                    if atoms is None:
                        bad = True
                        break
                    disjuncts.append(atoms)
                    for raw, a in zip(raws, atoms):
                        if d.source.text not in a.relation.sources:
                            self.error(
                                raw.relation,
                                f"relation {a.relation.name} is not at "
                                f"source {d.source.text}",
                                "a view reads exactly one source")
                            bad = True
                if bad:
                    continue
                head = tuple(Variable(v.text) for v in d.head)
                try:
                    if len(disjuncts) == 1 and not d.guards:
                        defn = ConjunctiveQuery(name, head, disjuncts[0])
                    else:
                        eqs = tuple(
                            (Variable(l.text), Variable(r.text))
                            for l, op, r in d.guards if op == "=")
                        neqs = tuple(
                            (Variable(l.text), Variable(r.text))
                            for l, op, r in d.guards if op == "!=")
                        parts = []
                        for k, atoms in enumerate(disjuncts):
                            present = {v for a in atoms for v in a.variables()}
                            frees = tuple(v for v in head if v in present)
                            parts.append(ConjunctiveQuery(
                                f"{name}_d{k + 1}", frees, atoms))
                        defn = DisjunctiveQuery(
                            name, head, tuple(parts), eqs, neqs)
                    ws.views[name] = View(name, d.source.text, defn)
                except InputError as e:
                    self.error(d.name, str(e))
            elif isinstance(d, RawDView):
                name = fresh_name(ws.dviews, d.name, "dview")
                if name is None:
                    continue
                members = []
                bad = False
                for m in d.members:
                    if m.text not in ws.views:
                        self.error(m, f"unknown view {m.text!r}",
                                   "declare views before grouping them")
                        bad = True
                    else:
                        members.append(ws.views[m.text])
                if bad:
                    continue
                try:
                    ws.dviews[name] = DView(tuple(members))
                except InputError as e:
                    self.error(d.name, str(e))
            elif isinstance(d, RawInstance):
                name = fresh_name(ws.instances, d.name, "instance")
                facts = self.to_atoms(schema, d.facts, ground=True)
                if name is None or facts is None:
                    continue
                ws.instances[name] = DInstance.from_facts(schema, facts)
        return ws


def parse_workspace(text: str) -> ParseResult:
    tokens, problems = _tokenize(text)
    parser = _Parser(tokens, problems)
    parser.run()
    ws = _Resolver(parser.decls, problems).resolve()
    problems.sort(key=lambda d: (d.line, d.column, d.message))
    if problems:
        return ParseResult(None, tuple(problems))
    return ParseResult(ws, ())


# ---------------------------------------------------------------------------
# printer


_IDENT_OK = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"


def _print_term(t: Term, ground: bool) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        bare = (t.name and not t.name[0].isdigit()
                and all(c in _IDENT_OK for c in t.name)
                and t.name not in RESERVED)
        if ground and bare:
            return t.name
        return f'"{t.name}"'
    raise InputError(f"cannot print term {t} in workspace syntax")


def _print_atom(a: Atom, ground: bool = False) -> str:
    args = ", ".join(_print_term(t, ground) for t in a.args)
    return f"{a.relation.name}({args})"


def _print_body(atoms: Sequence[Atom]) -> str:
    return ", ".join(_print_atom(a) for a in atoms)


def print_query(q: ConjunctiveQuery, keyword: str = "query") -> str:
    head = f"({', '.join(v.name for v in q.free_vars)})" if q.free_vars else ""
    return f"{keyword} {q.name}{head} := {_print_body(q.atoms)}"


def print_rule(r: ExistentialRule) -> str:
    ex = r.existential_vars()
    mid = f"exists {', '.join(v.name for v in ex)} . " if ex else ""
    return (f"rule {r.name} := {_print_body(r.body)} -> "
            f"{mid}{_print_body(r.head)}")


def print_view(v: View) -> str:
    d = v.definition
    if isinstance(d, ConjunctiveQuery):
        head = ", ".join(x.name for x in d.free_vars)
        return f"view {v.name}({head}) @ {v.source} := {_print_body(d.atoms)}"
    if isinstance(d, DisjunctiveQuery):
        head = ", ".join(x.name for x in d.head_vars)
        body = " | ".join(_print_body(part.atoms) for part in d.disjuncts)
        guards = [f"{x.name}={y.name}" for x, y in d.equalities]
        guards += [f"{x.name}!={y.name}" for x, y in d.disequalities]
        where = f" where {', '.join(guards)}" if guards else ""
        return f"view {v.name}({head}) @ {v.source} := {body}{where}"
    raise InputError(
        f"view {v.name}: compiled definitions have no workspace syntax")


def print_workspace(ws: Workspace) -> str:
    lines: list[str] = []
    for s in ws.schema.sources:
        rels = sorted(
            (r for r in ws.schema.relations_of(s) if not r.is_replicated),
            key=lambda r: r.name)
        decl = ", ".join(f"{r.name}/{r.arity}" for r in rels)
        lines.append(f"source {s} {{ {decl} }}" if rels
                     else f"source {s} {{ }}")
    for r in sorted(ws.schema.replicated(), key=lambda r: r.name):
        order = [s for s in ws.schema.sources if s in r.sources]
        lines.append(
            f"replicate {r.name}/{r.arity} across {', '.join(order)}")
    for name in sorted(ws.queries):
        lines.append(print_query(ws.queries[name], "query"))
    for name in sorted(ws.secrets):
        lines.append(print_query(ws.secrets[name], "secret"))
    for name in sorted(ws.rules):
        lines.append(print_rule(ws.rules[name]))
    for name in sorted(ws.views):
        lines.append(print_view(ws.views[name]))
    for name in sorted(ws.dviews):
        members = ", ".join(v.name for v in ws.dviews[name].views)
        lines.append(f"dview {name} {{ {members} }}" if members
                     else f"dview {name} {{ }}")
    for name in sorted(ws.instances):
        lines.append(f"instance {name} {{")
        for f in sorted(ws.instances[name].merged().facts, key=atom_key):
            lines.append(f"  {_print_atom(f, ground=True)}.")
        lines.append("}")
    return "\n".join(lines) + ("\n" if lines else "")
