"""Recursive-descent parser for the protocol language."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal, NamedTuple

from .ast import (
    Choice,
    Continue,
    End,
    GlobalBody,
    GlobalProtocol,
    InitArg,
    Initiates,
    Interaction,
    Par,
    ProtocolModule,
    Rec,
)

KEYWORDS = frozenset({
    "global", "protocol", "role", "from", "to", "choice", "at", "or",
    "rec", "continue", "par", "and", "initiates", "new", "handle",
})


@dataclass(frozen=True)
class Diagnostic:
    severity: Literal["error", "warning"]
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ProtocolError(Exception):
    """Raised when a module has error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


class Token(NamedTuple):
    kind: str  # "name", "kw", "punct", "eof"
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[(){},;])
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        column = pos - line_start + 1
        if m is None:
            raise ProtocolError([Diagnostic("error", line, column,
                                            f"unexpected character {source[pos]!r}")])
        kind = m.lastgroup
        text = m.group()
        if kind == "name":
            tokens.append(Token("kw" if text in KEYWORDS else "name", text, line, column))
        elif kind == "punct":
            tokens.append(Token("punct", text, line, column))
        elif kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "block_comment":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def fail(self, message: str, tok: Token | None = None) -> ProtocolError:
        tok = tok or self.tok
        return ProtocolError([Diagnostic("error", tok.line, tok.column, message)])

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind == "name":
            raise self.fail(f"expected {text!r}, found {self.describe(tok)}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "name":
            self.i += 1
            return True
        return False

    def name(self, what: str = "name") -> str:
        tok = self.tok
        if tok.kind != "name":
            raise self.fail(f"expected {what}, found {self.describe(tok)}")
        self.i += 1
        return tok.text

    def module(self) -> list[GlobalProtocol]:
        protocols = []
        while self.tok.kind != "eof":
            protocols.append(self.protocol())
        if not protocols:
            raise self.fail("expected at least one 'global protocol'")
        return protocols

    def protocol(self) -> GlobalProtocol:
        start = self.expect("global")
        self.expect("protocol")
        name = self.name("protocol name")
        self.expect("(")
        roles = [self.role_decl()]
        while self.accept(","):
            roles.append(self.role_decl())
        self.expect(")")
        self.expect("{")
        body = self.body()
        self.expect("}")
        return GlobalProtocol(name, tuple(roles), body, (start.line, start.column))

    def role_decl(self) -> str:
        self.expect("role")
        return self.name("role name")

    def body(self) -> GlobalBody:
        stmts: list[tuple[Token, GlobalBody]] = []
        while not (self.tok.text == "}" and self.tok.kind == "punct") and self.tok.kind != "eof":
            tok = self.tok
            stmts.append((tok, self.stmt()))
        result: GlobalBody = End((self.tok.line, self.tok.column))
        for idx in range(len(stmts) - 1, -1, -1):
            tok, stmt = stmts[idx]
            if isinstance(stmt, Continue):
                if idx != len(stmts) - 1:
                    nxt = stmts[idx + 1][0]
                    raise self.fail("statement after 'continue' is unreachable", nxt)
                result = stmt
            else:
                result = _with_cont(stmt, result)
        return result

    def block(self) -> GlobalBody:
        self.expect("{")
        body = self.body()
        self.expect("}")
        return body

    def stmt(self) -> GlobalBody:
        tok = self.tok
        loc = (tok.line, tok.column)
        if tok.kind == "kw":
            if tok.text == "choice":
                self.i += 1
                self.expect("at")
                at = self.name("role name")
                branches = [self.block()]
                while self.accept("or"):
                    branches.append(self.block())
                return Choice(at, tuple(branches), End(), loc)
            if tok.text == "rec":
                self.i += 1
                label = self.name("recursion label")
                return Rec(label, self.block(), End(), loc)
            if tok.text == "continue":
                self.i += 1
                label = self.name("recursion label")
                self.expect(";")
                return Continue(label, loc)
            if tok.text == "par":
                self.i += 1
                blocks = [self.block()]
                while self.accept("and"):
                    blocks.append(self.block())
                return Par(tuple(blocks), End(), loc)
            raise self.fail(f"unknown construct {tok.text!r}")
        if tok.kind == "name":
            nxt = self.peek()
            if nxt.text == "(" and nxt.kind == "punct":
                return self.interaction()
            if nxt.text == "initiates" and nxt.kind == "kw":
                return self.initiates()
            raise self.fail(f"unknown construct starting with {tok.text!r}")
        raise self.fail(f"expected a statement, found {self.describe(tok)}")

    def interaction(self) -> Interaction:
        tok = self.tok
        label = self.name("message label")
        self.expect("(")
        sorts: list[str] = []
        if not self.accept(")"):
            sorts.append(self.name("payload sort"))
            while self.accept(","):
                sorts.append(self.name("payload sort"))
            self.expect(")")
        self.expect("from")
        sender = self.name("role name")
        self.expect("to")
        receivers = [self.name("role name")]
        while self.accept(","):
            receivers.append(self.name("role name"))
        self.expect(";")
        return Interaction(label, tuple(sorts), sender, tuple(receivers), End(),
                           (tok.line, tok.column))

    def initiates(self) -> Initiates:
        tok = self.tok
        initiator = self.name("role name")
        self.expect("initiates")
        child = self.name("protocol name")
        self.expect("(")
        args = [self.init_arg()]
        while self.accept(","):
            args.append(self.init_arg())
        self.expect(")")
        success: GlobalBody = End()
        handlers: list[tuple[str, GlobalBody]] = []
        has_block = False
        if self.tok.text == "{" and self.tok.kind == "punct":
            has_block = True
            success = self.block()
            while self.accept("handle"):
                self.expect("(")
                failure = self.name("failure name")
                self.expect(")")
                handlers.append((failure, self.block()))
        self.accept(";")
        return Initiates(initiator, child, tuple(args), success, tuple(handlers),
                         has_block, End(), (tok.line, tok.column))

    def init_arg(self) -> InitArg:
        if self.accept("new"):
            return InitArg(self.name("role name"), new=True)
        return InitArg(self.name("role name"))


def _with_cont(stmt: GlobalBody, cont: GlobalBody) -> GlobalBody:
    if isinstance(stmt, Interaction):
        return Interaction(stmt.label, stmt.sorts, stmt.sender, stmt.receivers, cont, stmt.loc)
    if isinstance(stmt, Choice):
        return Choice(stmt.at, stmt.branches, cont, stmt.loc)
    if isinstance(stmt, Rec):
        return Rec(stmt.label, stmt.body, cont, stmt.loc)
    if isinstance(stmt, Par):
        return Par(stmt.blocks, cont, stmt.loc)
    if isinstance(stmt, Initiates):
        return Initiates(stmt.initiator, stmt.child, stmt.args, stmt.success, stmt.handlers,
                         stmt.has_block, cont, stmt.loc)
    raise TypeError(stmt)


def parse_module(source: str) -> ProtocolModule:
    """Parse protocol source text.

    Raises:
        ProtocolError: on a syntax error, a duplicate protocol name, or a
            ``continue`` that is not enclosed by a matching ``rec``.
    """
    from .validate import check_recursion_scoping

    protocols = _Parser(tokenize(source)).module()
    diagnostics: list[Diagnostic] = []
    table: dict[str, GlobalProtocol] = {}
    for proto in protocols:
        if proto.name in table:
            line, col = proto.loc
            diagnostics.append(Diagnostic("error", line, col,
                                          f"duplicate protocol name {proto.name!r}"))
            continue
        table[proto.name] = proto
        diagnostics.extend(check_recursion_scoping(proto))
    if diagnostics:
        raise ProtocolError(diagnostics)
    return ProtocolModule(table)
