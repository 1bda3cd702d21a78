"""Recursive-descent parser for field expressions.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | 'x0'..'x3' | 'pi' | NAME | FUNC '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable

from . import nodes
from .nodes import Expr

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[-+*/^()])"
    r")"
)
_COORD = re.compile(r"x([0-3])$")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str):
        super().__init__(f"{message} at offset {offset} in {text!r}")
        self.offset = offset
        self.text = text


class UnknownIdentifierError(ExprSyntaxError):
    pass


class _Parser:
    def __init__(self, text: str, params):
        self.text = text
        self.params = None if params is None else frozenset(params)
        self.tokens = self._tokenize(text)
        self.i = 0

    def _tokenize(self, text):
        out = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {text[start]!r}", start, text)
            kind = m.lastgroup
            if kind is None:
                break
            out.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        out.append(("eof", "", len(text)))
        return out

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, sym):
        kind, val, off = self.peek()
        if kind != "sym" or val != sym:
            found = "end of input" if kind == "eof" else repr(val)
            raise ExprSyntaxError(f"expected {sym!r}, found {found}", off, self.text)
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"expected operator or end of input, found {val!r}", off, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "sym" and val in "+-":
                self.advance()
                rhs = self.term()
                e = nodes.add(e, rhs) if val == "+" else nodes.sub(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, off = self.peek()
            if kind == "sym" and val in "*/":
                self.advance()
                rhs = self.unary()
                if val == "*":
                    e = nodes.mul(e, rhs)
                else:
                    try:
                        e = nodes.div(e, rhs)
                    except nodes.ExprDomainError as exc:
                        raise ExprSyntaxError(str(exc), off, self.text) from None
            else:
                return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "sym" and val == "-":
            self.advance()
            return nodes.neg(self.unary())
        if kind == "sym" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, off = self.peek()
        if kind == "sym" and val == "^":
            self.advance()
            exponent = self.unary()
            try:
                return nodes.power(base, exponent)
            except nodes.ExprDomainError as exc:
                raise ExprSyntaxError(str(exc), off, self.text) from None
        return base

    def atom(self) -> Expr:
        kind, val, off = self.advance()
        if kind == "num":
            return nodes.const(float(val))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "sym" and nxt[1] == "(":
                if val not in nodes.FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {val!r}", off, self.text)
                self.advance()
                arg = self.expr()
                self.expect(")")
                try:
                    return nodes.call(val, arg)
                except nodes.ExprDomainError as exc:
                    raise ExprSyntaxError(str(exc), off, self.text) from None
            m = _COORD.match(val)
            if m:
                return nodes.var(int(m.group(1)))
            if val == "pi":
                return nodes.const(math.pi)
            if re.fullmatch(r"x\d+", val):
                raise UnknownIdentifierError(f"coordinate {val!r} out of range x0..x3", off, self.text)
            if val in nodes.FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} needs an argument", nxt[2], self.text)
            if self.params is not None and val not in self.params:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", off, self.text)
            return nodes.param(val)
        if kind == "sym" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "eof" else repr(val)
        raise ExprSyntaxError(f"expected number, identifier or '(', found {found}", off, self.text)


def parse(text: str, params: Iterable[str] | None = None) -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    ``params`` restricts which bare identifiers are accepted as named
    parameters; with ``None`` any identifier other than a coordinate or
    function name becomes a parameter.
    """
    if isinstance(text, (int, float)):
        return nodes.const(text)
    return _Parser(text, params).parse()
