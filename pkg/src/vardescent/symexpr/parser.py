"""Recursive-descent parser for the expression grammar.

Precedence, tightest first: ``^`` (right associative), unary minus,
``* /``, ``+ -``.  Jet coordinates are written ``jet(u,[t,x])`` or, when
every base coordinate of the chart is a single letter, ``u_tx``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Protocol

from ..errors import JetOrderError, ParseError, UndeclaredIdentifier
from .core import DEFAULT_JET_ORDER, FUNCTIONS, PI, Const, Coord, Jet, JetExpr, func

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?)|(?P<id>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()\[\],]))")


@dataclass(frozen=True)
class Scope:
    """Names visible to the parser in one chart."""

    coords: tuple[str, ...]
    fields: tuple[str, ...] = ("u",)
    constants: Mapping[str, Const] = field(default_factory=lambda: {"pi": PI})
    jet_order: int = DEFAULT_JET_ORDER

    def shorthand_ok(self) -> bool:
        return all(len(c) == 1 for c in self.coords)


class FormBuilder(Protocol):
    def generator(self, kind: str, args: list, pos: int) -> Any: ...

    def wedge(self, a: Any, b: Any) -> Any: ...

    def is_form(self, v: Any) -> bool: ...


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad, text)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "num" and "." in value:
            raise ParseError("floating-point literals are not allowed; use p/q", start, text)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, scope: Scope, builder: FormBuilder | None):
        self.text = text
        self.scope = scope
        self.builder = builder
        self.tokens = _tokenize(text)
        self.i = 0

    # token helpers
    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.next()
        if tok[1] != value or tok[0] == "end":
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2], self.text)
        return tok

    def is_form(self, v) -> bool:
        return self.builder is not None and self.builder.is_form(v)

    # grammar
    def parse(self):
        v = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], self.text)
        return v

    def expr(self):
        v = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            rhs = self.term()
            v = v + rhs if op == "+" else v - rhs
        return v

    def term(self):
        v = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.next()
            rhs = self.unary()
            if op == "*":
                if self.is_form(v) and self.is_form(rhs):
                    v = self.builder.wedge(v, rhs)
                elif self.is_form(v):
                    v = rhs * v
                else:
                    v = v * rhs
            else:
                if self.is_form(rhs):
                    raise ParseError("cannot divide by a form", pos, self.text)
                if not rhs:
                    raise ParseError("division by zero", pos, self.text)
                v = v * (JetExpr(1) / rhs)
        return v

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.next()
            return -self.unary()
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            pos = self.next()[2]
            rhs = self.unary()
            if self.is_form(base) or self.is_form(rhs):
                return self.builder.wedge(base, rhs)
            if not rhs.is_rational() or rhs.as_rational().denominator != 1:
                raise ParseError("exponent must be an integer literal", pos, self.text)
            return base ** int(rhs.as_rational())
        return base

    def primary(self):
        kind, value, pos = self.next()
        if kind == "num":
            return JetExpr(Fraction(int(value)))
        if kind == "op" and value == "(":
            v = self.expr()
            self.expect(")")
            return v
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(value, pos)
            return self.name(value, pos)
        raise ParseError(f"unexpected {value or 'end of input'!r}", pos, self.text)

    def index_list(self) -> list[str]:
        self.expect("[")
        out: list[str] = []
        if self.peek()[1] == "]":
            self.next()
            return out
        while True:
            kind, value, pos = self.next()
            if kind == "id" and value in self.scope.coords:
                out.append(value)
            elif kind == "num" and int(value) < len(self.scope.coords):
                out.append(self.scope.coords[int(value)])
            else:
                raise UndeclaredIdentifier(f"unknown base coordinate {value!r} in multi-index", pos, self.text)
            tok = self.next()
            if tok[1] == "]":
                return out
            if tok[1] != ",":
                raise ParseError("expected ',' or ']' in multi-index", tok[2], self.text)

    def jet_args(self, pos: int) -> tuple[str, list[str]]:
        kind, fname, fpos = self.next()
        if kind != "id" or fname not in self.scope.fields:
            raise UndeclaredIdentifier(f"undeclared field {fname!r}", fpos, self.text)
        self.expect(",")
        idx = self.index_list()
        self.expect(")")
        self._check_order(len(idx), pos)
        return fname, idx

    def _check_order(self, order: int, pos: int):
        if order > self.scope.jet_order:
            raise JetOrderError(order, self.scope.jet_order, f"expression at position {pos}")

    def call(self, name: str, pos: int):
        self.expect("(")
        if name == "jet":
            fname, idx = self.jet_args(pos)
            return JetExpr.atom(Jet(fname, idx))
        if self.builder is not None and name in ("theta", "du"):
            fname, idx = self.jet_args(pos)
            return self.builder.generator(name, [fname, idx], pos)
        if self.builder is not None and name == "dx":
            kind, cname, cpos = self.next()
            if cname not in self.scope.coords:
                raise UndeclaredIdentifier(f"unknown base coordinate {cname!r}", cpos, self.text)
            self.expect(")")
            return self.builder.generator("dx", [cname], pos)
        if name in FUNCTIONS:
            arg = self.expr()
            self.expect(")")
            if self.is_form(arg):
                raise ParseError(f"cannot apply {name} to a form", pos, self.text)
            return func(name, arg)
        raise UndeclaredIdentifier(f"unknown function {name!r}", pos, self.text)

    def name(self, ident: str, pos: int):
        s = self.scope
        if ident in s.coords:
            return JetExpr.atom(Coord(ident))
        if ident in s.fields:
            return JetExpr.atom(Jet(ident))
        if ident in s.constants:
            return JetExpr.atom(s.constants[ident])
        if "_" in ident and s.shorthand_ok():
            fname, _, suffix = ident.rpartition("_")
            if fname in s.fields and suffix and all(ch in s.coords for ch in suffix):
                self._check_order(len(suffix), pos)
                return JetExpr.atom(Jet(fname, list(suffix)))
        raise UndeclaredIdentifier(f"undeclared identifier {ident!r}", pos, self.text)


def parse_expr(text: str, scope: Scope) -> JetExpr:
    """Parse ``text`` into a normal-form expression in the chart ``scope``."""
    v = _Parser(text, scope, None).parse()
    return v


def parse_with_builder(text: str, scope: Scope, builder: FormBuilder):
    return _Parser(text, scope, builder).parse()
