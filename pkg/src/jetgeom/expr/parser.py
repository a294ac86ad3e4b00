"""Recursive-descent parser for the scalar expression grammar.

Precedence, tightest first: ``^`` (right-associative), unary ``-``,
``*`` and ``/``, binary ``+`` and ``-``. Variables are ``t<a>``, ``x<i>``
and ``p<i>_<a>`` (the momentum p_i^a); ``pi`` and ``e`` are constants.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from .nodes import (
    E,
    FUNCTIONS,
    PI,
    Add,
    Call,
    Const,
    Div,
    Expr,
    ExprError,
    Mul,
    Named,
    Neg,
    Pow,
    Var,
    VarRef,
)


class ParseError(ExprError):
    def __init__(self, message: str, pos: int, src: str = ""):
        self.pos = pos
        self.src = src
        super().__init__(f"{message} at position {pos}")


class IndexRangeError(ParseError):
    """A variable index exceeds the active dimensions."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)
_VAR = re.compile(r"(?:t(?P<t>[0-9]+)|x(?P<x>[0-9]+)|p(?P<pi>[0-9]+)_(?P<pa>[0-9]+))\Z")


def _tokenize(src: str):
    pos = 0
    out = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[start]!r}", start, src)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str, dims, constants: Mapping[str, float]):
        self.src = src
        self.toks = _tokenize(src)
        self.k = 0
        self.m, self.n = dims
        self.constants = constants

    def peek(self):
        return self.toks[self.k]

    def next(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.next()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos, self.src)

    def error(self, msg, pos):
        return ParseError(msg, pos, self.src)

    def parse(self) -> Expr:
        e = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            raise self.error(f"unexpected {text!r}", pos)
        return e

    def sum(self) -> Expr:
        left = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            right = self.product()
            if op == "+":
                left = Add(left.terms + (right,)) if isinstance(left, Add) else Add((left, right))
            else:
                neg = Neg(right)
                left = Add(left.terms + (neg,)) if isinstance(left, Add) else Add((left, neg))
        return left

    def product(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()[1]
            right = self.unary()
            if op == "*":
                left = Mul(left.factors + (right,)) if isinstance(left, Mul) else Mul((left, right))
            else:
                left = Div(left, right)
        return left

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.next()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.next()
            start = self.peek()[2]
            expo = self.exponent()
            return Pow(base, self.rational(expo, start))
        return base

    def exponent(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.next()
            return Neg(self.exponent())
        if kind == "op" and text == "+":
            self.next()
            return self.exponent()
        return self.power()

    def rational(self, e: Expr, pos: int) -> Fraction:
        from .evaluate import evaluate_constant

        if e.free_vars:
            raise self.error("exponent must be a constant (use exp/ln for general powers)", pos)
        try:
            v = evaluate_constant(e)
        except ExprError as err:
            raise self.error(f"bad exponent: {err}", pos) from None
        q = Fraction(v).limit_denominator(1000)
        if abs(float(q) - v) > 1e-12:
            raise self.error("exponent must be an integer or rational constant", pos)
        return q

    def atom(self) -> Expr:
        kind, text, pos = self.next()
        if kind == "num":
            return Const(float(text))
        if kind == "op" and text == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Call(text, arg)
            if text == "pi":
                return PI
            if text == "e":
                return E
            if text in self.constants:
                return Named(text, self.constants[text])
            return self.variable(text, pos)
        if kind == "end":
            raise self.error("unexpected end of input", pos)
        raise self.error(f"unexpected {text!r}", pos)

    def variable(self, text: str, pos: int) -> Var:
        mv = _VAR.match(text)
        if mv is None:
            raise self.error(f"unknown identifier {text!r}", pos)
        try:
            if mv.group("t") is not None:
                ref = VarRef.t(int(mv.group("t")))
            elif mv.group("x") is not None:
                ref = VarRef.x(int(mv.group("x")))
            else:
                ref = VarRef.p(int(mv.group("pi")), int(mv.group("pa")))
        except ValueError:
            ref = None
        if ref is None or not ref.in_range(self.m, self.n):
            raise IndexRangeError(
                f"variable {text!r} out of range for (m, n) = ({self.m}, {self.n})", pos, self.src
            )
        return Var(ref)


def parse_expr(src: str, dims: tuple[int, int], constants: Mapping[str, float] | None = None) -> Expr:
    """Parse ``src`` into a raw expression tree for a space of dimensions (m, n)."""
    if not isinstance(src, str):
        src = repr(src) if isinstance(src, float) else str(src)
    return _Parser(src, dims, constants or {}).parse()
