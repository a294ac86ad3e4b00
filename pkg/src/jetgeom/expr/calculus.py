"""Exact partial differentiation and normalization of expression trees."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .nodes import (
    ONE,
    ZERO,
    Add,
    Call,
    Const,
    Div,
    Expr,
    Mul,
    Named,
    Neg,
    Pow,
    Var,
    VarRef,
    add,
    call,
    mul,
    power,
)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the normalizing constructors."""
    return _simplify(e)


@lru_cache(maxsize=1 << 16)
def _simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Named, Var)):
        return e
    if isinstance(e, Add):
        return add(*(_simplify(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(_simplify(f) for f in e.factors))
    if isinstance(e, Neg):
        return mul(Const(-1.0), _simplify(e.arg))
    if isinstance(e, Div):
        return mul(_simplify(e.num), power(_simplify(e.den), -1))
    if isinstance(e, Pow):
        return power(_simplify(e.base), e.exp)
    if isinstance(e, Call):
        return call(e.fn, _simplify(e.arg))
    raise TypeError(type(e))


def diff(e: Expr, v: VarRef) -> Expr:
    """Exact partial derivative of ``e`` with respect to the coordinate ``v``."""
    if v not in e.free_vars:
        return ZERO
    return _diff(e, v)


@lru_cache(maxsize=1 << 18)
def _diff(e: Expr, v: VarRef) -> Expr:
    if v not in e.free_vars:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        fs = e.factors
        for k, f in enumerate(fs):
            if v in f.free_vars:
                terms.append(mul(*fs[:k], _diff(f, v), *fs[k + 1 :]))
        return add(*terms)
    if isinstance(e, Neg):
        return mul(Const(-1.0), _diff(e.arg, v))
    if isinstance(e, Div):
        num, den = e.num, e.den
        return add(
            mul(_diff(num, v), power(den, -1)),
            mul(Const(-1.0), num, _diff(den, v), power(den, -2)),
        )
    if isinstance(e, Pow):
        q = e.exp
        return mul(Const(float(q)), power(e.base, q - 1), _diff(e.base, v))
    if isinstance(e, Call):
        return mul(_outer_derivative(e), _diff(e.arg, v))
    raise TypeError(type(e))


def _outer_derivative(e: Call) -> Expr:
    u = e.arg
    fn = e.fn
    if fn == "sin":
        return call("cos", u)
    if fn == "cos":
        return mul(Const(-1.0), call("sin", u))
    if fn == "tan":
        return power(call("cos", u), -2)
    if fn == "exp":
        return call("exp", u)
    if fn == "ln":
        return power(u, -1)
    if fn == "sqrt":
        return mul(Const(0.5), power(u, Fraction(-1, 2)))
    if fn == "sinh":
        return call("cosh", u)
    if fn == "cosh":
        return call("sinh", u)
    raise ValueError(fn)


def substitute(e: Expr, values: dict) -> Expr:
    """Replace variables by expressions (or numbers) and renormalize."""
    from .nodes import as_expr

    repl = {k: as_expr(val) for k, val in values.items()}
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if not (node.free_vars & repl.keys()):
            out = simplify(node)
        elif isinstance(node, Var):
            out = repl[node.ref]
        elif isinstance(node, Add):
            out = add(*(go(t) for t in node.terms))
        elif isinstance(node, Mul):
            out = mul(*(go(f) for f in node.factors))
        elif isinstance(node, Neg):
            out = mul(Const(-1.0), go(node.arg))
        elif isinstance(node, Div):
            out = mul(go(node.num), power(go(node.den), -1))
        elif isinstance(node, Pow):
            out = power(go(node.base), node.exp)
        elif isinstance(node, Call):
            out = call(node.fn, go(node.arg))
        else:
            raise TypeError(type(node))
        memo[id(node)] = out
        return out

    return go(e)
