"""Minimal computer-algebra kernel over jet coordinates (t^a, x^i, p_i^a)."""

from .calculus import diff, simplify, substitute
from .evaluate import DomainError, Evaluator, Point, batch_env, evaluate, evaluate_many
from .nodes import (
    MOMENTUM,
    ONE,
    SPATIAL,
    TEMPORAL,
    ZERO,
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
    add,
    as_expr,
    call,
    const,
    cos,
    exp,
    ln,
    mul,
    power,
    sin,
    sqrt,
    var,
)
from .parser import IndexRangeError, ParseError, parse_expr
from .printer import to_text

__all__ = [name for name in dir() if not name.startswith("_")]
