"""Numeric evaluation of expression trees in double precision.

Evaluation is vectorized: every variable may be bound to a scalar or to a
1-d array of sample values, and the result has the broadcast shape.
Shared subtrees are evaluated once per :class:`Evaluator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .nodes import Add, Call, Const, Div, Expr, ExprError, Mul, Named, Neg, Pow, Var, VarRef


class DomainError(ExprError, ArithmeticError):
    """Raised when a subtree is evaluated outside its domain."""

    def __init__(self, message: str, node: Expr):
        self.node = node
        text = str(node)
        if len(text) > 120:
            text = text[:117] + "..."
        super().__init__(f"{message} in subtree `{text}`")


@dataclass(frozen=True)
class Point:
    """A point of the dual jet space: t (m,), x (n,), p (n, m) with p[i][a] = p_i^a."""

    t: tuple
    x: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "p", tuple(tuple(float(v) for v in row) for row in self.p))
        m = len(self.t)
        if any(len(row) != m for row in self.p) or len(self.p) != len(self.x):
            raise ValueError("point shapes do not match (m, n)")

    @property
    def dims(self) -> tuple[int, int]:
        return len(self.t), len(self.x)

    @classmethod
    def zeros(cls, m: int, n: int) -> "Point":
        return cls((0.0,) * m, (0.0,) * n, ((0.0,) * m,) * n)

    def env(self) -> dict[VarRef, float]:
        m, n = self.dims
        out = {VarRef.t(a + 1): self.t[a] for a in range(m)}
        out.update({VarRef.x(i + 1): self.x[i] for i in range(n)})
        for i in range(n):
            for a in range(m):
                out[VarRef.p(i + 1, a + 1)] = self.p[i][a]
        return out

    def replace(self, ref: VarRef, value: float) -> "Point":
        t, x, p = list(self.t), list(self.x), [list(r) for r in self.p]
        if ref.kind == "t":
            t[ref.a - 1] = value
        elif ref.kind == "x":
            x[ref.i - 1] = value
        else:
            p[ref.i - 1][ref.a - 1] = value
        return Point(t, x, p)

    def as_dict(self) -> dict[str, float]:
        return {ref.name: v for ref, v in self.env().items()}


def batch_env(points: Sequence[Point]) -> dict[VarRef, np.ndarray]:
    """Bind each variable to the array of its values across ``points``."""
    envs = [pt.env() for pt in points]
    return {ref: np.array([e[ref] for e in envs]) for ref in envs[0]}


_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "sinh": np.sinh,
    "cosh": np.cosh,
}


class Evaluator:
    """Evaluate many expressions against one variable binding, sharing work."""

    def __init__(self, env: Mapping[VarRef, object]):
        self.env = env
        self._cache: dict[int, object] = {}
        self._keep: list[Expr] = []  # pins nodes so cached ids stay valid

    def __call__(self, e: Expr):
        hit = self._cache.get(id(e))
        if hit is not None:
            return hit
        v = self._eval(e)
        self._cache[id(e)] = v
        self._keep.append(e)
        return v

    def _eval(self, e: Expr):
        if isinstance(e, (Const, Named)):
            return e.value
        if isinstance(e, Var):
            try:
                return self.env[e.ref]
            except KeyError:
                raise ExprError(f"no value bound for variable {e.ref.name}") from None
        if isinstance(e, Add):
            total = 0.0
            for t in e.terms:
                total = total + self(t)
            return total
        if isinstance(e, Mul):
            prod = 1.0
            for f in e.factors:
                prod = prod * self(f)
            return prod
        if isinstance(e, Neg):
            return -self(e.arg)
        if isinstance(e, Div):
            den = self(e.den)
            if np.any(np.asarray(den) == 0):
                raise DomainError("division by zero", e)
            return self(e.num) / den
        if isinstance(e, Pow):
            return self._pow(e)
        if isinstance(e, Call):
            return self._call(e)
        raise TypeError(type(e))

    def _pow(self, e: Pow):
        b = self(e.base)
        q = e.exp
        barr = np.asarray(b, dtype=float)
        if q < 0 and np.any(barr == 0):
            raise DomainError("division by zero", e)
        if q.denominator == 1:
            k = q.numerator
            if k == 2:
                return b * b
            if k == -1:
                return 1.0 / b
            if k > 0:
                return b**k
            return 1.0 / (b ** (-k))
        if np.any(barr < 0):
            if q.denominator % 2 == 0:
                raise DomainError("even root of a negative number", e)
            mag = np.abs(barr) ** float(q)
            out = np.where(barr < 0, -mag if q.numerator % 2 else mag, mag)
            return out if np.ndim(b) else float(out)
        out = barr ** float(q)
        return out if np.ndim(b) else float(out)

    def _call(self, e: Call):
        a = self(e.arg)
        if e.fn == "ln":
            if np.any(np.asarray(a) <= 0):
                raise DomainError("logarithm of a non-positive number", e)
            return np.log(a)
        if e.fn == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise DomainError("square root of a negative number", e)
            return np.sqrt(a)
        if e.fn == "tan" and np.any(np.abs(np.cos(a)) < 1e-300):
            raise DomainError("tangent at a pole", e)
        with np.errstate(over="raise", invalid="raise"):
            try:
                return _FUNCS[e.fn](a)
            except FloatingPointError:
                raise DomainError(f"overflow in {e.fn}", e) from None


def evaluate(e: Expr, pt: Point | Mapping[VarRef, float]) -> float:
    """Evaluate ``e`` at a single point."""
    env = pt.env() if isinstance(pt, Point) else pt
    return float(Evaluator(env)(e))


def evaluate_constant(e: Expr) -> float:
    return float(Evaluator({})(e))


def evaluate_many(exprs, env: Mapping[VarRef, object], evaluator: Evaluator | None = None) -> np.ndarray:
    """Evaluate an iterable of expressions; returns an array of shape (len, *sample_shape)."""
    ev = evaluator or Evaluator(env)
    vals = [ev(e) for e in exprs]
    shape = ()
    for v in vals:
        if np.ndim(v):
            shape = np.shape(v)
            break
    return np.array([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals])
