"""Immutable expression trees over the coordinates (t^a, x^i, p_i^a).

Two families of constructors live here. The node classes build trees
verbatim (this is what the parser produces). The lower-case helpers
``add``, ``mul``, ``power``, ``call`` build *normalized* trees: constants
folded, sums and products flattened, like terms and like powers merged,
negation and division rewritten as products with -1 and negative powers.
Arithmetic operators on :class:`Expr` go through the normalizing helpers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

TEMPORAL = "t"
SPATIAL = "x"
MOMENTUM = "p"
_KIND_ORDER = {TEMPORAL: 0, SPATIAL: 1, MOMENTUM: 2}

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "sinh", "cosh")


class ExprError(Exception):
    """Base class for expression errors."""


@dataclass(frozen=True)
class VarRef:
    """A jet coordinate. Indices are 1-based; unused indices are 0.

    ``VarRef("p", a=2, i=1)`` is the momentum p_1^2, written ``p1_2``.
    """

    kind: str
    a: int = 0
    i: int = 0

    def __post_init__(self):
        if self.kind == TEMPORAL:
            ok = self.a >= 1 and self.i == 0
        elif self.kind == SPATIAL:
            ok = self.i >= 1 and self.a == 0
        elif self.kind == MOMENTUM:
            ok = self.a >= 1 and self.i >= 1
        else:
            ok = False
        if not ok:
            raise ValueError(f"malformed variable reference {self!r}")

    @classmethod
    def t(cls, a: int) -> "VarRef":
        return cls(TEMPORAL, a=a)

    @classmethod
    def x(cls, i: int) -> "VarRef":
        return cls(SPATIAL, i=i)

    @classmethod
    def p(cls, i: int, a: int) -> "VarRef":
        return cls(MOMENTUM, a=a, i=i)

    @property
    def name(self) -> str:
        if self.kind == TEMPORAL:
            return f"t{self.a}"
        if self.kind == SPATIAL:
            return f"x{self.i}"
        return f"p{self.i}_{self.a}"

    def in_range(self, m: int, n: int) -> bool:
        return self.a <= m and self.i <= n

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.i, self.a)

    def __str__(self):
        return self.name


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_hash", "_key", "_free")

    def _init_cache(self, hash_parts):
        self._hash = hash(hash_parts)
        self._key = None
        self._free = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        return not self.__eq__(other)

    def _fields(self):
        raise NotImplementedError

    def children(self) -> tuple["Expr", ...]:
        return ()

    @property
    def key(self):
        """Deterministic total-order key used to canonicalize sums and products."""
        if self._key is None:
            self._key = self._make_key()
        return self._key

    @property
    def free_vars(self) -> frozenset:
        if self._free is None:
            s = frozenset()
            for c in self.children():
                s = s | c.free_vars
            self._free = s
        return self._free

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0

    def is_const(self) -> bool:
        return isinstance(self, Const)

    # arithmetic goes through the normalizing constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __neg__(self):
        return mul(MINUS_ONE, self)

    def __pow__(self, q):
        return power(self, q)

    def __str__(self):
        from .printer import to_text

        return to_text(self)

    def __repr__(self):
        return f"Expr({self})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)
        if not math.isfinite(self.value):
            raise ExprError(f"non-finite constant {value!r}")
        if self.value == 0.0:
            self.value = 0.0  # drop the sign of -0.0
        self._init_cache(("c", self.value))

    def _fields(self):
        return self.value

    def _make_key(self):
        return (0, self.value)


class Named(Expr):
    """A named constant such as ``pi``, ``e`` or a user constant like ``mass``."""

    __slots__ = ("name", "value")

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = float(value)
        self._init_cache(("n", name, self.value))

    def _fields(self):
        return (self.name, self.value)

    def _make_key(self):
        return (1, self.name)


class Var(Expr):
    __slots__ = ("ref",)

    def __init__(self, ref: VarRef):
        self.ref = ref
        self._init_cache(("v", ref))
        self._free = frozenset((ref,))

    def _fields(self):
        return self.ref

    def _make_key(self):
        return (2,) + self.ref.sort_key()


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in FUNCTIONS:
            raise ExprError(f"unknown function {fn!r}")
        self.fn = fn
        self.arg = arg
        self._init_cache(("f", fn, arg._hash))

    def _fields(self):
        return (self.fn, self.arg)

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (3, self.fn, self.arg.key)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        self.base = base
        self.exp = Fraction(exp)
        self._init_cache(("^", base._hash, self.exp))

    def _fields(self):
        return (self.base, self.exp)

    def children(self):
        return (self.base,)

    def _make_key(self):
        return (4, self.base.key, self.exp)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        self.terms = tuple(terms)
        if not self.terms:
            raise ExprError("empty sum")
        self._init_cache(("+",) + tuple(t._hash for t in self.terms))

    def _fields(self):
        return self.terms

    def children(self):
        return self.terms

    def _make_key(self):
        return (5, tuple(t.key for t in self.terms))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        self.factors = tuple(factors)
        if not self.factors:
            raise ExprError("empty product")
        self._init_cache(("*",) + tuple(f._hash for f in self.factors))

    def _fields(self):
        return self.factors

    def children(self):
        return self.factors

    def _make_key(self):
        return (6, tuple(f.key for f in self.factors))


class Div(Expr):
    """Raw quotient node; only the parser builds these."""

    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        self.num = num
        self.den = den
        self._init_cache(("/", num._hash, den._hash))

    def _fields(self):
        return (self.num, self.den)

    def children(self):
        return (self.num, self.den)

    def _make_key(self):
        return (7, self.num.key, self.den.key)


class Neg(Expr):
    """Raw negation node; only the parser builds these."""

    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        self._init_cache(("neg", arg._hash))

    def _fields(self):
        return self.arg

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (8, self.arg.key)


ZERO = Const(0.0)
ONE = Const(1.0)
MINUS_ONE = Const(-1.0)
PI = Named("pi", math.pi)
E = Named("e", math.e)


def const(v) -> Const:
    return Const(v)


def var(ref: VarRef) -> Var:
    return Var(ref)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, Fraction)):
        return Const(float(v))
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


# ---------------------------------------------------------------------------
# normalizing constructors


def _split_coeff(e: Expr) -> tuple[float, Expr | None]:
    """Split ``c*rest`` into (c, rest); rest is None for a pure constant."""
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return 1.0, e


def _scaled(c: float, rest: Expr) -> Expr:
    if c == 1.0:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def add(*args) -> Expr:
    total = 0.0
    coeffs: dict[Expr, float] = {}

    def absorb(e):
        nonlocal total
        if isinstance(e, Add):
            for t in e.terms:
                absorb(t)
            return
        c, rest = _split_coeff(e)
        if rest is None:
            total += c
        else:
            coeffs[rest] = coeffs.get(rest, 0.0) + c

    for a in args:
        absorb(as_expr(a))
    terms = [_scaled(c, r) for r, c in coeffs.items() if c != 0.0]
    terms.sort(key=lambda t: _split_coeff(t)[1].key)
    if total != 0.0:
        terms.append(Const(total))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(terms)


def mul(*args) -> Expr:
    coeff = 1.0
    exps: dict[Expr, Fraction] = {}

    def absorb(e):
        nonlocal coeff
        if isinstance(e, Const):
            coeff *= e.value
        elif isinstance(e, Mul):
            for f in e.factors:
                absorb(f)
        elif isinstance(e, Pow):
            exps[e.base] = exps.get(e.base, Fraction(0)) + e.exp
        else:
            exps[e] = exps.get(e, Fraction(0)) + 1

    for a in args:
        absorb(as_expr(a))
    if coeff == 0.0:
        return ZERO
    # exp(u)^k * exp(v)^l -> exp(k*u + l*v) for integer powers
    exp_bases = [b for b, q in exps.items() if isinstance(b, Call) and b.fn == "exp" and q.denominator == 1 and q != 0]
    if len(exp_bases) > 1:
        arg = add(*(mul(Const(float(exps.pop(b))), b.arg) for b in exp_bases))
        merged = call("exp", arg)
        if isinstance(merged, Const):
            coeff *= merged.value
        else:
            exps[merged] = exps.get(merged, Fraction(0)) + 1
    factors = []
    for base, q in exps.items():
        if q == 0:
            continue
        f = power(base, q)
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Mul):
            # power of a non-product never yields a product; guard anyway
            for g in f.factors:
                if isinstance(g, Const):
                    coeff *= g.value
                else:
                    factors.append(g)
        else:
            factors.append(f)
    if coeff == 0.0:
        return ZERO
    factors.sort(key=lambda f: f.key)
    if not factors:
        return Const(coeff)
    if len(factors) == 1 and isinstance(factors[0], Add) and coeff != 1.0:
        return add(*(mul(Const(coeff), t) for t in factors[0].terms))
    if coeff != 1.0:
        factors.insert(0, Const(coeff))
    if len(factors) == 1:
        return factors[0]
    return Mul(factors)


def _const_power(b: float, q: Fraction):
    """Fold b**q when it is real and finite, else return None."""
    if b == 0.0 and q < 0:
        return None
    if b < 0 and q.denominator % 2 == 0:
        return None
    if b < 0:
        v = abs(b) ** float(q)
        return -v if q.numerator % 2 else v
    v = b ** float(q)
    return v if math.isfinite(v) else None


def power(base, q) -> Expr:
    base = as_expr(base)
    q = Fraction(q)
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, Const):
        v = _const_power(base.value, q)
        return Const(v) if v is not None else Pow(base, q)
    if isinstance(base, Pow) and q.denominator == 1:
        return power(base.base, base.exp * q)
    if isinstance(base, Mul) and q.denominator == 1:
        return mul(*(power(f, q) for f in base.factors))
    if isinstance(base, Call) and base.fn == "exp" and q.denominator == 1:
        return call("exp", mul(Const(float(q)), base.arg))
    return Pow(base, q)


_FOLD = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "sinh": math.sinh,
    "cosh": math.cosh,
}


def call(fn: str, arg) -> Expr:
    arg = as_expr(arg)
    if fn == "sqrt":
        return power(arg, Fraction(1, 2))
    if fn == "ln":
        if isinstance(arg, Call) and arg.fn == "exp":
            return arg.arg
        if isinstance(arg, Const) and arg.value > 0:
            return Const(math.log(arg.value))
        if isinstance(arg, Named) and arg.name == "e":
            return ONE
        return Call("ln", arg)
    if fn == "exp" and isinstance(arg, Call) and arg.fn == "ln":
        return arg.arg
    if isinstance(arg, Const) and fn in _FOLD:
        try:
            v = _FOLD[fn](arg.value)
        except OverflowError:
            return Call(fn, arg)
        if math.isfinite(v):
            return Const(v)
    return Call(fn, arg)


def sin(e):
    return call("sin", e)


def cos(e):
    return call("cos", e)


def exp(e):
    return call("exp", e)


def ln(e):
    return call("ln", e)


def sqrt(e):
    return call("sqrt", e)
