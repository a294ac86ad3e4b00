"""Text rendering that the parser reads back to an equal-valued tree."""

from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Call, Const, Div, Expr, Mul, Named, Neg, Pow, Var

# binding strength of the top operator of a rendered node
_ATOM, _POW, _UNARY, _MUL, _ADD = 5, 4, 3, 2, 1


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _exp_text(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    if q.denominator == 1:
        return f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def _wrap(text_prec: tuple[str, int], need: int) -> str:
    text, prec = text_prec
    return text if prec >= need else f"({text})"


def _render(e: Expr, memo: dict) -> tuple[str, int]:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    out = _render_uncached(e, memo)
    memo[id(e)] = out
    return out


def _render_uncached(e: Expr, memo) -> tuple[str, int]:
    if isinstance(e, Const):
        s = _num(e.value)
        return (s, _ATOM) if e.value >= 0 else (s, _UNARY)
    if isinstance(e, Named):
        return e.name, _ATOM
    if isinstance(e, Var):
        return e.ref.name, _ATOM
    if isinstance(e, Call):
        return f"{e.fn}({_render(e.arg, memo)[0]})", _ATOM
    if isinstance(e, Neg):
        return "-" + _wrap(_render(e.arg, memo), _UNARY), _UNARY
    if isinstance(e, Div):
        num = _wrap(_render(e.num, memo), _MUL)
        den = _wrap(_render(e.den, memo), _UNARY)
        return f"{num}/{den}", _MUL
    if isinstance(e, Pow):
        if e.exp < 0:
            den = _render(Pow(e.base, -e.exp) if e.exp != -1 else e.base, memo)
            return "1/" + _wrap(den, _UNARY), _MUL
        base = _wrap(_render(e.base, memo), _ATOM)
        return f"{base}^{_exp_text(e.exp)}", _POW
    if isinstance(e, Mul):
        return _render_mul(e, memo)
    if isinstance(e, Add):
        parts = []
        for k, t in enumerate(e.terms):
            neg, body = _negated(t)
            if neg is None:
                text = _wrap(_render(t, memo), _ADD + 1) if k else _render(t, memo)[0]
                parts.append(("+", text))
            else:
                parts.append(("-", _wrap(_render(neg, memo), _MUL)))
        out = parts[0][1] if parts[0][0] == "+" else "-" + parts[0][1]
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out, _ADD
    raise TypeError(type(e))


def _negated(t: Expr):
    """For a term with a negative leading coefficient return its absolute value."""
    if isinstance(t, Const) and t.value < 0:
        return Const(-t.value), True
    if isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0:
        c = -t.factors[0].value
        rest = t.factors[1:]
        if c == 1.0:
            return (rest[0] if len(rest) == 1 else Mul(rest)), True
        return Mul((Const(c),) + rest), True
    return None, False


def _render_mul(e: Mul, memo) -> tuple[str, int]:
    coeff = 1.0
    num, den = [], []
    for f in e.factors:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Pow) and f.exp < 0:
            den.append(f.base if f.exp == -1 else Pow(f.base, -f.exp))
        else:
            num.append(f)
    texts = [_wrap(_render(f, memo), _UNARY) for f in num]
    sign = ""
    if coeff == -1.0:
        sign = "-"
    elif coeff != 1.0 or not texts:
        if coeff < 0:
            sign = "-"
        if abs(coeff) != 1.0 or not texts:
            texts.insert(0, _num(abs(coeff)))
    out = "*".join(texts)
    if den:
        dtexts = [_wrap(_render(f, memo), _UNARY) for f in den]
        out += "/" + (dtexts[0] if len(dtexts) == 1 else "(" + "*".join(dtexts) + ")")
    if sign:
        return "-" + out, _MUL
    return out, _MUL


def to_text(e: Expr) -> str:
    return _render(e, {})[0]
