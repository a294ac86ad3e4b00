"""Dense d-tensors: arrays of expressions with typed temporal/spatial slots."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .expr import ZERO, Evaluator, Expr, as_expr, simplify, to_text


@dataclass(frozen=True)
class Slot:
    kind: str  # "t" temporal, "s" spatial
    up: bool

    def __str__(self):
        return f"{self.kind}{'^' if self.up else '_'}"


T_UP = Slot("t", True)
T_DN = Slot("t", False)
S_UP = Slot("s", True)
S_DN = Slot("s", False)


class DTensor:
    """A named dense array of expressions over a typed index signature.

    Components are addressed with 0-based index tuples; text output uses
    1-based indices.
    """

    def __init__(self, name: str, signature: Sequence[Slot], comps: np.ndarray, dims: tuple[int, int]):
        self.name = name
        self.signature = tuple(signature)
        self.dims = dims
        shape = tuple(self._extent(s) for s in self.signature)
        comps = np.asarray(comps, dtype=object).reshape(shape)
        comps.flags.writeable = False
        self.comps = comps

    def _extent(self, slot: Slot) -> int:
        return self.dims[0] if slot.kind == "t" else self.dims[1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.comps.shape

    @property
    def rank(self) -> int:
        return len(self.signature)

    @classmethod
    def build(cls, name: str, signature, dims, fn: Callable[..., object]) -> "DTensor":
        signature = tuple(signature)
        shape = tuple(dims[0] if s.kind == "t" else dims[1] for s in signature)
        comps = np.empty(shape, dtype=object)
        for idx in itertools.product(*(range(k) for k in shape)):
            comps[idx] = as_expr(fn(*idx))
        if not shape:
            comps = np.array(as_expr(fn()), dtype=object)
        return cls(name, signature, comps, dims)

    @classmethod
    def zeros(cls, name: str, signature, dims) -> "DTensor":
        return cls.build(name, signature, dims, lambda *idx: ZERO)

    def __getitem__(self, idx) -> Expr:
        return self.comps[idx]

    def indices(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(k) for k in self.shape))

    def entries(self) -> Iterator[tuple[tuple[int, ...], Expr]]:
        """Components in lexicographic index order."""
        for idx in self.indices():
            yield idx, self.comps[idx]

    def map(self, fn: Callable[[Expr], Expr], name: str | None = None) -> "DTensor":
        return DTensor.build(name or self.name, self.signature, self.dims, lambda *i: fn(self.comps[i]))

    def simplified(self) -> "DTensor":
        return self.map(simplify)

    def renamed(self, name: str) -> "DTensor":
        return DTensor(name, self.signature, self.comps, self.dims)

    def __sub__(self, other: "DTensor") -> "DTensor":
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return DTensor.build(
            f"{self.name}-{other.name}", self.signature, self.dims, lambda *i: self.comps[i] - other.comps[i]
        )

    def is_symbolically_zero(self) -> bool:
        return all(e.is_zero() for e in self.comps.flat)

    def evaluate(self, env, evaluator: Evaluator | None = None) -> np.ndarray:
        """Numeric components, shape ``self.shape + sample_shape``."""
        ev = evaluator or Evaluator(env)
        flat = [ev(e) for e in self.comps.flat]
        sample_shape = ()
        for v in flat:
            if np.ndim(v):
                sample_shape = np.shape(v)
                break
        arr = np.array([np.broadcast_to(np.asarray(v, dtype=float), sample_shape) for v in flat])
        return arr.reshape(self.shape + sample_shape)

    def lines(self) -> list[str]:
        out = []
        for idx, e in self.entries():
            label = ",".join(str(k + 1) for k in idx)
            out.append(f"{self.name}[{label}] = {to_text(e)}")
        return out

    def __repr__(self):
        sig = " ".join(str(s) for s in self.signature)
        return f"DTensor({self.name!r}, [{sig}], shape={self.shape})"
