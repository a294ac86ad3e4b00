"""Loading and validation of multi-time Hamilton space definitions.

A space file is YAML (JSON also parses) with the fields::

    name: sphere2            # optional label
    dims: {m: 2, n: 2}
    h: [["1", "0"], ["0", "1"]]          # m x m, temporal variables only
    g_inv: [["1", "0"], ["0", "1/sin(x1)^2"]]   # n x n contravariant g^ij
    U: [["x2", "0"], ["0", "0"]]         # optional, row i, column a
    F: "0"                               # optional
    H_raw: "..."                         # optional, m = 1 only
    domain: {x1: [0.2, 1.2]}             # optional sampling box
    constants: {mass: 1.0}               # optional named constants
    bianchi_expected: true               # optional
    corrupt: [{object: gamma, index: [1, 2, 2], add: "0.1", detected_by: [metricity]}]

For m >= 2 the structured form (h, g_inv, U, F) is the only admissible
input. For m = 1 a raw Hamiltonian may be given instead of g_inv, in which
case g^ij = h^11 * (1/2) d^2H / dp_i^1 dp_j^1.

``corrupt`` entries perturb one component of a derived object after it is
built (negative controls); ``detected_by`` names the suites expected to fail.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .expr import (
    ONE,
    ZERO,
    DomainError,
    Evaluator,
    Expr,
    ExprError,
    ParseError,
    Var,
    VarRef,
    add,
    diff,
    mul,
    parse_expr,
    power,
    simplify,
    to_text,
)

DEFAULT_BOX = (0.2, 1.2)
DEFAULT_MOMENTUM_BOX = (-1.0, 1.0)
SINGULAR_DET = 1e-12


class SpaceError(Exception):
    """Validation failure; ``code`` is a stable machine-readable identifier."""

    def __init__(self, code: str, message: str, where: str | None = None):
        self.code = code
        self.where = where
        super().__init__(f"{code}: {message}" + (f" (in {where})" if where else ""))

    def as_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "field": self.where}


def all_vars(m: int, n: int) -> list[VarRef]:
    out = [VarRef.t(a) for a in range(1, m + 1)]
    out += [VarRef.x(i) for i in range(1, n + 1)]
    out += [VarRef.p(i, a) for i in range(1, n + 1) for a in range(1, m + 1)]
    return out


def _freeze(mat) -> np.ndarray:
    arr = np.array(mat, dtype=object)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class HamiltonSpace:
    """A validated metrical multi-time Hamilton space in one fixed chart.

    Matrices are numpy object arrays of normalized expressions, 0-based.
    ``U[i, a]`` holds U^(i)_(a).
    """

    name: str
    m: int
    n: int
    h: np.ndarray
    h_inv: np.ndarray
    g_inv: np.ndarray
    g: np.ndarray
    U: np.ndarray
    F: Expr
    H_raw: Expr | None
    domain: dict
    constants: dict = field(default_factory=dict)
    bianchi_expected: bool = False
    corrupt: tuple = ()

    @property
    def dims(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def variables(self) -> list[VarRef]:
        return all_vars(self.m, self.n)

    @property
    def hamiltonian(self) -> Expr:
        """H itself: the raw form when given, else h g p p + U p + F."""
        if self.H_raw is not None:
            return self.H_raw
        return structured_hamiltonian(self.h, self.g_inv, self.U, self.F, self.m, self.n)

    def metric_depends_on_momenta(self) -> bool:
        return any(ref.kind == "p" for e in self.g_inv.flat for ref in e.free_vars)

    def sample_envs(self, count: int, seed: int) -> dict:
        return box_sample(self.domain, count, seed)


def structured_hamiltonian(h, g_inv, U, F, m, n) -> Expr:
    terms = []
    for a, b in itertools.product(range(m), repeat=2):
        for i, j in itertools.product(range(n), repeat=2):
            terms.append(mul(h[a, b], g_inv[i, j], Var(VarRef.p(i + 1, a + 1)), Var(VarRef.p(j + 1, b + 1))))
    for i in range(n):
        for a in range(m):
            terms.append(mul(U[i, a], Var(VarRef.p(i + 1, a + 1))))
    terms.append(F)
    return add(*terms)


def box_sample(domain: Mapping[VarRef, tuple], count: int, seed: int) -> dict:
    """Seeded uniform samples from the domain box, one array per variable."""
    rng = np.random.default_rng(seed)
    refs = sorted(domain, key=lambda r: r.sort_key())
    lo = np.array([domain[r][0] for r in refs])
    hi = np.array([domain[r][1] for r in refs])
    u = rng.random((count, len(refs)))
    vals = lo + u * (hi - lo)
    return {r: vals[:, k].copy() for k, r in enumerate(refs)}


# ---------------------------------------------------------------------------
# symbolic linear algebra


def determinant(mat) -> Expr:
    """Laplace expansion along the first row, skipping zero entries."""
    mat = np.asarray(mat, dtype=object)
    k = mat.shape[0]
    if k == 1:
        return mat[0, 0]
    if k == 2:
        return add(mul(mat[0, 0], mat[1, 1]), mul(-1, mat[0, 1], mat[1, 0]))
    terms = []
    for col in range(k):
        entry = mat[0, col]
        if entry.is_zero():
            continue
        minor = np.delete(np.delete(mat, 0, axis=0), col, axis=1)
        sign = -1 if col % 2 else 1
        terms.append(mul(sign, entry, determinant(minor)))
    return add(*terms)


def invert_metric(mat, envs: Mapping[VarRef, np.ndarray] | None = None, what: str = "metric") -> np.ndarray:
    """Symbolic inverse by adjugate over determinant (k <= 4).

    When ``envs`` (a batch of sample bindings) is given, the determinant is
    checked there and a near-singular value raises ``singular_metric``.
    """
    mat = np.asarray(mat, dtype=object)
    k = mat.shape[0]
    if mat.shape != (k, k) or not 1 <= k <= 4:
        raise SpaceError("invalid_field", f"{what} must be a square matrix of size 1..4")
    det = simplify(determinant(mat))
    if envs is not None:
        try:
            dv = np.asarray(Evaluator(envs)(det), dtype=float)
        except DomainError as err:
            raise SpaceError("domain_error", f"{what} determinant: {err}") from None
        if det.is_zero() or np.any(np.abs(dv) < SINGULAR_DET):
            raise SpaceError("singular_metric", f"{what} is singular on the sampling domain")
    elif det.is_zero():
        raise SpaceError("singular_metric", f"{what} has identically zero determinant")
    inv_det = power(det, -1)
    out = np.empty((k, k), dtype=object)
    if k == 1:
        out[0, 0] = inv_det
        return _freeze(out)
    for i, j in itertools.product(range(k), repeat=2):
        minor = np.delete(np.delete(mat, j, axis=0), i, axis=1)
        cof = determinant(minor)
        out[i, j] = ZERO if cof.is_zero() else mul(-1 if (i + j) % 2 else 1, cof, inv_det)
    return _freeze(out)


# ---------------------------------------------------------------------------
# loading


def _parse_field(src, dims, constants, where) -> Expr:
    try:
        return simplify(parse_expr(src, dims, constants))
    except ParseError as err:
        raise SpaceError("parse_error", str(err), where) from None
    except ExprError as err:
        raise SpaceError("parse_error", str(err), where) from None


def _parse_matrix(doc, key, rows, cols, dims, constants) -> np.ndarray:
    raw = doc[key]
    if not isinstance(raw, list) or len(raw) != rows or any(
        not isinstance(r, list) or len(r) != cols for r in raw
    ):
        raise SpaceError("invalid_field", f"{key} must be a {rows}x{cols} array", key)
    out = np.empty((rows, cols), dtype=object)
    for r, c in itertools.product(range(rows), range(cols)):
        out[r, c] = _parse_field(raw[r][c], dims, constants, f"{key}[{r + 1}][{c + 1}]")
    return out


def _check_vars(mat, allowed: set, key: str):
    for idx, e in np.ndenumerate(np.asarray(mat, dtype=object)):
        bad = [ref.name for ref in e.free_vars if ref.kind not in allowed]
        if bad:
            loc = "".join(f"[{k + 1}]" for k in idx)
            raise SpaceError(
                "variable_dependence", f"{key} may not depend on {', '.join(sorted(bad))}", f"{key}{loc}"
            )


def _parse_domain(doc, m, n) -> dict:
    refs = all_vars(m, n)
    dom = {r: (DEFAULT_MOMENTUM_BOX if r.kind == "p" else DEFAULT_BOX) for r in refs}
    by_name = {r.name: r for r in refs}
    for name, box in (doc.get("domain") or {}).items():
        if name not in by_name:
            raise SpaceError("invalid_field", f"unknown domain variable {name!r}", "domain")
        try:
            lo, hi = (float(v) for v in box)
        except (TypeError, ValueError):
            raise SpaceError("invalid_field", f"domain of {name} must be [lo, hi]", "domain") from None
        if not hi > lo:
            raise SpaceError("degenerate_domain", f"empty or degenerate interval for {name}", "domain")
        dom[by_name[name]] = (lo, hi)
    return dom


def _max_abs(env, exprs) -> float:
    ev = Evaluator(env)
    return max((float(np.max(np.abs(ev(e)))) for e in exprs), default=0.0)


def load_space(source, name: str | None = None) -> HamiltonSpace:
    """Load and validate a space from a mapping, a file path or a bundled name."""
    doc, label = _read_document(source)
    if not isinstance(doc, Mapping):
        raise SpaceError("invalid_field", "space document must be a mapping")
    return _build(doc, name or doc.get("name") or label)


def _read_document(source):
    if isinstance(source, Mapping):
        return source, "space"
    path = Path(source)
    if not path.exists() and not path.suffix:
        bundled = resources.files("jetgeom") / "spaces" / f"{source}.yaml"
        if bundled.is_file():
            return yaml.safe_load(bundled.read_text(encoding="utf-8")), str(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise SpaceError("io_error", str(err)) from None
    try:
        return yaml.safe_load(text), path.stem
    except yaml.YAMLError as err:
        raise SpaceError("parse_error", f"malformed space document: {err}") from None


def _build(doc: Mapping[str, Any], name: str) -> HamiltonSpace:
    dims = doc.get("dims")
    if not isinstance(dims, Mapping) or "m" not in dims or "n" not in dims:
        raise SpaceError("missing_required_field", "dims.m and dims.n are required", "dims")
    try:
        m, n = int(dims["m"]), int(dims["n"])
    except (TypeError, ValueError):
        raise SpaceError("invalid_field", "dims must be integers", "dims") from None
    if not (1 <= m <= 4 and 1 <= n <= 4):
        raise SpaceError("dimension_out_of_range", f"need 1 <= m, n <= 4, got m={m}, n={n}", "dims")
    constants = {str(k): float(v) for k, v in (doc.get("constants") or {}).items()}
    dd = (m, n)
    has_raw = doc.get("H_raw") is not None
    if has_raw and m >= 2:
        raise SpaceError(
            "raw_hamiltonian_not_allowed",
            "for m >= 2 a Kronecker h-regular Hamiltonian has the structured form; give h, g_inv, U, F",
            "H_raw",
        )
    if "h" not in doc:
        raise SpaceError("missing_required_field", "h is required", "h")
    if "g_inv" not in doc and not has_raw:
        raise SpaceError("missing_required_field", "g_inv is required (or H_raw when m = 1)", "g_inv")
    if has_raw and (doc.get("U") is not None or doc.get("F") is not None):
        raise SpaceError("invalid_field", "U and F are part of H_raw; do not give both", "H_raw")

    domain = _parse_domain(doc, m, n)
    envs = box_sample(domain, 50, seed=0)

    h = _parse_matrix(doc, "h", m, m, dd, constants)
    _check_vars(h, {"t"}, "h")
    U = _parse_matrix(doc, "U", n, m, dd, constants) if doc.get("U") is not None else np.full((n, m), ZERO, object)
    _check_vars(U, {"t", "x"}, "U")
    F = _parse_field(doc["F"], dd, constants, "F") if doc.get("F") is not None else ZERO
    _check_vars(np.array([F], dtype=object), {"t", "x"}, "F")

    _check_symmetric(h, envs, "h")
    h_inv = invert_metric(h, envs, "h")
    _check_identity(h, h_inv, envs, "h")

    H_raw = None
    if has_raw:
        H_raw = _parse_field(doc["H_raw"], dd, constants, "H_raw")
        derived = _metric_from_raw(H_raw, h_inv, n)
        if "g_inv" in doc:
            g_inv = _parse_matrix(doc, "g_inv", n, n, dd, constants)
            diffs = [simplify(g_inv[i, j] - derived[i, j]) for i in range(n) for j in range(n)]
            if _safe_max(envs, diffs, "H_raw") > 1e-10:
                raise SpaceError("kronecker_regularity", "declared g_inv disagrees with d^2H/dp dp", "g_inv")
        g_inv = derived
        try:
            g = invert_metric(g_inv, envs, "g_inv derived from H_raw")
        except SpaceError as err:
            if err.code == "singular_metric":
                raise SpaceError("kronecker_regularity", "derived vertical metric has rank < n", "H_raw") from None
            raise
    else:
        g_inv = _parse_matrix(doc, "g_inv", n, n, dd, constants)
        _check_vars(g_inv, {"t", "x"} if m >= 2 else {"t", "x", "p"}, "g_inv")
        _check_symmetric(g_inv, envs, "g_inv")
        g = invert_metric(g_inv, envs, "g_inv")
        if m == 1 and any(r.kind == "p" for e in g_inv.flat for r in e.free_vars):
            H = structured_hamiltonian(h, g_inv, U, F, m, n)
            derived = _metric_from_raw(H, h_inv, n)
            diffs = [simplify(g_inv[i, j] - derived[i, j]) for i in range(n) for j in range(n)]
            if _safe_max(envs, diffs, "g_inv") > 1e-10:
                raise SpaceError(
                    "kronecker_regularity",
                    "momentum-dependent g_inv is not the vertical Hessian of the structured Hamiltonian",
                    "g_inv",
                )
    _check_identity(g_inv, g, envs, "g_inv")

    corrupt = tuple(dict(c) for c in (doc.get("corrupt") or ()))
    return HamiltonSpace(
        name=str(name),
        m=m,
        n=n,
        h=_freeze(h),
        h_inv=h_inv,
        g_inv=_freeze(g_inv),
        g=g,
        U=_freeze(U),
        F=F,
        H_raw=H_raw,
        domain=domain,
        constants=constants,
        bianchi_expected=bool(doc.get("bianchi_expected", False)),
        corrupt=corrupt,
    )


def _safe_max(envs, exprs, where) -> float:
    try:
        return _max_abs(envs, exprs)
    except DomainError as err:
        raise SpaceError("domain_error", str(err), where) from None


def _metric_from_raw(H: Expr, h_inv, n: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    half_h11 = mul(Fraction(1, 2), h_inv[0, 0])
    for i, j in itertools.product(range(n), repeat=2):
        d2 = diff(diff(H, VarRef.p(i + 1, 1)), VarRef.p(j + 1, 1))
        out[i, j] = mul(half_h11, d2)
    return out


def _check_symmetric(mat, envs, key):
    k = mat.shape[0]
    pairs = [simplify(mat[i, j] - mat[j, i]) for i in range(k) for j in range(i + 1, k)]
    sub = {r: v[:20] for r, v in envs.items()}
    if pairs and _safe_max(sub, pairs, key) > 1e-10:
        raise SpaceError("asymmetric_metric", f"{key} is not symmetric", key)


def _check_identity(mat, inv, envs, key):
    k = mat.shape[0]
    resid = []
    for i, j in itertools.product(range(k), repeat=2):
        s = add(*(mul(mat[i, r], inv[r, j]) for r in range(k)))
        resid.append(s - (ONE if i == j else ZERO))
    if _safe_max(envs, resid, key) > 1e-9:
        raise SpaceError("singular_metric", f"{key} times its inverse is not the identity", key)


def dump_space(space: HamiltonSpace) -> dict:
    """A normalized document that ``load_space`` reads back to an equal space."""
    def mat(a):
        return [[to_text(e) for e in row] for row in a]

    doc: dict[str, Any] = {"name": space.name, "dims": {"m": space.m, "n": space.n}, "h": mat(space.h)}
    doc["g_inv"] = mat(space.g_inv)
    if space.H_raw is not None:
        doc["H_raw"] = to_text(space.H_raw)
    else:
        doc["U"] = mat(space.U)
        doc["F"] = to_text(space.F)
    doc["domain"] = {r.name: list(b) for r, b in sorted(space.domain.items(), key=lambda kv: kv[0].sort_key())}
    if space.constants:
        doc["constants"] = dict(space.constants)
    if space.bianchi_expected:
        doc["bianchi_expected"] = True
    if space.corrupt:
        doc["corrupt"] = [dict(c) for c in space.corrupt]
    return doc


def bundled_spaces() -> list[str]:
    root = resources.files("jetgeom") / "spaces"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def dumps(space: HamiltonSpace) -> str:
    return json.dumps(dump_space(space), indent=2)
