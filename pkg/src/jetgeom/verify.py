"""Identity sampling harness and independent oracles.

``run_suite`` evaluates every residual of a suite on one seeded sample set.
The oracles here (finite differences, numeric Christoffel/Riemann) only use
the expression evaluator; they never call the symbolic connection code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .connections import (
    cartan_connection,
    nonlinear_connection,
    spatial_christoffel,
    temporal_christoffel,
)
from .curvature import (
    covariant_derivative,
    curvature_components,
    ricci_and_scalar,
    spatial_riemann,
    torsion_components,
)
from .expr import DomainError, Evaluator, Expr, Point, VarRef, diff
from .fields import (
    Residual,
    antisymmetry_residuals,
    conservation_residuals,
    deflection_identities,
    deflection_residuals,
    einstein_residuals,
    em_residuals,
    maxwell_residuals,
)
from .space import HamiltonSpace, SpaceError, box_sample
from .tensor import S_DN, S_UP, T_DN, T_UP, DTensor

SUITES = ("metricity", "tables", "deflection", "maxwell", "einstein", "conservation", "oracle")


class SamplingError(SpaceError):
    def __init__(self, message: str):
        super().__init__("sampling_failed", message, "domain")


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    count: int = 100
    tol_abs: float = 1e-8
    tol_rel: float = 1e-6
    fd_step: float = 1e-6
    max_resample: int = 10

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be at least 1")
        if not (self.tol_abs > 0 and self.tol_rel > 0 and self.fd_step > 0):
            raise ValueError("tolerances and step must be positive")
        if self.max_resample < 0:
            raise ValueError("max_resample must be non-negative")


@dataclass
class IdentityResult:
    identity: str
    paper_ref: str
    max_abs_residual: float | None
    max_rel_residual: float | None
    worst_point: dict | None
    passed: bool | None
    report_only: bool = False
    note: str | None = None

    def as_dict(self) -> dict:
        out = {
            "identity": self.identity,
            "paper_ref": self.paper_ref,
            "max_abs_residual": self.max_abs_residual,
            "max_rel_residual": self.max_rel_residual,
            "worst_point": self.worst_point,
        }
        if self.report_only:
            out["report_only"] = True
        else:
            out["pass"] = self.passed
        if self.note:
            out["note"] = self.note
        return out


# ---------------------------------------------------------------------------
# sampling


def _points_from_env(space: HamiltonSpace, env: dict) -> list[Point]:
    m, n = space.dims
    count = len(next(iter(env.values())))
    pts = []
    for s in range(count):
        t = [env[VarRef.t(a + 1)][s] for a in range(m)]
        x = [env[VarRef.x(i + 1)][s] for i in range(n)]
        p = [[env[VarRef.p(i + 1, a + 1)][s] for a in range(m)] for i in range(n)]
        pts.append(Point(t, x, p))
    return pts


def _base_probes(space: HamiltonSpace) -> list[Expr]:
    probes = [space.hamiltonian]
    for mat in (space.h, space.h_inv, space.g, space.g_inv):
        probes.extend(mat.flat)
    return probes


def _point_ok(pt: Point, probes: Sequence[Expr]) -> bool:
    ev = Evaluator(pt.env())
    try:
        return all(math.isfinite(float(ev(e))) for e in probes)
    except (DomainError, ArithmeticError, OverflowError):
        return False


def sample_points(space: HamiltonSpace, cfg: SampleConfig, probes: Sequence[Expr] | None = None) -> list[Point]:
    """Seeded uniform points of the domain box; singular points are redrawn."""
    for ref, (lo, hi) in space.domain.items():
        if not hi > lo:
            raise SpaceError("degenerate_domain", f"empty or degenerate interval for {ref.name}", "domain")
    probes = _base_probes(space) if probes is None else list(probes)
    pts = _points_from_env(space, box_sample(space.domain, cfg.count, cfg.seed))
    bad = [k for k, pt in enumerate(pts) if not _point_ok(pt, probes)]
    for attempt in range(1, cfg.max_resample + 1):
        if not bad:
            break
        fresh = _points_from_env(space, box_sample(space.domain, len(bad), cfg.seed + 7919 * attempt))
        still = []
        for k, pt in zip(bad, fresh):
            if _point_ok(pt, probes):
                pts[k] = pt
            else:
                still.append(k)
        bad = still
    if bad:
        raise SamplingError(f"{len(bad)} of {cfg.count} points stayed singular after {cfg.max_resample} resamples")
    return pts


def points_env(points: Sequence[Point]) -> dict:
    from .expr import batch_env

    return batch_env(points)


# ---------------------------------------------------------------------------
# residual evaluation


def _evaluate(t: DTensor, ev: Evaluator, count: int) -> np.ndarray:
    vals = [np.broadcast_to(np.asarray(ev(e), dtype=float), (count,)) for e in t.comps.flat]
    return np.array(vals).reshape(t.shape + (count,)) if vals else np.zeros(t.shape + (count,))


def evaluate_residual(
    res: Residual, points: Sequence[Point], cfg: SampleConfig, paper_ref: str, env: dict | None = None
) -> IdentityResult:
    env = env if env is not None else points_env(points)
    count = len(points)
    ev = Evaluator(env)
    try:
        val = _evaluate(res.value, ev, count)
        scale = np.zeros_like(val)
        for term in res.terms:
            scale = np.maximum(scale, np.abs(_evaluate(term, ev, count)))
    except DomainError as exc:
        raise SamplingError(f"{res.name}: {exc}") from None
    return _summarize(res.name, paper_ref, np.abs(val), scale, points, cfg, res.report_only)


def _summarize(name, paper_ref, absval, scale, points, cfg, report_only=False) -> IdentityResult:
    count = len(points)
    if absval.size == 0:
        return IdentityResult(name, paper_ref, 0.0, 0.0, points[0].as_dict(), None if report_only else True, report_only)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        rel = np.where(absval == 0, 0.0, absval / np.where(scale > 0, scale, 1.0))
        rel = np.where((scale == 0) & (absval > 0), np.inf, rel)
    if not np.all(np.isfinite(absval)):
        max_abs, max_rel = math.inf, math.inf
        flat = np.argmax(~np.isfinite(absval.reshape(-1, count)).any(axis=0))
        worst = int(flat)
    else:
        per_point = absval.reshape(-1, count).max(axis=0)
        worst = int(np.argmax(per_point))
        max_abs = float(absval.max())
        max_rel = float(rel.max())
    passed = bool(max_abs <= cfg.tol_abs or max_rel <= cfg.tol_rel)
    return IdentityResult(
        name,
        paper_ref,
        max_abs,
        max_rel,
        points[worst].as_dict(),
        None if report_only else passed,
        report_only,
    )


# ---------------------------------------------------------------------------
# finite-difference oracle


def central_difference(e: Expr, v: VarRef, env: dict, step: float) -> np.ndarray:
    """Central difference with one Richardson refinement."""

    def at(delta):
        shifted = dict(env)
        shifted[v] = np.asarray(env[v], dtype=float) + delta
        return np.asarray(Evaluator(shifted)(e), dtype=float)

    d1 = (at(step) - at(-step)) / (2 * step)
    d2 = (at(step / 2) - at(-step / 2)) / step
    return (4 * d2 - d1) / 3


def fd_check_all(
    space: HamiltonSpace,
    tensors: dict[str, DTensor] | None = None,
    cfg: SampleConfig | None = None,
    derivative: Callable[[Expr, VarRef], Expr] = diff,
    points: Sequence[Point] | None = None,
) -> list[IdentityResult]:
    """Compare every first-order symbolic partial of the given tensors with
    central differences; pass when |sym - fd| <= max(1e-6, 1e-6 |sym|)."""
    cfg = cfg or SampleConfig(count=20)
    tensors = tensors if tensors is not None else derived_tensors(space)
    points = points if points is not None else sample_points(space, cfg)
    env = points_env(points)
    count = len(points)
    out = []
    for name, t in tensors.items():
        worst_abs, worst_rel, worst_pt = 0.0, 0.0, 0
        for e in t.comps.flat:
            for v in sorted(e.free_vars, key=lambda r: r.sort_key()):
                sym = np.broadcast_to(np.asarray(Evaluator(env)(derivative(e, v)), dtype=float), (count,))
                fd = np.broadcast_to(central_difference(e, v, env, cfg.fd_step), (count,))
                err = np.abs(sym - fd)
                rel = err / np.maximum(1.0, np.abs(sym))
                k = int(np.argmax(rel))
                if rel[k] > worst_rel or (rel[k] == worst_rel and err[k] > worst_abs):
                    worst_abs, worst_rel, worst_pt = float(err[k]), float(rel[k]), k
        out.append(
            IdentityResult(
                f"fd.{name}",
                f"finite-difference check of every partial derivative inside {name}",
                worst_abs,
                worst_rel,
                points[worst_pt].as_dict(),
                bool(worst_rel <= 1e-6),
            )
        )
    return out


def derived_tensors(space: HamiltonSpace) -> dict[str, DTensor]:
    """The tensors whose symbolic partials the finite-difference oracle audits."""
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    dims = space.dims
    base = {
        "h": DTensor.build("h", (T_DN, T_DN), dims, lambda a, b: space.h[a, b]),
        "g_inv": DTensor.build("g_inv", (S_UP, S_UP), dims, lambda i, j: space.g_inv[i, j]),
        "g": DTensor.build("g", (S_DN, S_DN), dims, lambda i, j: space.g[i, j]),
        "hamiltonian": DTensor.build("H", (), dims, lambda: space.hamiltonian),
    }
    base.update(
        {
            "chi": temporal_christoffel(space),
            "gamma": spatial_christoffel(space),
            "N1": N.N1,
            "N2": N.N2,
            "A": cartan.A,
            "H": cartan.H,
            "C": cartan.C,
        }
    )
    return base


# ---------------------------------------------------------------------------
# first-principles Riemann oracle


def _metric_numeric(space: HamiltonSpace, env: dict, count: int) -> np.ndarray:
    """g_ij by numerically inverting the evaluated g^ij; shape (count, n, n)."""
    n = space.n
    ev = Evaluator(env)
    ginv = np.empty((count, n, n))
    for i in range(n):
        for j in range(n):
            ginv[:, i, j] = np.broadcast_to(np.asarray(ev(space.g_inv[i, j]), dtype=float), (count,))
    return np.linalg.inv(ginv)


def _fd5(fn, env: dict, v: VarRef, h: float):
    """Five-point central difference of an array-valued function of env."""

    def at(k):
        shifted = dict(env)
        shifted[v] = np.asarray(env[v], dtype=float) + k * h
        return fn(shifted)

    return (at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12 * h)


def oracle_christoffel(space: HamiltonSpace, env: dict, count: int, h: float = 1e-3) -> np.ndarray:
    """Gamma-hat[s, k, i, j] = Gamma^k_ij at sample s."""
    n = space.n
    xs = [VarRef.x(i + 1) for i in range(n)]

    def gamma_at(e):
        g = _metric_numeric(space, e, count)
        ginv = np.linalg.inv(g)
        dg = np.stack([_fd5(lambda ee: _metric_numeric(space, ee, count), e, x, h) for x in xs], axis=-1)
        # dg[s, i, j, l] = d g_ij / d x^l
        lower = 0.5 * (dg + dg.transpose(0, 1, 3, 2) - dg.transpose(0, 3, 1, 2))
        # lower[s, l, i, j] = 1/2 (d_j g_li + d_i g_lj - d_l g_ij)
        return np.einsum("skl,slij->skij", ginv, lower)

    return gamma_at(env), gamma_at


def oracle_riemann(space: HamiltonSpace, points: Sequence[Point], h: float = 1e-3):
    """Numeric Gamma-hat and Riemann-hat at ``points``, or ``None`` when the
    spatial metric depends on the momenta.

    Riemann-hat[s, l, i, j, k] = d_k G^l_ij - d_j G^l_ik + G^r_ij G^l_rk - G^r_ik G^l_rj.
    """
    if space.metric_depends_on_momenta():
        return None
    env = points_env(points)
    count = len(points)
    gam, gamma_at = oracle_christoffel(space, env, count, h)
    xs = [VarRef.x(i + 1) for i in range(space.n)]
    dgam = np.stack([_fd5(gamma_at, env, x, h) for x in xs], axis=-1)  # [s, l, i, j, k]
    riem = (
        dgam
        - dgam.transpose(0, 1, 2, 4, 3)
        + np.einsum("srij,slrk->slijk", gam, gam)
        - np.einsum("srik,slrj->slijk", gam, gam)
    )
    return gam, riem


def _compare_numeric(name, ref, sym: DTensor, numeric: np.ndarray, points, env, tol) -> IdentityResult:
    count = len(points)
    val = _evaluate(sym, Evaluator(env), count)  # shape sym.shape + (count,)
    num = np.moveaxis(numeric, 0, -1)
    err = np.abs(val - num)
    scale = np.maximum(np.abs(val), np.abs(num))
    cfg = SampleConfig(tol_abs=tol, tol_rel=tol)
    return _summarize(name, ref, err, scale, points, cfg)


def oracle_results(space: HamiltonSpace, points: Sequence[Point], tol: float = 1e-6) -> list[IdentityResult]:
    out = oracle_riemann(space, points)
    if out is None:
        note = "not applicable: the spatial metric depends on the momenta"
        return [
            IdentityResult("oracle.gamma", "numeric Christoffel symbols of g_ij", None, None, None, None, True, note),
            IdentityResult("oracle.riemann", "numeric Riemann tensor of g_ij", None, None, None, None, True, note),
        ]
    gam, riem = out
    env = points_env(points)
    return [
        _compare_numeric(
            "oracle.gamma", "numeric Christoffel symbols of g_ij", spatial_christoffel(space), gam, points, env, tol
        ),
        _compare_numeric(
            "oracle.riemann", "numeric Riemann tensor of g_ij", spatial_riemann(space), riem, points, env, tol
        ),
    ]


# ---------------------------------------------------------------------------
# identity families


def _zero_residual(name, t: DTensor, terms=()) -> Residual:
    return Residual(name, t.renamed(name), [t, *terms])


def _metric_tensors(space: HamiltonSpace):
    dims = space.dims
    g = DTensor.build("g_ij", (S_DN, S_DN), dims, lambda i, j: space.g[i, j])
    g_inv = DTensor.build("g^ij", (S_UP, S_UP), dims, lambda i, j: space.g_inv[i, j])
    h = DTensor.build("h_ab", (T_DN, T_DN), dims, lambda a, b: space.h[a, b])
    return g, g_inv, h


def _base_part(space, X: DTensor, kind: str) -> DTensor:
    """The adapted derivative of each component without connection terms."""
    from .connections import delta_t, delta_x, pvar

    N = nonlinear_connection(space)
    sig = X.signature
    if kind == "/":
        out_sig = sig + (T_DN,)
        fn = lambda *idx: delta_t(N, X[idx[:-1]], idx[-1])  # noqa: E731
    elif kind == "|":
        out_sig = sig + (S_DN,)
        fn = lambda *idx: delta_x(N, X[idx[:-1]], idx[-1])  # noqa: E731
    else:
        out_sig = sig + (S_UP, T_DN)
        fn = lambda *idx: diff(X[idx[:-2]], pvar(idx[-2], idx[-1]))  # noqa: E731
    return DTensor.build("base", out_sig, space.dims, fn)


def metricity_residuals(space: HamiltonSpace) -> list[tuple[Residual, str]]:
    cartan = cartan_connection(space)
    N = nonlinear_connection(space)
    g, g_inv, h = _metric_tensors(space)
    out = []
    for X, kind, label in (
        (g, "|", "metricity.g_ij|k"),
        (g_inv, "v", "metricity.g^ij|v"),
        (h, "/", "metricity.h_ab/c"),
        (h, "|", "metricity.h_ab|k"),
        (h, "v", "metricity.h_ab|v"),
        (g, "/", "metricity.g_ij/c"),
    ):
        cd = covariant_derivative(space, cartan, X, kind, N)
        out.append((_zero_residual(label, cd, [_base_part(space, X, kind)]), "Cartan connection is metrical: " + label[10:] + " = 0"))
    return out


def table_residuals(space: HamiltonSpace) -> list[tuple[Residual, str]]:
    m = space.m
    dims = space.dims
    out: list[tuple[Residual, str]] = []
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    chi, gamma = temporal_christoffel(space), spatial_christoffel(space)

    def sym_check(t: DTensor, label):
        swapped = DTensor.build("swap", t.signature, dims, lambda a, b, c: t[a, c, b])
        return Residual(label, (t - swapped).renamed(label), [t])

    out.append((sym_check(chi, "connection.chi_symmetry"), "temporal Christoffel symbols are symmetric"))
    out.append((sym_check(gamma, "connection.gamma_symmetry"), "spatial Christoffel symbols are symmetric"))
    if m >= 2:
        out.append(
            (
                Residual("connection.N2_corollary", (N.N2 - N.N2_corollary).renamed("N2"), [N.N2, N.N2_corollary]),
                "N2 general form equals -Gamma p + T",
            )
        )
        for key in ("A", "H", "C"):
            closed, general = getattr(cartan, key), getattr(cartan.general, key)
            out.append(
                (
                    Residual(f"connection.cartan_closed.{key}", (closed - general).renamed(key), [closed, general]),
                    f"closed-form Cartan coefficient {key} equals its delta-form",
                )
            )
        out.append((_zero_residual("connection.C_vanishes", cartan.C), "C vanishes for m >= 2"))
    tors = torsion_components(space)
    curv = curvature_components(space)
    ric = ricci_and_scalar(space)
    for group, label in ((tors, "torsion"), (curv, "curvature")):
        for key, (closed, general) in group.checks.items():
            out.append(
                (
                    Residual(f"{label}.closed_form.{key}", (closed - general).renamed(key), [closed, general]),
                    f"{label} cell {key}: displayed form equals the generic bracket form",
                )
            )
    for group, label in ((tors, "torsion"), (curv, "curvature"), (ric, "ricci")):
        for key, cell in group.zero_cells.items():
            out.append((_zero_residual(f"{label}.zero.{key}", cell), f"{label} table entry {key} vanishes"))
    return out


def _deflection_family(space: HamiltonSpace) -> list[tuple[Residual, str]]:
    out = [(r, "deflection closed form / Liouville field") for r in deflection_residuals(space)]
    out += [(r, "electromagnetic components") for r in em_residuals(space)]
    out += [(r, "Ricci identities for the deflections") for r in deflection_identities(space)]
    out += [(r, "curvature antisymmetry after raising with g^ij") for r in antisymmetry_residuals(space)]
    for r in deflection_identities(space, opposite_sign=True):
        r.report_only = True
        out.append((r, "Ricci identities with the opposite curvature-term sign"))
    for variant in (dict(sign=1), dict(tensorial=True)):
        for r in maxwell_residuals(space, **variant):
            r.report_only = True
            out.append((r, "Maxwell groups under an alternative reading"))
    return out


def family(space: HamiltonSpace, suite: str, kappa: float = 1.0) -> list[tuple[Residual, str]]:
    if suite == "metricity":
        return metricity_residuals(space)
    if suite == "tables":
        return table_residuals(space)
    if suite == "deflection":
        return _deflection_family(space)
    if suite == "maxwell":
        return [(r, "Maxwell-like equations") for r in maxwell_residuals(space)]
    if suite == "einstein":
        return [(r, "Einstein-like equations") for r in einstein_residuals(space, kappa)]
    if suite == "conservation":
        return [(r, "generalized conservation laws") for r in conservation_residuals(space).laws]
    raise ValueError(f"unknown suite {suite!r}")


def run_suite(
    space: HamiltonSpace, suite: str = "all", cfg: SampleConfig | None = None, kappa: float = 1.0
) -> list[IdentityResult]:
    """One IdentityResult per identity of ``suite``; deterministic in (space, suite, cfg)."""
    cfg = cfg or SampleConfig()
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {', '.join(SUITES + ('all',))}")
    names = SUITES if suite == "all" else (suite,)
    points = sample_points(space, cfg)
    env = points_env(points)
    results: list[IdentityResult] = []
    for name in names:
        if name == "oracle":
            results += fd_check_all(space, cfg=cfg, points=points[: min(len(points), 20)])
            results += oracle_results(space, points)
            continue
        for res, ref in family(space, name, kappa):
            results.append(evaluate_residual(res, points, cfg, ref, env))
    return results


def all_passed(results: Iterable[IdentityResult]) -> bool:
    return all(r.passed for r in results if not r.report_only)
