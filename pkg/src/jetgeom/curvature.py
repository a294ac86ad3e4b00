"""Covariant differentiation of d-tensors and the torsion, curvature and
Ricci tables of the Cartan canonical connection.

Covariant derivative kinds:

* ``"/"``  horizontal-temporal, base derivative delta/delta t^c, appends a
  lower temporal slot;
* ``"|"``  horizontal-spatial, base derivative delta/delta x^k, appends a
  lower spatial slot;
* ``"v"``  vertical, base derivative d/dp_k^c, appends an upper spatial
  slot k followed by a lower temporal slot c.

Per-index corrections: temporal indices are corrected by chi only under
``"/"``; spatial indices by A under ``"/"``, H under ``"|"`` and C under
``"v"``, with a plus sign for upper and a minus sign for lower indices.

Cells of the tables are stored 0-based with the index layout given in
each builder's comment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .connections import (
    CartanConnection,
    NonlinearConnection,
    cartan_connection,
    delta_t,
    delta_x,
    momentum,
    nonlinear_connection,
    pvar,
    spatial_christoffel,
    temporal_christoffel,
    tvar,
    xvar,
)
from .expr import ONE, ZERO, Expr, add, diff, mul
from .space import HamiltonSpace
from .tensor import S_DN, S_UP, T_DN, T_UP, DTensor


def _delta(i, j) -> Expr:
    return ONE if i == j else ZERO


def covariant_derivative(
    space: HamiltonSpace,
    cartan: CartanConnection,
    X: DTensor,
    kind: str,
    N: NonlinearConnection | None = None,
) -> DTensor:
    """Covariant derivative of ``X`` under the Cartan connection."""
    N = N or nonlinear_connection(space)
    m, n = space.dims
    chi, A, H, C = cartan.chi, cartan.A, cartan.H, cartan.C
    sig = X.signature
    if kind == "/":
        out_sig = sig + (T_DN,)
    elif kind == "|":
        out_sig = sig + (S_DN,)
    elif kind == "v":
        out_sig = sig + (S_UP, T_DN)
    else:
        raise ValueError(f"unknown covariant derivative kind {kind!r}")

    def comp(*idx):
        base_idx, d = idx[: len(sig)], idx[len(sig) :]
        e = X[base_idx]
        if kind == "/":
            (c,) = d
            terms = [delta_t(N, e, c)]
        elif kind == "|":
            (k,) = d
            terms = [delta_x(N, e, k)]
        else:
            k, c = d
            terms = [diff(e, pvar(k, c))]
        for s, slot in enumerate(sig):
            u = base_idx[s]
            if slot.kind == "t":
                if kind != "/":
                    continue
                for f in range(m):
                    coef = chi[u, f, c] if slot.up else chi[f, u, c]
                    if coef.is_zero():
                        continue
                    other = X[base_idx[:s] + (f,) + base_idx[s + 1 :]]
                    terms.append(mul(coef if slot.up else mul(-1, coef), other))
            else:
                for r in range(n):
                    if kind == "/":
                        coef = A[u, r, c] if slot.up else A[r, u, c]
                    elif kind == "|":
                        coef = H[u, r, k] if slot.up else H[r, u, k]
                    else:
                        coef = C[u, k, r, c] if slot.up else C[r, k, u, c]
                    if coef.is_zero():
                        continue
                    other = X[base_idx[:s] + (r,) + base_idx[s + 1 :]]
                    terms.append(mul(coef if slot.up else mul(-1, coef), other))
        return add(*terms)

    suffix = {"/": "/", "|": "|", "v": "|v"}[kind]
    return DTensor.build(f"{X.name}{suffix}", out_sig, space.dims, comp)


def contract(X: DTensor, s1: int, s2: int, name: str | None = None) -> DTensor:
    """Trace over two slots of the same kind."""
    if X.signature[s1].kind != X.signature[s2].kind:
        raise ValueError("can only contract slots of the same kind")
    keep = [k for k in range(X.rank) if k not in (s1, s2)]
    ext = X.shape[s1]

    def comp(*idx):
        terms = []
        for r in range(ext):
            full = [0] * X.rank
            for k, v in zip(keep, idx):
                full[k] = v
            full[s1] = r
            full[s2] = r
            terms.append(X[tuple(full)])
        return add(*terms)

    return DTensor.build(name or f"tr({X.name})", [X.signature[k] for k in keep], X.dims, comp)


def momentum_tensor(space: HamiltonSpace) -> DTensor:
    """p as a d-tensor: ``P[a, i]`` = p_i^a."""
    return DTensor.build("p", (T_UP, S_DN), space.dims, lambda a, i: momentum(i, a))


@dataclass
class TensorSet:
    """Named table cells. ``zero_cells`` hold formulas the tables declare zero."""

    cells: dict[str, DTensor] = field(default_factory=dict)
    zero_cells: dict[str, DTensor] = field(default_factory=dict)
    checks: dict[str, tuple[DTensor, DTensor]] = field(default_factory=dict)

    def __getitem__(self, key) -> DTensor:
        if key in self.cells:
            return self.cells[key]
        return self.zero_cells[key]

    def __contains__(self, key):
        return key in self.cells or key in self.zero_cells


TorsionSet = TensorSet
CurvatureSet = TensorSet
RicciSet = TensorSet


# ---------------------------------------------------------------------------
# torsion


@lru_cache(maxsize=64)
def torsion_components(space: HamiltonSpace) -> TensorSet:
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    m, n = space.dims
    dims = space.dims
    chi, A, H, C = cartan.chi, cartan.A, cartan.H, cartan.C
    out = TensorSet()

    # T^r_aj, layout [r, a, j]
    T = DTensor.build("T^r_aj", (S_UP, T_DN, S_DN), dims, lambda r, a, j: mul(-1, A[r, j, a]))
    # P^(f)(j)_(r)a(b), layout [f, j, r, a, b]
    P_t = DTensor.build(
        "P^(f)(j)_(r)a(b)",
        (T_UP, S_UP, S_DN, T_DN, T_DN),
        dims,
        lambda f, j, r, a, b: add(
            diff(N.N1[f, r, a], pvar(j, b)), mul(_delta(f, b), A[j, r, a]), mul(-1, _delta(j, r), chi[f, a, b])
        ),
    )
    # P^(f)(j)_(r)i(b), layout [f, j, r, i, b]
    P_x = DTensor.build(
        "P^(f)(j)_(r)i(b)",
        (T_UP, S_UP, S_DN, S_DN, T_DN),
        dims,
        lambda f, j, r, i, b: add(diff(N.N2[f, r, i], pvar(j, b)), mul(_delta(f, b), H[j, r, i])),
    )
    # P^r(j)_i(b) = C^r(j)_i(b), layout [r, j, i, b]
    P_C = C.renamed("P^r(j)_i(b)")
    # R^(f)_(r)ab, R^(f)_(r)aj, R^(f)_(r)ij as delta-brackets of N
    dN1 = {}

    def d_N1(f, r, a, direction, k):
        key = (f, r, a, direction, k)
        if key not in dN1:
            e = N.N1[f, r, a]
            dN1[key] = delta_t(N, e, k) if direction == "t" else delta_x(N, e, k)
        return dN1[key]

    dN2 = {}

    def d_N2(f, r, i, direction, k):
        key = (f, r, i, direction, k)
        if key not in dN2:
            e = N.N2[f, r, i]
            dN2[key] = delta_t(N, e, k) if direction == "t" else delta_x(N, e, k)
        return dN2[key]

    R_tt_gen = DTensor.build(
        "R^(f)_(r)ab",
        (T_UP, S_DN, T_DN, T_DN),
        dims,
        lambda f, r, a, b: d_N1(f, r, a, "t", b) - d_N1(f, r, b, "t", a),
    )
    R_tx_gen = DTensor.build(
        "R^(f)_(r)aj",
        (T_UP, S_DN, T_DN, S_DN),
        dims,
        lambda f, r, a, j: d_N1(f, r, a, "x", j) - d_N2(f, r, j, "t", a),
    )
    R_xx_gen = DTensor.build(
        "R^(f)_(r)ij",
        (T_UP, S_DN, S_DN, S_DN),
        dims,
        lambda f, r, i, j: d_N2(f, r, i, "x", j) - d_N2(f, r, j, "x", i),
    )

    # cells the tables hold at zero in every branch
    out.zero_cells["T^a_bc"] = DTensor.build(
        "T^a_bc", (T_UP, T_DN, T_DN), dims, lambda a, b, c: chi[a, b, c] - chi[a, c, b]
    )
    out.zero_cells["T^r_ij"] = DTensor.build(
        "T^r_ij", (S_UP, S_DN, S_DN), dims, lambda r, i, j: H[r, i, j] - H[r, j, i]
    )
    out.zero_cells["S^(f)(i)(j)_(r)(a)(b)"] = DTensor.build(
        "S^(f)(i)(j)_(r)(a)(b)",
        (T_UP, S_UP, S_UP, S_DN, T_DN, T_DN),
        dims,
        lambda f, i, j, r, a, b: mul(_delta(f, a), C[i, j, r, b]) - mul(_delta(f, b), C[j, i, r, a]),
    )

    out.cells["T^r_aj"] = T
    out.cells["P^(f)(j)_(r)a(b)"] = P_t
    if m == 1:
        out.cells["P^r(j)_i(b)"] = P_C
        out.cells["P^(f)(j)_(r)i(b)"] = P_x
        out.cells["R^(f)_(r)aj"] = R_tx_gen
        out.cells["R^(f)_(r)ij"] = R_xx_gen
        out.zero_cells["R^(f)_(r)ab"] = R_tt_gen
        return out

    # m >= 2: the closed forms; delta-brackets kept as cross-checks
    gamma = spatial_christoffel(space)
    T_aux = N.T_aux
    chi4 = temporal_curvature(space)
    P_t_closed = DTensor.build(
        "P^(f)(j)_(r)a(b)", P_t.signature, dims, lambda f, j, r, a, b: mul(_delta(f, b), A[j, r, a])
    )
    R_tt = DTensor.build(
        "R^(f)_(r)ab",
        R_tt_gen.signature,
        dims,
        lambda f, r, a, b: add(*(mul(chi4[f, g, a, b], momentum(r, g)) for g in range(m))),
    )
    R_tx = DTensor.build(
        "R^(f)_(r)aj",
        R_tx_gen.signature,
        dims,
        lambda f, r, a, j: add(
            mul(-1, diff(N.N2[f, r, j], tvar(a))), *(mul(-1, chi[f, c, a], T_aux[c, r, j]) for c in range(m))
        ),
    )
    T_cov = covariant_derivative(space, cartan, T_aux, "|", N)  # [f, r, i, j] = T^(f)_(r)i|j
    riem = spatial_riemann(space)
    R_xx = DTensor.build(
        "R^(f)_(r)ij",
        R_xx_gen.signature,
        dims,
        lambda f, r, i, j: add(
            *(mul(-1, riem[k, r, i, j], momentum(k, f)) for k in range(n)), T_cov[f, r, i, j], mul(-1, T_cov[f, r, j, i])
        ),
    )
    out.cells["P^(f)(j)_(r)a(b)"] = P_t_closed
    out.cells["R^(f)_(r)ab"] = R_tt
    out.cells["R^(f)_(r)aj"] = R_tx
    out.cells["R^(f)_(r)ij"] = R_xx
    out.zero_cells["P^r(j)_i(b)"] = P_C
    out.zero_cells["P^(f)(j)_(r)i(b)"] = P_x
    out.checks["P^(f)(j)_(r)a(b)"] = (P_t_closed, P_t)
    out.checks["R^(f)_(r)ab"] = (R_tt, R_tt_gen)
    out.checks["R^(f)_(r)aj"] = (R_tx, R_tx_gen)
    out.checks["R^(f)_(r)ij"] = (R_xx, R_xx_gen)
    return out


# ---------------------------------------------------------------------------
# curvature


@lru_cache(maxsize=64)
def temporal_curvature(space: HamiltonSpace) -> DTensor:
    """chi^d_abc, layout [d, a, b, c]."""
    chi = temporal_christoffel(space)
    m = space.m

    def comp(d, a, b, c):
        terms = [diff(chi[d, a, b], tvar(c)), mul(-1, diff(chi[d, a, c], tvar(b)))]
        for f in range(m):
            terms.append(mul(chi[f, a, b], chi[d, f, c]))
            terms.append(mul(-1, chi[f, a, c], chi[d, f, b]))
        return add(*terms)

    return DTensor.build("chi^d_abc", (T_UP, T_DN, T_DN, T_DN), space.dims, comp)


@lru_cache(maxsize=64)
def spatial_riemann(space: HamiltonSpace) -> DTensor:
    """Riemann tensor of the generalized spatial Christoffel symbols, layout [l, i, j, k]:
    dGamma^l_ij/dx^k - dGamma^l_ik/dx^j + Gamma^r_ij Gamma^l_rk - Gamma^r_ik Gamma^l_rj.
    """
    G = spatial_christoffel(space)
    n = space.n

    def comp(l, i, j, k):
        terms = [diff(G[l, i, j], xvar(k)), mul(-1, diff(G[l, i, k], xvar(j)))]
        for r in range(n):
            terms.append(mul(G[r, i, j], G[l, r, k]))
            terms.append(mul(-1, G[r, i, k], G[l, r, j]))
        return add(*terms)

    return DTensor.build("Rfrak^l_ijk", (S_UP, S_DN, S_DN, S_DN), space.dims, comp)


@lru_cache(maxsize=64)
def curvature_components(space: HamiltonSpace) -> TensorSet:
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    tors = torsion_components(space)
    m, n = space.dims
    dims = space.dims
    A, H, C = cartan.A, cartan.H, cartan.C
    R_tt, R_tx, R_xx = tors["R^(f)_(r)ab"], tors["R^(f)_(r)aj"], tors["R^(f)_(r)ij"]
    P_t, P_x = tors["P^(f)(j)_(r)a(b)"], tors["P^(f)(j)_(r)i(b)"]
    out = TensorSet()

    def c_torsion(l, i, tors_cell, *rest):
        """C^l(r)_i(f) * torsion[f, r, *rest] summed over r, f."""
        return [
            mul(C[l, r, i, f], tors_cell[(f, r) + rest])
            for r in range(n)
            for f in range(m)
            if not C[l, r, i, f].is_zero()
        ]

    chi4 = temporal_curvature(space)
    # generic delta-forms, layout [l, i, b, c] / [l, i, b, k] / [l, i, j, k]
    R_ibc = DTensor.build(
        "R^l_ibc",
        (S_UP, S_DN, T_DN, T_DN),
        dims,
        lambda l, i, b, c: add(
            delta_t(N, A[l, i, b], c),
            mul(-1, delta_t(N, A[l, i, c], b)),
            *(mul(A[r, i, b], A[l, r, c]) - mul(A[r, i, c], A[l, r, b]) for r in range(n)),
            *c_torsion(l, i, R_tt, b, c),
        ),
    )
    R_ibk = DTensor.build(
        "R^l_ibk",
        (S_UP, S_DN, T_DN, S_DN),
        dims,
        lambda l, i, b, k: add(
            delta_x(N, A[l, i, b], k),
            mul(-1, delta_t(N, H[l, i, k], b)),
            *(mul(A[r, i, b], H[l, r, k]) - mul(H[r, i, k], A[l, r, b]) for r in range(n)),
            *c_torsion(l, i, R_tx, b, k),
        ),
    )
    R_ijk = DTensor.build(
        "R^l_ijk",
        (S_UP, S_DN, S_DN, S_DN),
        dims,
        lambda l, i, j, k: add(
            delta_x(N, H[l, i, j], k),
            mul(-1, delta_x(N, H[l, i, k], j)),
            *(mul(H[r, i, j], H[l, r, k]) - mul(H[r, i, k], H[l, r, j]) for r in range(n)),
            *c_torsion(l, i, R_xx, j, k),
        ),
    )
    # P^l(k)_ib(c) layout [l, k, i, b, c]; P^l(k)_ij(c) layout [l, k, i, j, c]
    C_t = covariant_derivative(space, cartan, C, "/", N)  # [l, k, i, c, b]
    C_x = covariant_derivative(space, cartan, C, "|", N)  # [l, k, i, c, j]
    P_ib = DTensor.build(
        "P^l(k)_ib(c)",
        (S_UP, S_UP, S_DN, T_DN, T_DN),
        dims,
        lambda l, k, i, b, c: add(
            diff(A[l, i, b], pvar(k, c)),
            mul(-1, C_t[l, k, i, c, b]),
            *c_torsion_p(C, l, i, P_t, k, b, c, m, n),
        ),
    )
    P_ij = DTensor.build(
        "P^l(k)_ij(c)",
        (S_UP, S_UP, S_DN, S_DN, T_DN),
        dims,
        lambda l, k, i, j, c: add(
            diff(H[l, i, j], pvar(k, c)),
            mul(-1, C_x[l, k, i, c, j]),
            *c_torsion_p(C, l, i, P_x, k, j, c, m, n),
        ),
    )
    # S^l(j)(k)_i(b)(c) layout [l, j, k, i, b, c]
    S = DTensor.build(
        "S^l(j)(k)_i(b)(c)",
        (S_UP, S_UP, S_UP, S_DN, T_DN, T_DN),
        dims,
        lambda l, j, k, i, b, c: add(
            diff(C[l, j, i, b], pvar(k, c)),
            mul(-1, diff(C[l, k, i, c], pvar(j, b))),
            *(mul(C[r, j, i, b], C[l, k, r, c]) - mul(C[r, k, i, c], C[l, j, r, b]) for r in range(n)),
        ),
    )

    out.cells["chi^d_abc"] = chi4
    if m == 1:
        out.cells["R^l_ibk"] = R_ibk
        out.cells["R^l_ijk"] = R_ijk
        out.cells["P^l(k)_ib(c)"] = P_ib
        out.cells["P^l(k)_ij(c)"] = P_ij
        out.cells["S^l(j)(k)_i(b)(c)"] = S
        out.zero_cells["R^l_ibc"] = R_ibc
        for name in ("R^l_ibk", "R^l_ijk", "P^l(k)_ib(c)", "P^l(k)_ij(c)", "S^l(j)(k)_i(b)(c)"):
            cell = out.cells[name]
            out.cells["-v" + name] = cell.map(lambda e: mul(-1, e), name="-v" + name)
        return out

    gamma = spatial_christoffel(space)
    riem = spatial_riemann(space)
    R_ibc_c = DTensor.build(
        "R^l_ibc",
        R_ibc.signature,
        dims,
        lambda l, i, b, c: add(
            diff(A[l, i, b], tvar(c)),
            mul(-1, diff(A[l, i, c], tvar(b))),
            *(mul(A[r, i, b], A[l, r, c]) - mul(A[r, i, c], A[l, r, b]) for r in range(n)),
        ),
    )
    R_ibk_c = DTensor.build(
        "R^l_ibk",
        R_ibk.signature,
        dims,
        lambda l, i, b, k: add(
            diff(A[l, i, b], xvar(k)),
            mul(-1, diff(gamma[l, i, k], tvar(b))),
            *(mul(A[r, i, b], gamma[l, r, k]) - mul(gamma[r, i, k], A[l, r, b]) for r in range(n)),
        ),
    )
    out.cells["R^l_ibc"] = R_ibc_c
    out.cells["R^l_ibk"] = R_ibk_c
    out.cells["R^l_ijk"] = riem.renamed("R^l_ijk")
    out.zero_cells["P^l(k)_ib(c)"] = P_ib
    out.zero_cells["P^l(k)_ij(c)"] = P_ij
    out.zero_cells["S^l(j)(k)_i(b)(c)"] = S
    out.checks["R^l_ibc"] = (R_ibc_c, R_ibc)
    out.checks["R^l_ibk"] = (R_ibk_c, R_ibk)
    out.checks["R^l_ijk"] = (out.cells["R^l_ijk"], R_ijk)
    # v-block: -R^(d)(i)_(l)(a)bc, layout [d, i, l, a, b, c]
    out.cells["-vR^(d)(i)_(l)(a)bc"] = DTensor.build(
        "-vR^(d)(i)_(l)(a)bc",
        (T_UP, S_UP, S_DN, T_DN, T_DN, T_DN),
        dims,
        lambda d, i, l, a, b, c: mul(_delta(i, l), chi4[d, a, b, c]) - mul(_delta(d, a), R_ibc_c[i, l, b, c]),
    )
    out.cells["-vR^(d)(i)_(l)(a)bk"] = DTensor.build(
        "-vR^(d)(i)_(l)(a)bk",
        (T_UP, S_UP, S_DN, T_DN, T_DN, S_DN),
        dims,
        lambda d, i, l, a, b, k: mul(-1, _delta(d, a), R_ibk_c[i, l, b, k]),
    )
    out.cells["-vR^(d)(l)_(i)(a)jk"] = DTensor.build(
        "-vR^(d)(l)_(i)(a)jk",
        (T_UP, S_UP, S_DN, T_DN, S_DN, S_DN),
        dims,
        lambda d, l, i, a, j, k: mul(-1, _delta(d, a), riem[l, i, j, k]),
    )
    return out


def c_torsion_p(C, l, i, P, k, b, c, m, n):
    """C^l(r)_i(f) * P^(f)(k)_(r)b(c) summed over r, f."""
    return [
        mul(C[l, r, i, f], P[f, k, r, b, c]) for r in range(n) for f in range(m) if not C[l, r, i, f].is_zero()
    ]


# ---------------------------------------------------------------------------
# Ricci blocks and scalars


@lru_cache(maxsize=64)
def ricci_and_scalar(space: HamiltonSpace) -> TensorSet:
    """Ricci blocks R_AB = R^D_ABD and the scalar curvatures.

    Scalars are rank-0 tensors named ``chi``, ``R``, ``S`` and ``Sc``.
    """
    curv = curvature_components(space)
    m, n = space.dims
    dims = space.dims
    out = TensorSet()
    chi4 = curv["chi^d_abc"]
    R_ibk = curv["R^l_ibk"]
    R_ijk = curv["R^l_ijk"]
    P_ib, P_ij, S = curv["P^l(k)_ib(c)"], curv["P^l(k)_ij(c)"], curv["S^l(j)(k)_i(b)(c)"]

    chi_ab = DTensor.build(
        "chi_ab", (T_DN, T_DN), dims, lambda a, b: add(*(chi4[f, a, b, f] for f in range(m)))
    )
    R_ia = DTensor.build("R_ia", (S_DN, T_DN), dims, lambda i, a: add(*(R_ibk[r, i, a, r] for r in range(n))))
    R_ij = DTensor.build("R_ij", (S_DN, S_DN), dims, lambda i, j: add(*(R_ijk[r, i, j, r] for r in range(n))))
    # P_(a)b^(i) = P^i(r)_rb(a), layout [i, a, b]
    P_ab = DTensor.build(
        "P^(i)_(a)b", (S_UP, T_DN, T_DN), dims, lambda i, a, b: add(*(P_ib[i, r, r, b, a] for r in range(n)))
    )
    # P_i(b)^(j) = P^r(j)_ir(b), layout [i, j, b]
    P_ib_ = DTensor.build(
        "P_i(b)^(j)", (S_DN, S_UP, T_DN), dims, lambda i, j, b: add(*(P_ij[r, j, i, r, b] for r in range(n)))
    )
    # P^(i)_(a)j = P^i(r)_rj(a), layout [i, a, j]
    P_aj = DTensor.build(
        "P^(i)_(a)j", (S_UP, T_DN, S_DN), dims, lambda i, a, j: add(*(P_ij[i, r, r, j, a] for r in range(n)))
    )
    # S^(i)(j)_(a)(b) = S^i(j)(r)_r(a)(b), layout [i, j, a, b]
    S_ab = DTensor.build(
        "S^(i)(j)_(a)(b)",
        (S_UP, S_UP, T_DN, T_DN),
        dims,
        lambda i, j, a, b: add(*(S[i, j, r, r, a, b] for r in range(n))),
    )

    def neg(t, name):
        return t.map(lambda e: mul(-1, e), name=name)

    out.cells["chi_ab"] = chi_ab
    out.cells["R_ij"] = R_ij
    out.cells["R_ia"] = R_ia
    zero_ai = DTensor.zeros("R_ai", (T_DN, S_DN), dims)
    zero_a_bj = DTensor.zeros("R_a(b)^(j)", (T_DN, T_DN, S_UP), dims)
    out.cells["P^(i)_(a)b"] = P_ab
    out.cells["P_i(b)^(j)"] = P_ib_
    out.cells["P^(i)_(a)j"] = P_aj
    out.cells["S^(i)(j)_(a)(b)"] = S_ab
    blocks = {
        "R_(a)b^(i)": neg(P_ab, "R_(a)b^(i)"),
        "R_i(b)^(j)": neg(P_ib_, "R_i(b)^(j)"),
        "R_(a)j^(i)": neg(P_aj, "R_(a)j^(i)"),
        "R_(a)(b)^(i)(j)": neg(S_ab, "R_(a)(b)^(i)(j)"),
    }
    out.cells.update(blocks)
    out.zero_cells["R_ai"] = zero_ai
    out.zero_cells["R_a(b)^(j)"] = zero_a_bj
    if m == 1:
        out.zero_cells["chi_ab"] = chi_ab
    else:
        for name in ("P^(i)_(a)b", "P_i(b)^(j)", "P^(i)_(a)j", "S^(i)(j)_(a)(b)", *blocks):
            out.zero_cells[name] = out.cells[name]

    h_inv, g_inv, g = space.h_inv, space.g_inv, space.g
    chi_s = add(*(mul(h_inv[a, b], chi_ab[a, b]) for a in range(m) for b in range(m)))
    R_s = add(*(mul(g_inv[i, j], R_ij[i, j]) for i in range(n) for j in range(n)))
    S_s = add(
        *(
            mul(h_inv[a, b], g[i, j], S_ab[i, j, a, b])
            for a in range(m)
            for b in range(m)
            for i in range(n)
            for j in range(n)
        )
    )
    Sc = add(R_s, mul(-1, S_s)) if m == 1 else add(chi_s, R_s)
    for name, e in (("chi", chi_s), ("R", R_s), ("S", S_s), ("Sc", Sc)):
        out.cells[name] = DTensor.build(name, (), dims, lambda e=e: e)
    return out


def scalar(t: DTensor) -> Expr:
    return t.comps[()]
