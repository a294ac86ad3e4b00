"""Christoffel symbols, the canonical nonlinear connection, adapted
derivatives and the Cartan canonical connection of a Hamilton space.

All index arguments are 0-based. Component layouts:

* ``chi[a, b, c]`` = chi^a_bc, ``gamma[k, i, j]`` = Gamma^k_ij
* ``G[i, j, a, b]`` = G^(i)(j)_(a)(b)
* ``N1[a, i, b]`` = N1^(a)_(i)b, ``N2[a, i, j]`` = N2^(a)_(i)j
* ``A[i, j, c]`` = A^i_jc, ``H[i, j, k]`` = H^i_jk
* ``C[i, k, j, c]`` = C^i(k)_j(c)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .expr import ZERO, Expr, Var, VarRef, add, diff, mul, parse_expr, simplify
from .space import HamiltonSpace
from .tensor import S_DN, S_UP, T_DN, T_UP, DTensor

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def tvar(a: int) -> VarRef:
    return VarRef.t(a + 1)


def xvar(i: int) -> VarRef:
    return VarRef.x(i + 1)


def pvar(i: int, a: int) -> VarRef:
    """The momentum p_i^a (0-based indices)."""
    return VarRef.p(i + 1, a + 1)


def momentum(i: int, a: int) -> Expr:
    return Var(pvar(i, a))


def apply_corruption(space: HamiltonSpace, obj: str, t: DTensor) -> DTensor:
    """Inject the negative-control perturbations a space file asks for."""
    hits = [c for c in space.corrupt if c.get("object") == obj]
    if not hits:
        return t
    comps = t.comps.copy()
    for c in hits:
        idx = tuple(int(k) - 1 for k in c["index"])
        if "add" in c:
            comps[idx] = comps[idx] + simplify(parse_expr(str(c["add"]), space.dims, space.constants))
        if "scale" in c:
            comps[idx] = comps[idx] * float(c["scale"])
    return DTensor(t.name, t.signature, comps, t.dims)


@dataclass(frozen=True)
class NonlinearConnection:
    N1: DTensor
    N2: DTensor
    N2_corollary: DTensor | None = None
    T_aux: DTensor | None = None


@dataclass(frozen=True)
class CartanConnection:
    chi: DTensor
    A: DTensor
    H: DTensor
    C: DTensor
    # for m >= 2: the general delta-form coefficients the closed forms replace
    general: "CartanConnection | None" = None


@lru_cache(maxsize=64)
def temporal_christoffel(space: HamiltonSpace) -> DTensor:
    """chi^a_bc = (h^ad / 2)(dh_db/dt^c + dh_dc/dt^b - dh_bc/dt^d)."""
    h, hi, m = space.h, space.h_inv, space.m

    def comp(a, b, c):
        return add(
            *(
                mul(HALF, hi[a, d], diff(h[d, b], tvar(c)) + diff(h[d, c], tvar(b)) - diff(h[b, c], tvar(d)))
                for d in range(m)
            )
        )

    t = DTensor.build("chi", (T_UP, T_DN, T_DN), space.dims, comp)
    return apply_corruption(space, "chi", t)


@lru_cache(maxsize=64)
def spatial_christoffel(space: HamiltonSpace) -> DTensor:
    """Gamma^k_ij = (g^kl / 2)(dg_li/dx^j + dg_lj/dx^i - dg_ij/dx^l)."""
    g, gi, n = space.g, space.g_inv, space.n

    def comp(k, i, j):
        return add(
            *(
                mul(HALF, gi[k, l], diff(g[l, i], xvar(j)) + diff(g[l, j], xvar(i)) - diff(g[i, j], xvar(l)))
                for l in range(n)
            )
        )

    t = DTensor.build("gamma", (S_UP, S_DN, S_DN), space.dims, comp)
    return apply_corruption(space, "gamma", t)


@lru_cache(maxsize=64)
def vertical_metric(space: HamiltonSpace) -> DTensor:
    """G^(i)(j)_(a)(b) = h_ab g^ij."""
    return DTensor.build(
        "G", (S_UP, S_UP, T_DN, T_DN), space.dims, lambda i, j, a, b: mul(space.h[a, b], space.g_inv[i, j])
    )


def lowered_potential(space: HamiltonSpace) -> list[list[Expr]]:
    """U_ib = g_ik U^(k)_(b)."""
    n, m = space.n, space.m
    return [[add(*(mul(space.g[i, k], space.U[k, b]) for k in range(n))) for b in range(m)] for i in range(n)]


def potential_bullet(space: HamiltonSpace, gamma: DTensor):
    """U_kb.r = dU_kb/dx^r - U_sb Gamma^s_kr, as ``out[k][b][r]``."""
    n, m = space.n, space.m
    Ul = lowered_potential(space)
    return [
        [
            [
                add(diff(Ul[k][b], xvar(r)), *(mul(-1, Ul[s][b], gamma[s, k, r]) for s in range(n)))
                for r in range(n)
            ]
            for b in range(m)
        ]
        for k in range(n)
    ]


@lru_cache(maxsize=64)
def nonlinear_connection(space: HamiltonSpace) -> NonlinearConnection:
    m, n, dims = space.m, space.n, space.dims
    chi = temporal_christoffel(space)
    N1 = DTensor.build(
        "N1", (T_UP, S_DN, T_DN), dims, lambda a, i, b: add(*(mul(chi[a, b, c], momentum(i, c)) for c in range(m)))
    )
    N1 = apply_corruption(space, "N1", N1)

    H = space.hamiltonian
    g, hi = space.g, space.h_inv
    dHdp = [[diff(H, pvar(k, b)) for b in range(m)] for k in range(n)]
    dHdx = [diff(H, xvar(k)) for k in range(n)]
    d2 = [[[diff(dHdp[k][b], xvar(j)) for b in range(m)] for k in range(n)] for j in range(n)]

    def n2(a, i, j):
        terms = []
        for b in range(m):
            if hi[a, b].is_zero():
                continue
            inner = []
            for k in range(n):
                inner.append(mul(diff(g[i, j], xvar(k)), dHdp[k][b]))
                inner.append(mul(-1, diff(g[i, j], pvar(k, b)), dHdx[k]))
                inner.append(mul(g[i, k], d2[j][k][b]))
                inner.append(mul(g[j, k], d2[i][k][b]))
            terms.append(mul(QUARTER, hi[a, b], add(*inner)))
        return add(*terms)

    N2 = apply_corruption(space, "N2", DTensor.build("N2", (T_UP, S_DN, S_DN), dims, n2))
    if m == 1:
        return NonlinearConnection(N1, N2)

    gamma = spatial_christoffel(space)
    bullet = potential_bullet(space, gamma)
    T = DTensor.build(
        "T",
        (T_UP, S_DN, S_DN),
        dims,
        lambda a, i, j: add(*(mul(QUARTER, hi[a, b], bullet[i][b][j] + bullet[j][b][i]) for b in range(m))),
    )
    N2c = DTensor.build(
        "N2_corollary",
        (T_UP, S_DN, S_DN),
        dims,
        lambda a, i, j: add(T[a, i, j], *(mul(-1, gamma[k, i, j], momentum(k, a)) for k in range(n))),
    )
    return NonlinearConnection(N1, N2, N2c, T)


# ---------------------------------------------------------------------------
# adapted derivatives


def delta_t(N: NonlinearConnection, e: Expr, a: int) -> Expr:
    """d/dt^a - N1^(b)_(j)a d/dp_j^b applied to ``e``."""
    m, n = N.N1.dims
    terms = [diff(e, tvar(a))]
    for j in range(n):
        for b in range(m):
            v = pvar(j, b)
            if v in e.free_vars:
                terms.append(mul(-1, N.N1[b, j, a], diff(e, v)))
    return add(*terms)


def delta_x(N: NonlinearConnection, e: Expr, i: int) -> Expr:
    """d/dx^i - N2^(b)_(j)i d/dp_j^b applied to ``e``."""
    m, n = N.N2.dims
    terms = [diff(e, xvar(i))]
    for j in range(n):
        for b in range(m):
            v = pvar(j, b)
            if v in e.free_vars:
                terms.append(mul(-1, N.N2[b, j, i], diff(e, v)))
    return add(*terms)


def vertical(e: Expr, i: int, a: int) -> Expr:
    return diff(e, pvar(i, a))


def adapted_derivative(space: HamiltonSpace, N: NonlinearConnection, e: Expr, direction: tuple) -> Expr:
    """``direction`` is ("t", a), ("x", i) or ("p", i, a), 0-based."""
    kind = direction[0]
    if kind == "t":
        return delta_t(N, e, direction[1])
    if kind == "x":
        return delta_x(N, e, direction[1])
    if kind == "p":
        return vertical(e, direction[1], direction[2])
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Cartan canonical connection


def _general_cartan(space: HamiltonSpace, N: NonlinearConnection, chi: DTensor) -> CartanConnection:
    n, dims = space.n, space.dims
    g, gi = space.g, space.g_inv

    dtg = {}

    def dt_g(l, j, c):
        key = (l, j, c)
        if key not in dtg:
            dtg[key] = delta_t(N, g[l, j], c)
        return dtg[key]

    dxg = {}

    def dx_g(j, r, k):
        key = (j, r, k)
        if key not in dxg:
            dxg[key] = delta_x(N, g[j, r], k)
        return dxg[key]

    A = DTensor.build(
        "A", (S_UP, S_DN, T_DN), dims, lambda i, j, c: add(*(mul(HALF, gi[i, l], dt_g(l, j, c)) for l in range(n)))
    )
    H = DTensor.build(
        "H",
        (S_UP, S_DN, S_DN),
        dims,
        lambda i, j, k: add(
            *(mul(HALF, gi[i, r], dx_g(j, r, k) + dx_g(k, r, j) - dx_g(j, k, r)) for r in range(n))
        ),
    )

    def c_comp(j, k, i, c):
        return add(
            *(
                mul(
                    -HALF,
                    g[i, r],
                    vertical(gi[j, r], k, c) + vertical(gi[k, r], j, c) - vertical(gi[j, k], r, c),
                )
                for r in range(n)
            )
        )

    C = DTensor.build("C", (S_UP, S_UP, S_DN, T_DN), dims, c_comp)
    return CartanConnection(chi, A, H, C)


@lru_cache(maxsize=64)
def cartan_connection(space: HamiltonSpace, N: NonlinearConnection | None = None) -> CartanConnection:
    N = N or nonlinear_connection(space)
    chi = temporal_christoffel(space)
    general = _general_cartan(space, N, chi)
    if space.m == 1:
        return CartanConnection(
            chi,
            apply_corruption(space, "A", general.A),
            apply_corruption(space, "H", general.H),
            apply_corruption(space, "C", general.C),
        )
    n, dims, g, gi = space.n, space.dims, space.g, space.g_inv
    A = DTensor.build(
        "A",
        (S_UP, S_DN, T_DN),
        dims,
        lambda i, j, c: add(*(mul(HALF, gi[i, l], diff(g[l, j], tvar(c))) for l in range(n))),
    )
    H = spatial_christoffel(space).renamed("H")
    C = DTensor.zeros("C", (S_UP, S_UP, S_DN, T_DN), dims)
    return CartanConnection(
        chi,
        apply_corruption(space, "A", A),
        apply_corruption(space, "H", H),
        apply_corruption(space, "C", C),
        general,
    )


def kronecker(i: int, j: int) -> Expr:
    from .expr import ONE

    return ONE if i == j else ZERO


def index_range(*extents):
    return itertools.product(*(range(k) for k in extents))
