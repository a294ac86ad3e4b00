"""Deflection d-tensors, the electromagnetic field, Maxwell-like residuals,
Einstein-like blocks and conservation-law residuals.

Every identity is returned as a ``Residual``: a tensor of ``lhs - rhs``
together with the list of individual terms, so the sampler can normalize
the relative residual by the largest term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .connections import (
    cartan_connection,
    lowered_potential,
    momentum,
    nonlinear_connection,
    potential_bullet,
    spatial_christoffel,
    vertical_metric,
)
from .curvature import (
    contract,
    covariant_derivative,
    curvature_components,
    momentum_tensor,
    ricci_and_scalar,
    scalar,
    torsion_components,
)
from .expr import ONE, ZERO, Expr, add, mul
from .space import HamiltonSpace, SpaceError
from .tensor import S_DN, S_UP, T_DN, T_UP, DTensor

HALF = Fraction(1, 2)


def _delta(i, j) -> Expr:
    return ONE if i == j else ZERO


@dataclass
class Residual:
    """``value`` = lhs - rhs; ``terms`` are the tensors whose magnitudes set the scale."""

    name: str
    value: DTensor
    terms: list[DTensor] = field(default_factory=list)
    report_only: bool = False


def _residual(name, lhs: DTensor, rhs: DTensor, extra=(), report_only=False) -> Residual:
    return Residual(name, (lhs - rhs).renamed(name), [lhs, rhs, *extra], report_only)


# ---------------------------------------------------------------------------
# deflections


@dataclass
class DeflectionSet:
    raw: dict[str, DTensor]
    metrical: dict[str, DTensor]
    closed: dict[str, DTensor]
    liouville: DTensor


def _raise_G(space: HamiltonSpace, X: DTensor, name: str) -> DTensor:
    """G^(i)(k)_(a)(c) X[c, k, ...]: the leading (T_UP, S_DN) pair becomes (S_UP, T_DN)."""
    m, n = space.dims
    G = vertical_metric(space)
    sig = (S_UP, T_DN) + X.signature[2:]

    def comp(i, a, *rest):
        return add(
            *(mul(G[i, k, a, c], X[(c, k) + rest]) for k in range(n) for c in range(m) if not G[i, k, a, c].is_zero())
        )

    return DTensor.build(name, sig, space.dims, comp)


@lru_cache(maxsize=64)
def deflection_tensors(space: HamiltonSpace) -> DeflectionSet:
    """Raw, metrical and closed-form deflections.

    Layouts: raw ``Delta_t[a, i, b]``, ``Delta_x[a, i, j]``,
    ``theta[a, i, j, b]`` = theta^(a)(j)_(i)(b); metrical ``Delta_t[i, a, b]``,
    ``Delta_x[i, a, j]``, ``theta[i, j, a, b]``; Liouville ``[i, a]``.
    """
    m, n = space.dims
    dims = space.dims
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    P = momentum_tensor(space)
    raw = {
        "Delta_t": covariant_derivative(space, cartan, P, "/", N).renamed("Delta^(a)_(i)b"),
        "Delta_x": covariant_derivative(space, cartan, P, "|", N).renamed("Delta^(a)_(i)j"),
        "theta": covariant_derivative(space, cartan, P, "v", N).renamed("theta^(a)(j)_(i)(b)"),
    }
    th = _raise_G(space, raw["theta"], "theta")  # [i, a, j, b]
    metrical = {
        "Delta_t": _raise_G(space, raw["Delta_t"], "Delta^(i)_(a)b"),
        "Delta_x": _raise_G(space, raw["Delta_x"], "Delta^(i)_(a)j"),
        "theta": DTensor.build(
            "theta^(i)(j)_(a)(b)", (S_UP, S_UP, T_DN, T_DN), dims, lambda i, j, a, b: th[i, a, j, b]
        ),
    }
    liouville = _raise_G(space, P, "p^(i)_(a)")

    h, g_inv = space.h, space.g_inv
    A, H, C = cartan.A, cartan.H, cartan.C
    closed = {}
    if m == 1:
        closed["Delta_t"] = DTensor.build(
            "Delta^(i)_(a)b",
            (S_UP, T_DN, T_DN),
            dims,
            lambda i, a, b: add(
                *(
                    mul(-1, h[0, 0], g_inv[i, k], A[r, k, 0], momentum(r, 0))
                    for k in range(n)
                    for r in range(n)
                )
            ),
        )
        closed["Delta_x"] = DTensor.build(
            "Delta^(i)_(a)j",
            (S_UP, T_DN, S_DN),
            dims,
            lambda i, a, j: add(
                *(
                    mul(
                        h[0, 0],
                        g_inv[i, k],
                        add(mul(-1, N.N2[0, k, j]), *(mul(-1, H[r, k, j], momentum(r, 0)) for r in range(n))),
                    )
                    for k in range(n)
                )
            ),
        )
        closed["theta"] = DTensor.build(
            "theta^(i)(j)_(a)(b)",
            (S_UP, S_UP, T_DN, T_DN),
            dims,
            lambda i, j, a, b: add(
                mul(h[0, 0], g_inv[i, j]),
                *(
                    mul(-1, h[0, 0], g_inv[i, k], C[r, j, k, 0], momentum(r, 0))
                    for k in range(n)
                    for r in range(n)
                ),
            ),
        )
    else:
        bullet = potential_bullet(space, spatial_christoffel(space))
        closed["Delta_t"] = DTensor.build(
            "Delta^(i)_(a)b",
            (S_UP, T_DN, T_DN),
            dims,
            lambda i, a, b: add(
                *(
                    mul(-1, h[a, c], g_inv[i, k], A[r, k, b], momentum(r, c))
                    for c in range(m)
                    for k in range(n)
                    for r in range(n)
                )
            ),
        )
        closed["Delta_x"] = DTensor.build(
            "Delta^(i)_(a)j",
            (S_UP, T_DN, S_DN),
            dims,
            lambda i, a, j: add(
                *(mul(Fraction(-1, 4), g_inv[i, k], bullet[k][a][j] + bullet[j][a][k]) for k in range(n))
            ),
        )
        closed["theta"] = DTensor.build(
            "theta^(i)(j)_(a)(b)", (S_UP, S_UP, T_DN, T_DN), dims, lambda i, j, a, b: mul(h[a, b], g_inv[i, j])
        )
    return DeflectionSet(raw, metrical, closed, liouville)


def deflection_residuals(space: HamiltonSpace) -> list[Residual]:
    d = deflection_tensors(space)
    m, n = space.dims
    out = [
        _residual(f"deflection.closed_form.{k}", d.metrical[k], d.closed[k]) for k in ("Delta_t", "Delta_x", "theta")
    ]
    if m >= 2:
        lv = DTensor.build(
            "p^(i)_(a)",
            (S_UP, T_DN),
            space.dims,
            lambda i, a: add(
                *(mul(space.h[a, b], space.g_inv[i, j], momentum(j, b)) for b in range(m) for j in range(n))
            ),
        )
        out.append(_residual("deflection.liouville", d.liouville, lv))
    return out


# ---------------------------------------------------------------------------
# deflection identities and curvature antisymmetry


def deflection_identities(space: HamiltonSpace, opposite_sign: bool = False) -> list[Residual]:
    """Ricci identities for the raw deflections (commutators of covariant
    derivatives applied to p_i^a).

    The curvature term is the v-block mirror contracted with p, so the
    identities also verify the mirror cells. For the spatial block this is
    -p_r^d R^r_p.., the sign forced by R^(f)_(r)ij = -Rfrak^k_rij p_k^f on
    Levi-Civita data. ``opposite_sign=True`` flips that term.
    """
    m, n = space.dims
    dims = space.dims
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    tors = torsion_components(space)
    curv = curvature_components(space)
    d = deflection_tensors(space)
    Dt, Dx, th = d.raw["Delta_t"], d.raw["Delta_x"], d.raw["theta"]
    T = tors["T^r_aj"]
    R_tt, R_tx, R_xx = tors["R^(f)_(r)ab"], tors["R^(f)_(r)aj"], tors["R^(f)_(r)ij"]
    P_x = tors["P^(f)(j)_(r)i(b)"]
    C = cartan.C
    s = -1 if opposite_sign else 1
    suffix = ".opposite_sign" if opposite_sign else ""

    def cov(X, kind):
        return covariant_derivative(space, cartan, X, kind, N)

    if m == 1:
        M_bk, M_jk, M_p = curv["-vR^l_ibk"], curv["-vR^l_ijk"], curv["-vP^l(k)_ij(c)"]

        def curv_bk(dd, p, b, k):
            return [mul(momentum(r, dd), M_bk[r, p, b, k]) for r in range(n)]

        def curv_jk(dd, p, j, k):
            return [mul(momentum(r, dd), M_jk[r, p, j, k]) for r in range(n)]

        def curv_p(dd, p, j, k, c):
            return [mul(momentum(r, dd), M_p[r, k, p, j, c]) for r in range(n)]

    else:
        M_bc, M_bk, M_jk = curv["-vR^(d)(i)_(l)(a)bc"], curv["-vR^(d)(i)_(l)(a)bk"], curv["-vR^(d)(l)_(i)(a)jk"]
        P_ij = curv["P^l(k)_ij(c)"]

        def curv_bk(dd, p, b, k):
            return [mul(momentum(i, a), M_bk[dd, i, p, a, b, k]) for i in range(n) for a in range(m)]

        def curv_jk(dd, p, j, k):
            return [mul(momentum(l, a), M_jk[dd, l, p, a, j, k]) for l in range(n) for a in range(m)]

        def curv_p(dd, p, j, k, c):
            return [mul(-1, momentum(r, dd), P_ij[r, k, p, j, c]) for r in range(n)]

    out = []
    if m >= 2:
        # (d0) layout [d, l, b, c]
        Dt_t = cov(Dt, "/")
        lhs0 = Dt_t - _swap_last(Dt_t)
        rhs0 = DTensor.build(
            "rhs",
            lhs0.signature,
            dims,
            lambda dd, l, b, c: add(
                *(mul(s, momentum(i, a), M_bc[dd, i, l, a, b, c]) for i in range(n) for a in range(m)),
                *(mul(-1, th[dd, l, r, f], R_tt[f, r, b, c]) for r in range(n) for f in range(m)),
            ),
        )
        out.append(_residual("deflection_identity.d0" + suffix, lhs0, rhs0))
    # (d1) layout [d, p, b, k]
    lhs1 = cov(Dt, "|") - _swap_last(cov(Dx, "/"))
    rhs1 = DTensor.build(
        "rhs",
        lhs1.signature,
        dims,
        lambda dd, p, b, k: add(
            *(mul(s, e) for e in curv_bk(dd, p, b, k)),
            *(mul(-1, Dx[dd, p, r], T[r, b, k]) for r in range(n)),
            *(mul(-1, th[dd, p, r, f], R_tx[f, r, b, k]) for r in range(n) for f in range(m)),
        ),
    )
    # (d2) layout [d, p, j, k]
    Dx_x = cov(Dx, "|")
    lhs2 = Dx_x - _swap_last(Dx_x)
    rhs2 = DTensor.build(
        "rhs",
        lhs2.signature,
        dims,
        lambda dd, p, j, k: add(
            *(mul(s, e) for e in curv_jk(dd, p, j, k)),
            *(mul(-1, th[dd, p, r, f], R_xx[f, r, j, k]) for r in range(n) for f in range(m)),
        ),
    )
    # (d3) layout [d, p, j, k, c]
    Dx_v = cov(Dx, "v")  # [d, p, j, k, c]
    th_x = cov(th, "|")  # [d, p, k, c, j]
    lhs3 = DTensor.build(
        "lhs", Dx_v.signature, dims, lambda dd, p, j, k, c: Dx_v[dd, p, j, k, c] - th_x[dd, p, k, c, j]
    )
    rhs3 = DTensor.build(
        "rhs",
        lhs3.signature,
        dims,
        lambda dd, p, j, k, c: add(
            *(mul(s, e) for e in curv_p(dd, p, j, k, c)),
            *(mul(-1, Dx[dd, p, r], C[r, k, j, c]) for r in range(n)),
            *(mul(-1, th[dd, p, r, f], P_x[f, k, r, j, c]) for r in range(n) for f in range(m)),
        ),
    )
    out += [
        _residual("deflection_identity.d1" + suffix, lhs1, rhs1),
        _residual("deflection_identity.d2" + suffix, lhs2, rhs2),
        _residual("deflection_identity.d3" + suffix, lhs3, rhs3),
    ]
    return out


def _swap_last(X: DTensor) -> DTensor:
    """Exchange the last two index positions (same extents required)."""
    sig = X.signature[:-2] + (X.signature[-1], X.signature[-2])
    return DTensor.build(X.name, sig, X.dims, lambda *idx: X[idx[:-2] + (idx[-1], idx[-2])])


def antisymmetry_residuals(space: HamiltonSpace) -> list[Residual]:
    """g^ir K^j_r.. + g^jr K^i_r.. = 0 for the three curvature families."""
    n = space.n
    curv = curvature_components(space)
    gi = space.g_inv
    out = []
    for name, cell in (
        ("R^l_ibk", curv["R^l_ibk"]),
        ("R^l_ijk", curv["R^l_ijk"]),
        ("P^l(k)_ij(c)", curv["P^l(k)_ij(c)"]),
    ):
        # cell layout [l, i, ...]; for P the second slot is the (k) index, shift past it
        if name.startswith("P"):

            def comp(i, j, k, l, c, cell=cell):
                a = add(*(mul(gi[i, r], cell[j, l, r, k, c]) for r in range(n)))
                b = add(*(mul(gi[j, r], cell[i, l, r, k, c]) for r in range(n)))
                return a, b

            sig = (S_UP, S_UP, S_DN, S_UP, T_DN)
        else:

            def comp(i, j, x, y, cell=cell):
                a = add(*(mul(gi[i, r], cell[j, r, x, y]) for r in range(n)))
                b = add(*(mul(gi[j, r], cell[i, r, x, y]) for r in range(n)))
                return a, b

            sig = (S_UP, S_UP) + cell.signature[2:]
        first = DTensor.build("first", sig, space.dims, lambda *idx, comp=comp: comp(*idx)[0])
        second = DTensor.build("second", sig, space.dims, lambda *idx, comp=comp: mul(-1, comp(*idx)[1]))
        out.append(_residual(f"antisymmetry.{name}", first, second))
    return out


# ---------------------------------------------------------------------------
# electromagnetic field


@dataclass
class EMField:
    F: DTensor  # [i, a, j]
    f: DTensor  # [i, j, a, b]
    F_closed: DTensor


@lru_cache(maxsize=64)
def em_field(space: HamiltonSpace, inverse_prefactor: bool = False) -> EMField:
    """F and f by antisymmetrizing the metrical deflections, plus the branch
    closed form of F. For m = 1 the closed form carries h_11 / 2, the factor
    the deflection closed form implies; ``inverse_prefactor=True`` uses
    h^11 / 2 instead.
    """
    m, n = space.dims
    dims = space.dims
    d = deflection_tensors(space)
    Dx, th = d.metrical["Delta_x"], d.metrical["theta"]
    F = DTensor.build(
        "F^(i)_(a)j", (S_UP, T_DN, S_DN), dims, lambda i, a, j: mul(HALF, Dx[i, a, j] - Dx[j, a, i])
    )
    f = DTensor.build(
        "f^(i)(j)_(a)(b)",
        (S_UP, S_UP, T_DN, T_DN),
        dims,
        lambda i, j, a, b: mul(HALF, th[i, j, a, b] - th[j, i, a, b]),
    )
    g_inv = space.g_inv
    if m == 1:
        N = nonlinear_connection(space)
        H = cartan_connection(space).H

        def closed(i, a, j):
            terms = []
            for k in range(n):
                terms.append(mul(g_inv[j, k], N.N2[0, k, i]))
                terms.append(mul(-1, g_inv[i, k], N.N2[0, k, j]))
                for r in range(n):
                    terms.append(mul(g_inv[j, k], H[r, k, i], momentum(r, 0)))
                    terms.append(mul(-1, g_inv[i, k], H[r, k, j], momentum(r, 0)))
            return mul(HALF, space.h_inv[0, 0] if inverse_prefactor else space.h[0, 0], add(*terms))

    else:
        bullet = potential_bullet(space, spatial_christoffel(space))

        def closed(i, a, j):
            terms = []
            for k in range(n):
                terms.append(mul(g_inv[j, k], bullet[k][a][i]))
                terms.append(mul(-1, g_inv[i, k], bullet[k][a][j]))
                terms.append(mul(g_inv[j, k], bullet[i][a][k]))
                terms.append(mul(-1, g_inv[i, k], bullet[j][a][k]))
            return mul(Fraction(1, 8), add(*terms))

    F_closed = DTensor.build("F^(i)_(a)j", F.signature, dims, closed)
    return EMField(F, f, F_closed)


def em_residuals(space: HamiltonSpace) -> list[Residual]:
    em = em_field(space)
    variant = []
    if space.m == 1:
        alt = em_field(space, inverse_prefactor=True)
        variant.append(_residual("em.closed_form.inverse_prefactor", em.F, alt.F_closed, report_only=True))
    zero_f = DTensor.zeros("0", em.f.signature, space.dims)
    swapped = DTensor.build("F_swapped", em.F.signature, space.dims, lambda i, a, j: mul(-1, em.F[j, a, i]))
    return [
        _residual("em.closed_form", em.F, em.F_closed),
        _residual("em.F_antisymmetry", em.F, swapped),
        _residual("em.f_vanishes", em.f, zero_f),
        *variant,
    ]


# ---------------------------------------------------------------------------
# Maxwell-like equations


def maxwell_residuals(space: HamiltonSpace, sign: int = -1, tensorial: bool = False) -> list[Residual]:
    """The three Maxwell-like groups of the active branch.

    Derivatives of F are taken through its definition, F|X = 1/2 (Delta^(i)_(a)j|X
    - Delta^(j)_(a)i|X), which is how the groups follow from the metrical
    deflection identities. ``tensorial=True`` differentiates F as a d-tensor
    with one upper and one lower spatial index instead; the two agree only
    when the connection coefficients of that direction vanish.

    ``sign`` fixes the curvature-Liouville terms: -1 gives -R^i_r.. p^(r)_(a)
    in groups one and two and +P^i(k)_rj(1) p^(r)_(1) in group three, the
    signs the Ricci identities produce; +1 flips all of them.
    """
    m, n = space.dims
    dims = space.dims
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    tors = torsion_components(space)
    curv = curvature_components(space)
    d = deflection_tensors(space)
    F = em_field(space).F
    Dt, Dx, th = d.metrical["Delta_t"], d.metrical["Delta_x"], d.metrical["theta"]
    pl = d.liouville
    T, R_tx, R_xx = tors["T^r_aj"], tors["R^(f)_(r)aj"], tors["R^(f)_(r)ij"]
    R_ibk, R_ijk = curv["R^l_ibk"], curv["R^l_ijk"]
    suffix = (".tensorial" if tensorial else "") + (".opposite_sign" if sign > 0 else "")

    def cov(X, kind):
        return covariant_derivative(space, cartan, X, kind, N)

    def F_derivative(kind):
        """Layout [i, a, j, <derivative slots>]."""
        if tensorial:
            return cov(F, kind)
        D = cov(Dx, kind)
        return DTensor.build(
            "F", D.signature, dims, lambda i, a, j, *rest: mul(HALF, D[(i, a, j) + rest] - D[(j, a, i) + rest])
        )

    # group 1, layout [i, a, k, b]
    F_t = F_derivative("/")
    Dt_x = cov(Dt, "|")  # [i, a, b, k]

    def e1(i, a, k, b):
        return add(
            Dt_x[i, a, b, k],
            *(mul(Dx[i, a, r], T[r, b, k]) for r in range(n)),
            *(mul(th[i, r, a, f], R_tx[f, r, b, k]) for r in range(n) for f in range(m)),
            *(mul(sign, R_ibk[i, r, b, k], pl[r, a]) for r in range(n)),
        )

    rhs1 = DTensor.build("rhs", F_t.signature, dims, lambda i, a, k, b: mul(HALF, e1(i, a, k, b) - e1(k, a, i, b)))

    # group 2, layout [i, a, j, k]
    F_x = F_derivative("|")

    def e2(i, a, j, k):
        return add(
            *(mul(th[i, r, a, f], R_xx[f, r, j, k]) for r in range(n) for f in range(m)),
            *(mul(sign, R_ijk[i, r, j, k], pl[r, a]) for r in range(n)),
        )

    lhs2 = DTensor.build(
        "lhs", F_x.signature, dims, lambda i, a, j, k: F_x[i, a, j, k] + F_x[j, a, k, i] + F_x[k, a, i, j]
    )
    rhs2 = DTensor.build(
        "rhs",
        F_x.signature,
        dims,
        lambda i, a, j, k: mul(-HALF, e2(i, a, j, k) + e2(j, a, k, i) + e2(k, a, i, j)),
    )

    # group 3, layout [i, a, j, k, c]
    F_v = F_derivative("v")
    if m == 1:
        th_x = cov(th, "|")  # [i, k, a, b, j]
        P_ij = curv["P^l(k)_ij(c)"]
        P_x = tors["P^(f)(j)_(r)i(b)"]
        C = cartan.C

        def e3(i, j, k):
            return add(
                th_x[i, k, 0, 0, j],
                *(mul(-sign, P_ij[i, k, r, j, 0], pl[r, 0]) for r in range(n)),
                *(mul(-1, Dx[i, 0, r], C[r, k, j, 0]) for r in range(n)),
                *(mul(-1, th[i, r, 0, 0], P_x[0, k, r, j, 0]) for r in range(n)),
            )

        lhs3 = F_v
        rhs3 = DTensor.build(
            "rhs", F_v.signature, dims, lambda i, a, j, k, c: mul(HALF, e3(i, j, k) - e3(j, i, k))
        )
        name3 = "maxwell.3.vertical"
    else:
        lhs3 = DTensor.build(
            "lhs",
            F_v.signature,
            dims,
            lambda i, a, j, k, c: F_v[i, a, j, k, c] + F_v[j, a, k, i, c] + F_v[k, a, i, j, c],
        )
        rhs3 = DTensor.zeros("0", F_v.signature, dims)
        name3 = "maxwell.3.vertical_cyclic"
    return [
        _residual("maxwell.1.temporal" + suffix, F_t, rhs1),
        _residual("maxwell.2.spatial_cyclic" + suffix, lhs2, rhs2, extra=[F_x]),
        _residual(name3 + suffix, lhs3, rhs3, extra=[F_v]),
    ]


# ---------------------------------------------------------------------------
# Einstein-like equations


@dataclass
class EinsteinReport:
    kappa: float
    lhs: dict[str, DTensor]
    stress_energy: dict[str, DTensor]
    compatibility: dict[str, DTensor]
    block_metric: dict[str, DTensor]


def block_metric(space: HamiltonSpace) -> dict[str, DTensor]:
    """Diagonal blocks of the inverse adapted metric G^AB."""
    m, n = space.dims
    dims = space.dims
    return {
        "h^ab": DTensor.build("G^ab", (T_UP, T_UP), dims, lambda a, b: space.h_inv[a, b]),
        "g^ij": DTensor.build("G^ij", (S_UP, S_UP), dims, lambda i, j: space.g_inv[i, j]),
        "h^ab g_ij": DTensor.build(
            "G^(a)(b)_(i)(j)", (T_UP, T_UP, S_DN, S_DN), dims, lambda a, b, i, j: mul(space.h_inv[a, b], space.g[i, j])
        ),
    }


def einstein_blocks(space: HamiltonSpace, kappa: float = 1.0) -> EinsteinReport:
    if kappa == 0:
        raise SpaceError("invalid_field", "the Einstein constant kappa must be nonzero", "kappa")
    m, n = space.dims
    dims = space.dims
    ric = ricci_and_scalar(space)
    Sc = scalar(ric["Sc"])
    half_sc = mul(HALF, Sc)
    h, g, g_inv = space.h, space.g, space.g_inv
    lhs: dict[str, DTensor] = {}
    if m == 1:
        S = ric["S^(i)(j)_(a)(b)"]
        lhs["T_ab"] = DTensor.build("T_ab", (T_DN, T_DN), dims, lambda a, b: mul(-1, half_sc, h[a, b]))
        lhs["T_ij"] = DTensor.build(
            "T_ij", (S_DN, S_DN), dims, lambda i, j: ric["R_ij"][i, j] - mul(half_sc, g[i, j])
        )
        lhs["T^(i)(j)_(a)(b)"] = DTensor.build(
            "T^(i)(j)_(a)(b)",
            (S_UP, S_UP, T_DN, T_DN),
            dims,
            lambda i, j, a, b: mul(-1, S[i, j, a, b]) - mul(half_sc, h[a, b], g_inv[i, j]),
        )
    else:
        chi_ab = ric["chi_ab"]
        lhs["T_ab"] = DTensor.build(
            "T_ab", (T_DN, T_DN), dims, lambda a, b: chi_ab[a, b] - mul(half_sc, h[a, b])
        )
        lhs["T_ij"] = DTensor.build(
            "T_ij", (S_DN, S_DN), dims, lambda i, j: ric["R_ij"][i, j] - mul(half_sc, g[i, j])
        )
        lhs["T^(i)(j)_(a)(b)"] = DTensor.build(
            "T^(i)(j)_(a)(b)",
            (S_UP, S_UP, T_DN, T_DN),
            dims,
            lambda i, j, a, b: mul(-1, half_sc, h[a, b], g_inv[i, j]),
        )
    lhs["T_ia"] = ric["R_ia"].renamed("T_ia")
    lhs["T_i(b)^(j)"] = ric["R_i(b)^(j)"].renamed("T_i(b)^(j)")
    lhs["T^(i)_(a)b"] = ric["R_(a)b^(i)"].renamed("T^(i)_(a)b")
    lhs["T^(i)_(a)j"] = ric["R_(a)j^(i)"].renamed("T^(i)_(a)j")

    compatibility = {
        "T_ai": ric["R_ai"].renamed("T_ai"),
        "T_a(b)^(j)": ric["R_a(b)^(j)"].renamed("T_a(b)^(j)"),
    }
    if m >= 2:
        for key in ("T^(i)_(a)b", "T_i(b)^(j)", "T^(i)_(a)j"):
            compatibility[key] = lhs.pop(key)
    inv = 1.0 / kappa
    scale = ONE if kappa == 1 else Fraction(inv).limit_denominator(10**12)
    stress = {k: v.map(lambda e: mul(scale, e)) for k, v in lhs.items()}
    return EinsteinReport(float(kappa), lhs, stress, compatibility, block_metric(space))


def einstein_residuals(space: HamiltonSpace, kappa: float = 1.0) -> list[Residual]:
    rep = einstein_blocks(space, kappa)
    out = []
    for k, t in rep.compatibility.items():
        out.append(_residual(f"einstein.compatibility.{k}", t, DTensor.zeros("0", t.signature, space.dims)))
    ric = ricci_and_scalar(space)
    sc = scalar(ric["Sc"])
    # G^AB R_AB over the three diagonal blocks reproduces the branch formula for Sc
    m, n = space.dims
    chi_ab, R_ij, R_v = ric["chi_ab"], ric["R_ij"], ric["R_(a)(b)^(i)(j)"]
    trace = add(
        *(mul(space.h_inv[a, b], chi_ab[a, b]) for a in range(m) for b in range(m)),
        *(mul(space.g_inv[i, j], R_ij[i, j]) for i in range(n) for j in range(n)),
        *(
            mul(space.h_inv[a, b], space.g[i, j], R_v[i, j, a, b])
            for a in range(m)
            for b in range(m)
            for i in range(n)
            for j in range(n)
        ),
    )
    as_t = lambda e, name: DTensor.build(name, (), space.dims, lambda: e)  # noqa: E731
    out.append(_residual("einstein.scalar_trace", as_t(sc, "Sc"), as_t(trace, "trace")))
    T_ij = rep.lhs["T_ij"]
    out.append(
        _residual(
            "einstein.spatial_symmetry",
            T_ij,
            DTensor.build("T_ji", T_ij.signature, space.dims, lambda i, j: T_ij[j, i]),
            report_only=True,
        )
    )
    return out


# ---------------------------------------------------------------------------
# conservation laws


@dataclass
class ConservationReport:
    laws: list[Residual]
    auxiliaries: dict[str, DTensor]


def conservation_residuals(space: HamiltonSpace) -> ConservationReport:
    m, n = space.dims
    dims = space.dims
    N = nonlinear_connection(space)
    cartan = cartan_connection(space)
    ric = ricci_and_scalar(space)
    Sc = scalar(ric["Sc"])
    half_sc = mul(HALF, Sc)
    h_inv, g, g_inv = space.h_inv, space.g, space.g_inv
    report_only = not space.bianchi_expected

    def cov(X, kind):
        return covariant_derivative(space, cartan, X, kind, N)

    R_j = DTensor.build(
        "R^i_j", (S_UP, S_DN), dims, lambda i, j: add(*(mul(g_inv[i, q], ric["R_ij"][q, j]) for q in range(n)))
    )
    R_b = DTensor.build(
        "R^i_b", (S_UP, T_DN), dims, lambda i, b: add(*(mul(g_inv[i, q], ric["R_ia"][q, b]) for q in range(n)))
    )
    aux = {"R^i_j": R_j, "R^i_b": R_b}
    # spatial law, shared shape in both branches: [R^r_j - Sc/2 delta^r_j]_|r
    E_x = DTensor.build("E^r_j", (S_UP, S_DN), dims, lambda r, j: R_j[r, j] - mul(half_sc, _delta(r, j)))
    div_x = contract(cov(E_x, "|"), 0, 2, "div")  # [j]

    if m >= 2:
        chi_fb = DTensor.build(
            "chi^f_b",
            (T_UP, T_DN),
            dims,
            lambda f, b: add(*(mul(h_inv[f, c], ric["chi_ab"][c, b]) for c in range(m))),
        )
        aux["chi^f_b"] = chi_fb
        E_t = DTensor.build("E^f_b", (T_UP, T_DN), dims, lambda f, b: chi_fb[f, b] - mul(half_sc, _delta(f, b)))
        lhs1 = contract(cov(E_t, "/"), 0, 2, "lhs")  # [b]
        rhs1 = contract(cov(R_b, "|"), 0, 2, "rhs").map(lambda e: mul(-1, e))
        laws = [
            _residual("conservation.temporal", lhs1, rhs1, report_only=report_only),
            _residual("conservation.spatial", div_x, DTensor.zeros("0", div_x.signature, dims), report_only=report_only),
        ]
        return ConservationReport(laws, aux)

    h11inv = h_inv[0, 0]
    P_a1 = ric["P^(i)_(a)b"]  # [i, a, b]
    P_aj = ric["P^(i)_(a)j"]  # [i, a, j]
    P_ib = ric["P_i(b)^(j)"]  # [i, j, b]
    S_ab = ric["S^(i)(j)_(a)(b)"]  # [i, j, a, b]
    # lowered/raised auxiliaries
    P1_i1 = DTensor.build(
        "P^(1)_(i)1",
        (T_UP, S_DN, T_DN),
        dims,
        lambda a, i, b: add(*(mul(h11inv, g[i, q], P_a1[q, a, b]) for q in range(n))),
    )
    P1_ij = DTensor.build(
        "P^(1)_(i)j",
        (T_UP, S_DN, S_DN),
        dims,
        lambda a, i, j: add(*(mul(h11inv, g[i, q], P_aj[q, a, j]) for q in range(n))),
    )
    P_i_j = DTensor.build(
        "P^i(j)_(1)",
        (S_UP, S_UP, T_DN),
        dims,
        lambda i, j, b: add(*(mul(g_inv[i, q], P_ib[q, j, b]) for q in range(n))),
    )
    S1 = DTensor.build(
        "S^(1)(j)_(i)(1)",
        (T_UP, S_UP, S_DN, T_DN),
        dims,
        lambda a, j, i, b: add(*(mul(h11inv, g[i, q], S_ab[q, j, a, b]) for q in range(n))),
    )
    aux.update({"P^(1)_(i)1": P1_i1, "P^(1)_(i)j": P1_ij, "P^i(j)_(1)": P_i_j, "S^(1)(j)_(i)(1)": S1})

    # law 1: [Sc/2]_/1 = R^r_1|r - P^(1)_(r)1|^(r)_(1)
    half = DTensor.build("Sc/2", (), dims, lambda: half_sc)
    lhs1 = cov(half, "/")  # [1]
    Rb_x = cov(R_b, "|")  # [r, 1, k]
    P1_v = cov(P1_i1, "v")  # [1, r, 1, k, c]
    rhs1 = DTensor.build(
        "rhs",
        lhs1.signature,
        dims,
        lambda b: add(
            *(Rb_x[r, b, r] for r in range(n)),
            *(mul(-1, P1_v[0, r, b, r, 0]) for r in range(n)),
        ),
    )
    # law 2: [R^r_j - Sc/2 delta]_|r = P^(1)_(r)j|^(r)_(1)
    P1j_v = cov(P1_ij, "v")  # [1, r, j, k, c]
    rhs2 = DTensor.build("rhs", div_x.signature, dims, lambda j: add(*(P1j_v[0, r, j, r, 0] for r in range(n))))
    # law 3: [S^(1)(j)_(r)(1) + Sc/2 delta^j_r]|^(r)_(1) = -P^r(j)_(1)|r
    E_v = DTensor.build(
        "E", S1.signature, dims, lambda a, j, r, b: S1[a, j, r, b] + mul(half_sc, _delta(j, r))
    )
    Ev_v = cov(E_v, "v")  # [1, j, r, 1, k, c]
    lhs3 = DTensor.build(
        "lhs", (S_UP,), dims, lambda j: add(*(Ev_v[0, j, r, 0, r, 0] for r in range(n)))
    )
    Pij_x = cov(P_i_j, "|")  # [r, j, 1, k]
    rhs3 = DTensor.build(
        "rhs", (S_UP,), dims, lambda j: add(*(mul(-1, Pij_x[r, j, 0, r]) for r in range(n)))
    )
    laws = [
        _residual("conservation.temporal", lhs1, rhs1, report_only=report_only),
        _residual("conservation.spatial", div_x, rhs2, report_only=report_only),
        _residual("conservation.vertical", lhs3, rhs3, report_only=report_only),
    ]
    return ConservationReport(laws, aux)
