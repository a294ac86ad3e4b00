import math

import numpy as np
import pytest
from conftest import env_at, momenta, sample_env, value

from jetgeom.expr import Evaluator, VarRef
from jetgeom.fields import (
    conservation_residuals,
    deflection_identities,
    deflection_residuals,
    deflection_tensors,
    einstein_blocks,
    einstein_residuals,
    em_field,
    em_residuals,
    maxwell_residuals,
)
from jetgeom.space import SpaceError
from jetgeom.verify import oracle_christoffel


def max_abs(arr):
    return float(np.max(np.abs(arr))) if np.size(arr) else 0.0


def worst(residuals, env):
    return {r.name: max_abs(value(r.value, env)) for r in residuals}


def matrix(mat, env, count):
    ev = Evaluator(env)
    return np.array([[np.broadcast_to(np.asarray(ev(e), float), (count,)) for e in row] for row in mat])


@pytest.mark.parametrize("name", ["flat2x2", "sphere2", "timewarp", "gravitational", "sphere3_u"])
def test_vertical_deflection_is_the_vertical_metric(name, spaces):
    sp = spaces(name)
    theta = deflection_tensors(sp).metrical["theta"]
    for (i, j, a, b), e in theta.entries():
        assert (e - sp.h[a, b] * sp.g_inv[i, j]).is_zero() or max_abs(
            value_expr(e - sp.h[a, b] * sp.g_inv[i, j], sample_env(sp))
        ) == 0.0


def value_expr(e, env):
    return np.asarray(Evaluator(env)(e), dtype=float)


def test_spatial_deflection_vanishes_without_potential(spaces):
    sp = spaces("sphere2")
    assert max_abs(value(deflection_tensors(sp).metrical["Delta_x"], sample_env(sp))) < 1e-12


def test_timewarp_temporal_deflection(spaces):
    # Delta^(i)_(a)1 = -h_ac g^ik p^c_k since A^r_k1 = delta^r_k
    sp = spaces("timewarp")
    env = sample_env(sp)
    D = value(deflection_tensors(sp).metrical["Delta_t"], env)  # [i, a, b, s]
    h, ginv, p = matrix(sp.h, env, 50), matrix(sp.g_inv, env, 50), momenta(sp, env)
    want = -np.einsum("acs,iks,kcs->ias", h, ginv, p)
    assert max_abs(D[:, :, 0] - want) < 1e-10


@pytest.mark.parametrize("name", ["m1sphere", "m1finsler", "sphere2_u", "timewarp", "sphere3_u"])
def test_deflection_closed_forms(name, spaces):
    sp = spaces(name)
    for key, v in worst(deflection_residuals(sp), sample_env(sp)).items():
        assert v < 1e-9, key


def test_em_vanishes_without_potential(spaces):
    for name in ("flat2x2", "sphere2", "timewarp", "gravitational"):
        sp = spaces(name)
        em = em_field(sp)
        assert max_abs(value(em.F, sample_env(sp))) < 1e-12, name


@pytest.mark.parametrize("name", ["flat2x2", "sphere2_u", "m1sphere", "m1finsler", "sphere3_u"])
def test_vertical_em_component_vanishes(name, spaces):
    sp = spaces(name)
    assert max_abs(value(em_field(sp).f, sample_env(sp))) < 1e-12


def independent_F(space, x1, x2, a=0):
    """1/8 [g^jk U_ka.i - g^ik U_ka.j + g^jk U_ia.k - g^ik U_ja.k] from numeric
    Christoffels and finite differences of the lowered potential."""
    n = space.n
    base = env_at(space, x1=x1, x2=x2)
    xs = [VarRef.x(i + 1) for i in range(n)]

    def lowered(env):
        g = np.linalg.inv(matrix(space.g_inv, env, 1)[:, :, 0])
        U = matrix(space.U, env, 1)[:, :, 0]
        return g @ U[:, a]

    env1 = {k: np.array([v]) for k, v in base.items()}
    gam = oracle_christoffel(space, env1, 1)[0][0]
    h = 1e-5
    dU = np.empty((n, n))  # dU[k, i] = d U_ka / d x^i
    for i, x in enumerate(xs):
        plus, minus = dict(env1), dict(env1)
        plus[x] = env1[x] + h
        minus[x] = env1[x] - h
        dU[:, i] = (lowered(plus) - lowered(minus)) / (2 * h)
    Ul = lowered(env1)
    bullet = dU - np.einsum("s,ski->ki", Ul, gam)  # U_ka.i
    ginv = matrix(space.g_inv, env1, 1)[:, :, 0]
    F = np.einsum("jk,ki->ij", ginv, bullet) - np.einsum("ik,kj->ij", ginv, bullet)
    F += np.einsum("jk,ik->ij", ginv, bullet) - np.einsum("ik,jk->ij", ginv, bullet)
    return F / 8


def test_sphere_potential_em_component(spaces):
    sp = spaces("sphere2_u")
    F = value(em_field(sp).F, env_at(sp, x1=0.7, x2=0.4))
    assert abs(F[0, 0, 1] - 1 / math.tan(0.7) ** 2 / 8) < 1e-12
    assert abs(F[0, 0, 1] - independent_F(sp, 0.7, 0.4)[0, 1]) < 1e-8
    assert abs(F[0, 0, 1] + F[1, 0, 0]) < 1e-15


def test_single_time_em_prefactor(spaces):
    # the closed form consistent with the deflections carries h_11, not h^11
    sp = spaces("m1finsler")
    res = worst(em_residuals(sp), sample_env(sp))
    assert res["em.closed_form"] < 1e-9
    assert res["em.closed_form.inverse_prefactor"] > 1e-3


@pytest.mark.parametrize("name", ["sphere2_u", "m1sphere", "m1finsler", "sphere3_u", "timewarp"])
def test_maxwell_groups(name, spaces):
    sp = spaces(name)
    res = worst(maxwell_residuals(sp), sample_env(sp, 100))
    assert len(res) == 3
    for key, v in res.items():
        assert v < 1e-8, key


def test_flat_maxwell_residuals_are_exactly_zero(spaces):
    sp = spaces("flat2x2")
    assert set(worst(maxwell_residuals(sp), sample_env(sp)).values()) == {0.0}


def test_multi_time_vertical_group_is_trivial(spaces):
    sp = spaces("sphere2_u")
    res = worst(maxwell_residuals(sp), sample_env(sp))
    assert res["maxwell.3.vertical_cyclic"] < 1e-12


def test_curvature_term_sign_is_discriminated(spaces):
    # the Ricci identities fix the sign of the curvature-momentum terms
    sp = spaces("m1finsler")
    env = sample_env(sp)
    flipped = worst(maxwell_residuals(sp, sign=1), env)
    assert flipped["maxwell.1.temporal.opposite_sign"] > 1e-3
    assert flipped["maxwell.3.vertical.opposite_sign"] > 1e-3
    for key, v in worst(deflection_identities(sp), env).items():
        assert v < 1e-8, key
    assert max(worst(deflection_identities(sp, opposite_sign=True), env).values()) > 1e-3
    sp = spaces("timewarp")
    assert worst(deflection_identities(sp, opposite_sign=True), sample_env(sp))[
        "deflection_identity.d0.opposite_sign"
    ] > 1e-3


def test_unit_sphere_einstein_blocks(spaces):
    sp = spaces("sphere2")
    rep = einstein_blocks(sp, 1.0)
    env = sample_env(sp)
    h, ginv = matrix(sp.h, env, 50), matrix(sp.g_inv, env, 50)
    T = {k: value(t, env) for k, t in rep.stress_energy.items()}
    assert max_abs(T["T_ij"]) < 1e-8
    assert max_abs(T["T_ab"] + h) < 1e-10
    assert max_abs(T["T^(i)(j)_(a)(b)"] + np.einsum("abs,ijs->ijabs", h, ginv)) < 1e-10


def test_kappa_scales_stress_energy(spaces):
    sp = spaces("sphere2")
    env = sample_env(sp)
    one = value(einstein_blocks(sp, 1.0).stress_energy["T_ab"], env)
    two = value(einstein_blocks(sp, 2.0).stress_energy["T_ab"], env)
    assert max_abs(one - 2 * two) < 1e-12
    with pytest.raises(SpaceError):
        einstein_blocks(sp, 0.0)


def test_timewarp_compatibility_blocks(spaces):
    sp = spaces("timewarp")
    env = sample_env(sp)
    rep = einstein_blocks(sp)
    assert len(rep.compatibility) == 5
    for key, t in rep.compatibility.items():
        assert max_abs(value(t, env)) < 1e-10, key
    assert max(worst(einstein_residuals(sp), env).values()) < 1e-9


@pytest.mark.parametrize("name", ["flat2x2", "sphere2", "gravitational"])
def test_conservation_on_riemannian_products(name, spaces):
    sp = spaces(name)
    rep = conservation_residuals(sp)
    assert len(rep.laws) == 2
    for r in rep.laws:
        assert not r.report_only
    for key, v in worst(rep.laws, sample_env(sp)).items():
        assert v < 1e-8, key


def test_timewarp_conservation_is_report_only(spaces):
    rep = conservation_residuals(spaces("timewarp"))
    assert [r.report_only for r in rep.laws] == [True, True]
