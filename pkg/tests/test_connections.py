import math

import numpy as np
import pytest
from conftest import env_at, sample_env, value
from hypothesis import given, settings
from hypothesis import strategies as st

from jetgeom.connections import (
    cartan_connection,
    delta_t,
    delta_x,
    momentum,
    nonlinear_connection,
    spatial_christoffel,
    temporal_christoffel,
    vertical_metric,
)
from jetgeom.expr import VarRef, diff, parse_expr
from jetgeom.space import load_space
from jetgeom.verify import oracle_christoffel


def max_abs(arr):
    return float(np.max(np.abs(arr))) if np.size(arr) else 0.0


def test_flat_christoffels_vanish(spaces):
    sp = spaces("flat2x2")
    assert temporal_christoffel(sp).is_symbolically_zero()
    assert spatial_christoffel(sp).is_symbolically_zero()


def test_exponential_single_time_christoffel(spaces):
    # h_11 = exp(2 t1): chi = (1/2) h^11 d h_11/dt = 1
    sp = spaces("m1finsler")
    chi = temporal_christoffel(sp).simplified()
    assert chi[0, 0, 0].is_const() and abs(chi[0, 0, 0].value - 1.0) < 1e-12


def test_temporal_christoffel_symmetry(spaces):
    sp = spaces("timewarp")
    chi = value(temporal_christoffel(sp), sample_env(sp))
    assert max_abs(chi - chi.transpose(0, 2, 1, 3)) < 1e-14


def test_sphere_christoffels_analytic_and_oracle(spaces):
    sp = spaces("sphere2")
    env = env_at(sp, x1=0.7)
    gamma = value(spatial_christoffel(sp), env)
    s, c = math.sin(0.7), math.cos(0.7)
    assert abs(gamma[0, 1, 1] - (-s * c)) < 1e-12
    assert abs(gamma[1, 0, 1] - c / s) < 1e-12
    numeric, _ = oracle_christoffel(sp, {k: np.array([v]) for k, v in env.items()}, 1)
    assert max_abs(numeric[0] - gamma) < 1e-10
    assert max_abs(gamma - gamma.transpose(0, 2, 1)) == 0.0


def test_vertical_metric(spaces):
    G = value(vertical_metric(spaces("flat2x2")), {})
    assert G[0, 0, 0, 0] == 1.0 and G[0, 0, 1, 1] == -1.0
    sp = spaces("timewarp")
    G = value(vertical_metric(sp), sample_env(sp))
    assert max_abs(G - G.transpose(1, 0, 3, 2, 4)) < 1e-12


def test_gravitational_vertical_metric(spaces):
    # G = h_ab phi^ij / (4 mass c) with phi = diag(1, 2, 3), mass = 2, c = 3
    sp = spaces("gravitational")
    G = value(vertical_metric(sp), {})
    h = np.diag([1.0, -1.0])
    phi = np.diag([1.0, 2.0, 3.0])
    want = np.einsum("ab,ij->ijab", h, phi) / (4 * 2.0 * 3.0)
    assert max_abs(G - want) < 1e-15


def test_flat_nonlinear_connection_vanishes(spaces):
    N = nonlinear_connection(spaces("flat2x2"))
    assert N.N1.is_symbolically_zero() and N.N2.is_symbolically_zero()


def test_sphere_spatial_nonlinear_connection(spaces):
    # N2^(a)_(2)2 = -Gamma^k_22 p_k^a = sin x1 cos x1 p_1^a = p_1^a / 2 at x1 = pi/4
    sp = spaces("sphere2")
    env = env_at(sp, x1=math.pi / 4, p1_1=0.3, p1_2=-0.8)
    N2 = value(nonlinear_connection(sp).N2, env)
    assert abs(N2[0, 1, 1] - 0.15) < 1e-12
    assert abs(N2[1, 1, 1] - (-0.4)) < 1e-12


@pytest.mark.parametrize("name", ["sphere2_u", "sphere3_u", "timewarp", "gravitational"])
def test_general_and_corollary_forms_agree(name, spaces):
    sp = spaces(name)
    N = nonlinear_connection(sp)
    env = sample_env(sp, 100)
    assert max_abs(value(N.N2, env) - value(N.N2_corollary, env)) < 1e-9


def test_adapted_derivatives(spaces):
    sp = spaces("timewarp")
    N = nonlinear_connection(sp)
    e = parse_expr("exp(t1)*sin(x2)", sp.dims)
    assert delta_x(N, e, 1) == diff(e, VarRef.x(2))
    env = sample_env(sp)
    for k in range(2):
        for c in range(2):
            pk = momentum(k, c)
            for j in range(2):
                assert max_abs(value_of(delta_x(N, pk, j), env) + value_of(N.N2[c, k, j], env)) < 1e-14
            for b in range(2):
                chi = temporal_christoffel(sp)
                want = sum(-value_of(chi[c, f, b], env) * env[VarRef.p(k + 1, f + 1)] for f in range(2))
                assert max_abs(value_of(delta_t(N, pk, b), env) - want) < 1e-10


def value_of(e, env):
    from jetgeom.expr import Evaluator

    return np.asarray(Evaluator(env)(e), dtype=float)


def test_timewarp_cartan_coefficients(spaces):
    # g = exp(2 t1) I gives A^i_j1 = delta^i_j and A^i_j2 = 0
    sp = spaces("timewarp")
    A = value(cartan_connection(sp).A, sample_env(sp)).reshape(2, 2, 2, -1)
    assert max_abs(A[:, :, 0] - np.eye(2)[:, :, None]) < 1e-12
    assert max_abs(A[:, :, 1]) < 1e-12


@pytest.mark.parametrize("name", ["sphere2", "sphere2_u", "timewarp", "gravitational", "sphere3_u"])
def test_cartan_closed_forms(name, spaces):
    sp = spaces(name)
    cart = cartan_connection(sp)
    env = sample_env(sp)
    assert max_abs(value(cart.H, env) - value(spatial_christoffel(sp), env)) < 1e-12
    for key in ("A", "H", "C"):
        diff_ = value(getattr(cart, key), env) - value(getattr(cart.general, key), env)
        assert max_abs(diff_) < 1e-10, key
    assert cart.C.is_symbolically_zero()


def test_single_time_vertical_coefficient_nonzero(spaces):
    # a momentum-dependent metric has a genuine C
    sp = spaces("m1finsler")
    assert not cartan_connection(sp).C.is_symbolically_zero()


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.1, 2.0),
    st.floats(-0.5, 0.5),
    st.floats(0.1, 2.0),
)
def test_christoffels_match_oracle_for_random_metrics(a, b, c):
    doc = {
        "dims": {"m": 2, "n": 2},
        "h": [["1", "0"], ["0", "1"]],
        "g_inv": [
            [f"1/({a} + x2^2)", "0"],
            ["0", f"1/({c} + {b}*x1 + x1^2*x2^2)"],
        ],
        "domain": {"x1": [0.2, 1.0], "x2": [0.2, 1.0]},
    }
    sp = load_space(doc)
    env = sp.sample_envs(5, 3)
    sym = value(spatial_christoffel(sp), env)
    num, _ = oracle_christoffel(sp, env, 5)
    assert max_abs(np.moveaxis(num, 0, -1) - sym) < 1e-8
