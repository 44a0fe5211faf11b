import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from phonon_laser_lab import integrator
from phonon_laser_lab.fixed_points import solve_fixed_point
from phonon_laser_lab.model import (
    ModelParams,
    build_diffusion_matrix,
    build_drift_matrix,
    classical_rhs_baremode,
    classical_rhs_supermode,
    inverse_supermode_transform,
    make_state,
    nbar_from_ratio,
    rhs_baremode_into,
    rhs_supermode_into,
    supermode_transform,
)

finite = st.floats(-5.0, 5.0, allow_nan=False)
states = st.lists(finite, min_size=6, max_size=6).map(np.array)
params_st = st.builds(
    ModelParams,
    J=st.floats(0.5, 20),
    omega_m=st.floats(5, 40),
    g=st.floats(0, 0.1),
    gamma_m=st.floats(1e-3, 0.04),
    Delta=st.floats(-15, 15),
    Lambda=st.floats(0, 10),
)


def _jacobian_fd(params, state, h=1e-6):
    J = np.empty((6, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        J[:, k] = (classical_rhs_supermode(params, state + e) - classical_rhs_supermode(params, state - e)) / (2 * h)
    return J


# -- parameters --------------------------------------------------------------


def test_reference_parameters():
    p = ModelParams.reference()
    assert (p.J, p.omega_m, p.g, p.gamma_m) == (10.0, 20.0, 0.02, 0.01)
    assert p.quality_factor == 2000.0
    assert p.mechanical_period == pytest.approx(2 * math.pi / 20)


@pytest.mark.parametrize("field", ["J", "omega_m", "gamma_m"])
def test_rates_must_be_positive(field):
    with pytest.raises(ValueError):
        ModelParams(**{field: 0.0})


@pytest.mark.parametrize("field", ["g", "Lambda", "nbar"])
def test_negative_values_rejected(field):
    with pytest.raises(ValueError):
        ModelParams(**{field: -1e-3})


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        ModelParams(Delta=float("nan"))


def test_low_quality_factor_warns():
    with pytest.warns(RuntimeWarning, match="quality factor"):
        ModelParams(gamma_m=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ModelParams(gamma_m=0.1)  # Q = 200


# -- right-hand sides ----------------------------------------------------------


def test_origin_is_fixed_point_of_undriven_system():
    p = ModelParams(Lambda=0.0)
    assert np.all(classical_rhs_supermode(p, np.zeros(6)) == 0.0)
    assert np.all(classical_rhs_baremode(p, np.zeros(6)) == 0.0)


@given(states)
def test_decoupled_mechanics_at_zero_coupling(s):
    p = ModelParams(g=0.0, Lambda=2.0)
    d = classical_rhs_supermode(p, s)
    assert d[4] == p.omega_m * s[5]
    assert d[5] == -p.omega_m * s[4] - p.gamma_m * s[5]


def test_fixed_point_residual():
    fp = solve_fixed_point(ModelParams(Lambda=3.0))[0]
    assert np.linalg.norm(classical_rhs_supermode(ModelParams(Lambda=3.0), fp.state)) < 1e-10


def test_supermode_rhs_frozen_value():
    s = np.array([0.3, -0.2, 0.1, 0.4, 0.05, -0.01])
    d = classical_rhs_supermode(ModelParams(Lambda=3.0), s)
    assert_allclose(
        d,
        # hand-evaluated: Delta = J removes the c1 rotation, g q / 2 = 5e-4
        [3 / math.sqrt(2) - 0.1497, 0.1001, 3 / math.sqrt(2) - 8.0503, 1.7999, -0.2, -0.9959],
        rtol=1e-12,
        atol=1e-14,
    )


@settings(max_examples=200)
@given(params_st, states)
def test_bare_and_supermode_rhs_agree(p, bare):
    lhs = supermode_transform(classical_rhs_baremode(p, bare))
    rhs = classical_rhs_supermode(p, supermode_transform(bare))
    assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(rhs).max()))


def test_basis_equivalence_over_many_periods():
    p = ModelParams(Lambda=8.0)
    rng = np.random.default_rng(4)
    bare0 = rng.uniform(-1, 1, 6)
    t_end = 150 * p.mechanical_period
    t_out = np.linspace(0, t_end, 301)
    kw = dict(rtol=1e-11, atol=1e-13, h_max=0.05 * p.mechanical_period)
    _, bare = integrator.solve(rhs_baremode_into, bare0, 0.0, t_end, t_out, p.as_array(), **kw)
    _, sup = integrator.solve(
        rhs_supermode_into, supermode_transform(bare0), 0.0, t_end, t_out, p.as_array(), **kw
    )
    mapped = np.array([supermode_transform(b) for b in bare])
    assert np.abs(mapped - sup).max() < 1e-6 * np.abs(sup).max()


# -- basis change ------------------------------------------------------------------


def test_symmetric_bare_state_populates_c1_only():
    z = 0.7 - 0.2j
    s = supermode_transform([z.real, z.imag, z.real, z.imag, 0.3, -0.1])
    assert_allclose(s, make_state(math.sqrt(2) * z, 0.0, 0.3, -0.1), atol=1e-15)


def test_antisymmetric_bare_state_populates_c2_only():
    z = -0.4 + 1.1j
    s = supermode_transform([z.real, z.imag, -z.real, -z.imag, 0.0, 0.0])
    assert_allclose(s, make_state(0.0, math.sqrt(2) * z), atol=1e-15)


@given(states)
def test_transform_round_trip(s):
    assert np.abs(inverse_supermode_transform(supermode_transform(s)) - s).max() < 1e-14


@given(states)
def test_transform_preserves_norm(s):
    assert np.linalg.norm(supermode_transform(s)) == pytest.approx(np.linalg.norm(s), rel=1e-14)


# -- drift and diffusion -------------------------------------------------------------


@settings(max_examples=50)
@given(params_st, states)
def test_amplitude_drift_is_the_jacobian(p, s):
    S = build_drift_matrix(p, s, "amplitude")
    assert_allclose(S, _jacobian_fd(p, s), atol=1e-6)


@settings(max_examples=50)
@given(params_st, states)
def test_quadrature_drift_is_a_rescaled_jacobian(p, s):
    T = np.diag([math.sqrt(2)] * 4 + [1.0, 1.0])
    S_a = build_drift_matrix(p, s, "amplitude")
    S_q = build_drift_matrix(p, s)
    assert_allclose(S_q, T @ S_a @ np.linalg.inv(T), atol=1e-12)


def test_quadrature_and_amplitude_share_the_spectrum():
    p = ModelParams(Lambda=5.0)
    s = solve_fixed_point(p)[0].state
    ev_a = np.sort_complex(np.linalg.eigvals(build_drift_matrix(p, s, "amplitude")))
    ev_q = np.sort_complex(np.linalg.eigvals(build_drift_matrix(p, s)))
    assert_allclose(ev_a, ev_q, atol=1e-12)


def test_unknown_convention_rejected():
    with pytest.raises(ValueError):
        build_drift_matrix(ModelParams(), np.zeros(6), "bare")


@given(params_st, states)
def test_mechanical_rows(p, s):
    S = build_drift_matrix(p, s)
    assert S[4, 5] == p.omega_m
    assert S[5, 4] == -p.omega_m
    assert S[5, 5] == -p.gamma_m
    assert np.all(S[4, :4] == 0.0) and S[4, 4] == 0.0


@given(params_st, states, finite, finite)
def test_drift_depends_on_differences_only(p, s, cx, cy):
    shifted = s.copy()
    shifted[[0, 2]] += cx
    shifted[[1, 3]] += cy
    assert_allclose(build_drift_matrix(p, shifted), build_drift_matrix(p, s), atol=1e-12)


def test_zero_coupling_blocks():
    p = ModelParams(g=0.0, Delta=7.0)
    S = build_drift_matrix(p, np.array([1.0, 2.0, -1.0, 0.5, 3.0, 0.2]))
    assert np.all(S[:2, 2:] == 0.0)
    assert np.all(S[2:4, [0, 1, 4, 5]] == 0.0)
    assert np.all(S[4:, :4] == 0.0)
    assert_allclose(S[:2, :2], [[-0.5, 3.0], [-3.0, -0.5]])
    assert_allclose(S[2:4, 2:4], [[-0.5, -17.0], [17.0, -0.5]])


def test_drift_at_origin():
    p = ModelParams()
    S = build_drift_matrix(p, np.zeros(6))
    expected = np.zeros((6, 6))
    expected[0, 0] = expected[1, 1] = expected[2, 2] = expected[3, 3] = -0.5
    expected[1, 0], expected[0, 1] = p.Delta - p.J, -(p.Delta - p.J)
    expected[3, 2], expected[2, 3] = p.Delta + p.J, -(p.Delta + p.J)
    expected[4, 5], expected[5, 4], expected[5, 5] = p.omega_m, -p.omega_m, -p.gamma_m
    assert_allclose(S, expected, atol=0)


def test_stable_fixed_point_at_low_drive():
    p = ModelParams(Lambda=3.0)
    S = build_drift_matrix(p, solve_fixed_point(p)[0].state)
    assert np.linalg.eigvals(S).real.max() < 0


def test_diffusion_matrix():
    D = build_diffusion_matrix(ModelParams())
    assert_allclose(D, np.diag([0.5, 0.5, 0.5, 0.5, 0.0, 0.01]))
    assert build_diffusion_matrix(ModelParams(nbar=50.0))[5, 5] == pytest.approx(1.01)


@given(params_st)
def test_diffusion_is_state_independent_and_diagonal(p):
    D = build_diffusion_matrix(p)
    assert D[4, 4] == 0.0
    assert np.all(D == np.diag(np.diag(D)))
    assert np.all(np.diag(D) >= 0)


# -- thermal occupation -----------------------------------------------------------------


def test_nbar_ground_state_limit():
    assert nbar_from_ratio(50.0) < 1e-21


def test_nbar_unit_occupation():
    assert nbar_from_ratio(math.log(2.0)) == pytest.approx(1.0, rel=1e-14)


def test_nbar_high_temperature_series():
    x = 0.01
    assert nbar_from_ratio(x) == pytest.approx(1 / x - 0.5 + x / 12, rel=1e-9)
    assert nbar_from_ratio(x) == pytest.approx(99.5, rel=1e-5)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_nbar_rejects_non_positive_ratio(x):
    with pytest.raises(ValueError):
        nbar_from_ratio(x)
