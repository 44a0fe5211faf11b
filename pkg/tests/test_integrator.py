import numpy as np
import pytest
from numba import njit
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from phonon_laser_lab import integrator
from phonon_laser_lab.errors import StepSizeUnderflow, Unbounded
from phonon_laser_lab.model import ModelParams, classical_rhs_supermode, rhs_supermode_into


@njit(cache=True)
def _oscillator(y, pr, out):
    out[0] = y[1]
    out[1] = -y[0]


@njit(cache=True)
def _blowup(y, pr, out):
    out[0] = y[0] * y[0]


@njit(cache=True)
def _growth(y, pr, out):
    out[0] = pr[0] * y[0]


@njit(cache=True)
def _clamp(y, pr):
    if y[0] > 1.0:
        y[0] = 1.0
        return True
    return False


def test_harmonic_oscillator_dense_output():
    t_out = np.linspace(0, 20, 401)
    _, ys = integrator.solve(
        _oscillator, [1.0, 0.0], 0.0, 20.0, t_out, np.zeros(1), rtol=1e-10, atol=1e-12, h_max=1.0
    )
    assert np.abs(ys[:, 0] - np.cos(t_out)).max() < 1e-8
    assert np.abs(ys[:, 1] + np.sin(t_out)).max() < 1e-8


def test_matches_scipy_on_the_driven_model():
    p = ModelParams(Lambda=8.0)
    y0 = np.array([0.2, -0.5, 0.3, 0.1, 0.4, -0.2])
    t_out = np.linspace(0, 30, 61)
    _, ys = integrator.solve(
        rhs_supermode_into, y0, 0.0, 30.0, t_out, p.as_array(), rtol=1e-11, atol=1e-13, h_max=0.1
    )
    ref = solve_ivp(
        lambda t, y: classical_rhs_supermode(p, y),
        (0, 30),
        y0,
        method="RK45",
        t_eval=t_out,
        rtol=1e-11,
        atol=1e-13,
    )
    assert_allclose(ys, ref.y.T, atol=1e-7 * np.abs(ref.y).max())


def test_start_time_offset_and_sample_between_steps():
    t_out = np.array([5.25, 7.0])
    _, ys = integrator.solve(
        _growth, [1.0], 5.0, 7.0, t_out, np.array([-0.3]), rtol=1e-12, atol=1e-14, h_max=10.0
    )
    assert_allclose(ys[:, 0], np.exp(-0.3 * (t_out - 5.0)), rtol=1e-10)


def test_per_component_tolerances_accepted():
    t_out = np.linspace(0, 5, 11)
    _, ys = integrator.solve(
        _oscillator, [1.0, 0.0], 0.0, 5.0, t_out, np.zeros(1),
        rtol=np.array([1e-10, 1e-4]), atol=np.array([1e-12, 1e-6]), h_max=1.0,
    )
    assert np.abs(ys[:, 0] - np.cos(t_out)).max() < 1e-7


def test_post_hook_modifies_state():
    y_end, _ = integrator.solve(
        _growth, [0.5], 0.0, 5.0, np.empty(0), np.array([1.0]), rtol=1e-9, atol=1e-12, h_max=0.1,
        post=_clamp,
    )
    assert y_end[0] == pytest.approx(1.0, abs=0.11)


def test_unbounded_reported_with_time():
    with pytest.raises(Unbounded) as info:
        integrator.solve(
            _blowup, [1.0], 0.0, 2.0, np.empty(0), np.zeros(1), rtol=1e-8, atol=1e-10, h_max=0.1,
            max_norm=1e6,
        )
    assert 0.9 < info.value.t < 1.0  # solution 1/(1 - t)


def test_step_size_underflow_is_an_error():
    with pytest.raises((StepSizeUnderflow, Unbounded)):
        integrator.solve(
            _blowup, [1.0], 0.0, 2.0, np.empty(0), np.zeros(1), rtol=1e-8, atol=1e-10, h_max=0.1,
            max_norm=1e300,
        )


def test_unsorted_sample_times_rejected():
    with pytest.raises(ValueError):
        integrator.solve(
            _oscillator, [1.0, 0.0], 0.0, 1.0, np.array([0.5, 0.2]), np.zeros(1),
            rtol=1e-8, atol=1e-10, h_max=1.0,
        )


@njit(cache=True)
def _still(y, pr, out):
    out[0] = 0.0


def test_accumulated_rounding_does_not_underflow():
    # ten steps of 0.1 sum to 0.9999999999999999, leaving a sliver before t_end
    y, ys = integrator.solve(
        _still, [2.0], 0.0, 1.0, np.array([1.0]), np.zeros(1), rtol=1e-8, atol=1e-10, h_max=0.1
    )
    assert y[0] == 2.0 and ys[0, 0] == 2.0
