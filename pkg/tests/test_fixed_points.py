import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from phonon_laser_lab import integrator, phase_diagram
from phonon_laser_lab.errors import NoBracket, SingularOpticalSystem
from phonon_laser_lab.fixed_points import (
    find_threshold,
    gamma_opt,
    gamma_opt_per_photon,
    hopf_pair,
    max_real_eigenvalue,
    solve_fixed_point,
    stability_eigenvalues,
    threshold_crossings,
)
from phonon_laser_lab.model import ModelParams, make_state, rhs_supermode_into
from phonon_laser_lab.phase_diagram import (
    REGION_I,
    REGION_II,
    REGION_UNKNOWN,
    classify_cell,
    sweep_phase_diagram,
)

P = ModelParams.reference()

# -- stationary states -------------------------------------------------------


def test_undriven_origin_is_stable():
    roots = solve_fixed_point(P.replace(Lambda=0.0))
    assert len(roots) == 1
    assert np.abs(roots[0].state).max() == 0.0
    assert roots[0].stable


@pytest.mark.parametrize("Delta", [7.0, 10.0, 11.5])
def test_decoupled_optics_closed_form(Delta):
    p = P.replace(g=0.0, Lambda=4.0, Delta=Delta)
    fp = solve_fixed_point(p)[0]
    drive = -p.Lambda / math.sqrt(2)
    c1 = drive / (1j * (Delta - p.J) - 0.5)
    c2 = drive / (1j * (Delta + p.J) - 0.5)
    assert_allclose(fp.state, make_state(c1, c2, 0.0, 0.0), atol=1e-12)


def test_decoupled_spectrum_is_exact():
    p = P.replace(g=0.0, Lambda=0.0, Delta=9.0)
    ev = stability_eigenvalues(p, np.zeros(6))
    expected = [
        -0.5 + 1j, -0.5 - 1j, -0.5 + 19j, -0.5 - 19j,
        -0.005 + 1j * math.sqrt(400 - 0.005**2), -0.005 - 1j * math.sqrt(400 - 0.005**2),
    ]
    assert_allclose(np.sort_complex(ev), np.sort_complex(expected), atol=1e-12)


def test_low_drive_root_is_the_long_time_state():
    p = P.replace(Lambda=3.0)
    roots = solve_fixed_point(p)
    assert len(roots) == 1 and roots[0].stable
    t_end = 4.0 / p.gamma_m * 10
    y, _ = integrator.solve(
        rhs_supermode_into, np.zeros(6), 0.0, t_end, np.empty(0), p.as_array(),
        rtol=1e-11, atol=1e-13, h_max=0.05,
    )
    assert np.abs(y - roots[0].state).max() < 1e-6


def test_fixed_point_residuals():
    for L in (0.0, 3.0, 5.0, 9.0):
        for fp in solve_fixed_point(P.replace(Lambda=L)):
            assert fp.residual < 1e-10


# -- Hopf crossing -----------------------------------------------------------


def test_hopf_pair_at_threshold():
    th = threshold_crossings(P, method="eigen")[0]
    pair = hopf_pair(P.replace(Lambda=th))
    assert np.abs(pair.real).max() < 1e-4
    assert np.all(np.abs(np.abs(pair.imag) - P.omega_m) < 0.05 * P.omega_m)
    assert pair[0] == pytest.approx(np.conj(pair[1]))


def test_max_real_changes_sign_across_threshold():
    assert max_real_eigenvalue(P.replace(Lambda=3.0)) == pytest.approx(-3.19e-3, abs=1e-5)
    assert max_real_eigenvalue(P.replace(Lambda=8.0)) == pytest.approx(7.60e-3, abs=1e-5)


# -- optical damping -----------------------------------------------------------


def test_gamma_opt_vanishes_without_drive():
    assert gamma_opt(P, np.zeros(6)) == 0.0


def test_gamma_opt_negative_and_decreasing_on_path1():
    values = [gamma_opt(P.replace(Lambda=L), solve_fixed_point(P.replace(Lambda=L))[0].state)
              for L in (1.0, 2.0, 3.0, 4.0, 5.0)]
    assert all(v < 0 for v in values)
    assert np.all(np.diff(values) < 0)


def test_gamma_opt_linear_in_photon_number():
    s = make_state(0.3 + 0.1j, -0.2 + 0.4j, 0.0, 0.0)
    alpha2_sq = abs((0.3 + 0.1j) - (-0.2 + 0.4j)) ** 2 / 2
    assert gamma_opt(P, s) == pytest.approx(alpha2_sq * gamma_opt_per_photon(P), rel=1e-14)
    assert gamma_opt(P, 2 * s) == pytest.approx(4 * gamma_opt(P, s), rel=1e-14)


# -- thresholds ------------------------------------------------------------------


def test_path1_thresholds_frozen():
    # computed with this package
    assert find_threshold(P) == pytest.approx(5.002016109, abs=1e-8)
    assert threshold_crossings(P, method="eigen")[0] == pytest.approx(5.001961883, abs=1e-8)


def test_path3_threshold_above_path1():
    assert find_threshold(P, 9.5) > find_threshold(P)
    assert threshold_crossings(P.replace(Delta=9.5), method="eigen")[0] == pytest.approx(
        9.697772897, abs=1e-7
    )


def test_path2_has_two_crossings():
    roots = threshold_crossings(P.replace(Lambda=7.0), "Delta", 8.0, 12.0, method="eigen")
    assert_allclose(roots, [9.672991389, 10.308668142], atol=1e-7)


def test_no_threshold_far_from_resonance():
    with pytest.raises(NoBracket):
        find_threshold(P, 8.5)


def test_threshold_method_rejected():
    with pytest.raises(ValueError):
        threshold_crossings(P, method="bogus")
    with pytest.raises(ValueError):
        threshold_crossings(P, along="g")


# -- phase diagram -------------------------------------------------------------------


@pytest.mark.parametrize(
    "Lambda, region", [(3.0, REGION_I), (5.01, REGION_II), (8.0, REGION_II)]
)
def test_marked_points(Lambda, region):
    assert classify_cell(P.replace(Lambda=Lambda))[0] == region


@pytest.fixture(scope="module")
def small_diagram():
    return sweep_phase_diagram(P, (0, 12), (9, 11), (25, 9), crosscheck_fraction=0.0)


def test_small_diagram_rows(small_diagram):
    d = small_diagram
    assert d.region.shape == (9, 25)
    assert d.unknown_fraction == 0.0
    i = int(np.argmin(np.abs(d.Delta - 10.0)))
    assert d.threshold[i] == pytest.approx(5.001961883, abs=1e-6)
    # lasing is easiest on the supermode resonance
    assert np.nanargmin(d.threshold) == i
    assert d.region_at(3.0, 10.0) == REGION_I
    assert d.region_at(8.0, 10.0) == REGION_II


def test_row_threshold_agrees_with_find_threshold(small_diagram):
    d = small_diagram
    step = d.Lambda[1] - d.Lambda[0]
    for Delta, th in zip(d.Delta, d.threshold):
        if np.isfinite(th):
            assert abs(th - find_threshold(P, Delta)) < step


def test_failed_cells_are_marked_unknown(monkeypatch):
    def boom(params, n_scan=400):
        if params.Lambda > 6:
            raise SingularOpticalSystem("forced")
        return solve_fixed_point(params, n_scan)

    monkeypatch.setattr(phase_diagram, "solve_fixed_point", boom)
    d = sweep_phase_diagram(P, (0, 12), (10, 10), (13, 1), crosscheck_fraction=0.0)
    assert np.all(d.region[0, d.Lambda > 6] == REGION_UNKNOWN)
    assert np.all(np.isnan(d.max_real[0, d.Lambda > 6]))
    assert d.unknown_fraction == pytest.approx(6 / 13)


def test_bad_arguments():
    with pytest.raises(ValueError):
        sweep_phase_diagram(P, resolution=(0, 3))
    with pytest.raises(ValueError):
        sweep_phase_diagram(P, crosscheck_fraction=2.0)


@pytest.mark.slow
def test_integration_cross_check_agrees():
    d = sweep_phase_diagram(P, (0, 12), (8, 12), (10, 10), crosscheck_fraction=1.0)
    assert d.discrepancies == []
