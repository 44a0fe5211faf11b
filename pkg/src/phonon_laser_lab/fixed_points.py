"""Stationary states, their linear stability and the lasing threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoBracket, NoRoot, SingularOpticalSystem
from .model import KAPPA, SQRT2, ModelParams, build_drift_matrix, classical_rhs_supermode, make_state


@dataclass
class FixedPointSolution:
    state: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    stable: bool

    @property
    def q(self) -> float:
        return float(self.state[4])

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real.max())


def _optical_matrix(params: ModelParams, q: float) -> np.ndarray:
    h = 0.5j * params.g * q
    return np.array(
        [
            [1j * (params.Delta - params.J) - 0.5 * KAPPA + h, -h],
            [-h, 1j * (params.Delta + params.J) - 0.5 * KAPPA + h],
        ]
    )


def optical_response(params: ModelParams, q: float) -> tuple[complex, complex]:
    """Stationary supermode amplitudes ``(c1, c2)`` for a frozen mirror position ``q``."""
    A = _optical_matrix(params, q)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det) < 1e-14 * max(1.0, np.abs(A).max() ** 2):
        raise SingularOpticalSystem(f"optical system singular at q={q:.6g}")
    b = -params.Lambda / SQRT2 * np.ones(2)
    c = np.linalg.solve(A, b)
    return complex(c[0]), complex(c[1])


def self_consistency(params: ModelParams, q: float) -> float:
    """``F(q) = q - g |c1 - c2|^2 / (2 omega_m)``; roots are the stationary positions."""
    c1, c2 = optical_response(params, q)
    return q - params.g / (2.0 * params.omega_m) * abs(c1 - c2) ** 2


def _self_consistency_scan(params, qs):
    """Vectorised ``F(q)`` via Cramer's rule on the 2x2 optical system."""
    h = 0.5j * params.g * qs
    a11 = 1j * (params.Delta - params.J) - 0.5 * KAPPA + h
    a22 = 1j * (params.Delta + params.J) - 0.5 * KAPPA + h
    det = a11 * a22 - h * h
    scale = np.maximum(1.0, np.maximum(np.abs(a11), np.abs(a22)) ** 2)
    if np.any(np.abs(det) < 1e-14 * scale):
        k = int(np.argmax(np.abs(det) < 1e-14 * scale))
        raise SingularOpticalSystem(f"optical system singular at q={qs[k]:.6g}")
    b = -params.Lambda / SQRT2
    # c1 - c2 = b (a22 + h - a11 - h) / det
    d = b * (a22 - a11) / det
    return qs - params.g / (2.0 * params.omega_m) * np.abs(d) ** 2


def _self_consistency_with_slope(params, q):
    A = _optical_matrix(params, q)
    b = -params.Lambda / SQRT2 * np.ones(2)
    c = np.linalg.solve(A, b)
    dA = 0.5j * params.g * np.array([[1.0, -1.0], [-1.0, 1.0]])
    dc = -np.linalg.solve(A, dA @ c)
    d = c[0] - c[1]
    dd = dc[0] - dc[1]
    k = params.g / (2.0 * params.omega_m)
    return q - k * abs(d) ** 2, 1.0 - 2.0 * k * (d.conjugate() * dd).real


def _safeguarded_newton(params, lo, hi, f_lo, tol=1e-15, max_iter=100):
    """Newton iteration kept inside a sign-change bracket, bisecting when it strays."""
    q = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f, df = _self_consistency_with_slope(params, q)
        if f == 0.0:
            return q
        if (f < 0) == (f_lo < 0):
            lo, f_lo = q, f
        else:
            hi = q
        step = f / df if df != 0 else math.inf
        q_new = q - step
        if not (lo < q_new < hi):
            q_new = 0.5 * (lo + hi)
        if abs(q_new - q) <= tol * max(1.0, abs(q)):
            return q_new
        q = q_new
    return q


def solve_fixed_point(params: ModelParams, n_scan: int = 400) -> list[FixedPointSolution]:
    """All stationary states, ordered by mechanical displacement.

    Scans ``F(q)`` on ``[0, q_max]`` with ``q_max = g (2 Lambda / kappa)^2 / omega_m``
    (energy balance bounds the intracavity photon number by ``(2 Lambda/kappa)^2``),
    then polishes each sign change with safeguarded Newton.

    Raises
    ------
    SingularOpticalSystem
        The optical linear system is singular somewhere on the scan.
    NoRoot
        No sign change was found.
    """
    q_max = params.g * (2.0 * params.Lambda / KAPPA) ** 2 / params.omega_m
    if q_max == 0.0:
        roots = [0.0] if self_consistency(params, 0.0) == 0.0 else []
    else:
        qs = np.linspace(0.0, q_max * (1.0 + 1e-9), n_scan + 1)
        fs = _self_consistency_scan(params, qs)
        roots = []
        for i in range(n_scan):
            if fs[i] == 0.0:
                roots.append(float(qs[i]))
            elif fs[i] * fs[i + 1] < 0:
                roots.append(_safeguarded_newton(params, qs[i], qs[i + 1], fs[i]))
        if fs[-1] == 0.0:
            roots.append(float(qs[-1]))
    if not roots:
        raise NoRoot(
            f"no sign change of F(q) on [0, {q_max:.6g}] for Lambda={params.Lambda}, "
            f"Delta={params.Delta}"
        )
    solutions = []
    for q in roots:
        c1, c2 = optical_response(params, q)
        state = make_state(c1, c2, q, 0.0)
        residual = float(np.linalg.norm(classical_rhs_supermode(params, state)))
        eig = stability_eigenvalues(params, state)
        solutions.append(FixedPointSolution(state, residual, eig, bool(eig.real.max() < 0)))
    return solutions


def stability_eigenvalues(params: ModelParams, fixed_point) -> np.ndarray:
    """Eigenvalues of the drift matrix at ``fixed_point``, real part descending."""
    eig = np.linalg.eigvals(build_drift_matrix(params, fixed_point))
    return eig[np.lexsort((-eig.imag, -eig.real))]


def is_stable(params: ModelParams) -> bool:
    """True when at least one stationary state is linearly stable."""
    return any(s.stable for s in solve_fixed_point(params))


def max_real_eigenvalue(params: ModelParams) -> float:
    """Largest growth rate at the least unstable stationary state."""
    return min(s.max_real for s in solve_fixed_point(params))


def gamma_opt(params: ModelParams, fixed_point) -> float:
    """Radiation-pressure damping rate from the mechanical susceptibility.

    Linear in ``|alpha2|^2`` with ``alpha2 = (c1 - c2)/sqrt(2)`` at the fixed point.
    """
    x1, y1, x2, y2 = np.asarray(fixed_point, dtype=np.float64)[:4]
    alpha2_sq = ((x1 - x2) ** 2 + (y1 - y2) ** 2) / 2.0
    return alpha2_sq * gamma_opt_per_photon(params)


def gamma_opt_per_photon(params: ModelParams) -> float:
    wm, g, D, k = params.omega_m, params.g, params.Delta, KAPPA
    B = params.J**2 + k**2 / 4.0
    num = 2.0 * k * D * (3 * B**2 - 2 * B * (wm**2 + D**2) - (wm**2 - D**2) ** 2 - B * k**2)
    den = ((B - (wm + D) ** 2) ** 2 + k**2 * (wm + D) ** 2) * (
        (B - (wm - D) ** 2) ** 2 + k**2 * (wm - D) ** 2
    )
    return wm * g**2 * num / den


def effective_damping(params: ModelParams) -> float:
    """``gamma_m + gamma_opt`` at the least-displaced stationary state."""
    fp = solve_fixed_point(params)[0]
    return params.gamma_m + gamma_opt(params, fp.state)


def _scan_roots(func, lo, hi, n_scan, xtol):
    xs = np.linspace(lo, hi, n_scan + 1)
    fs = np.array([func(x) for x in xs])
    roots = []
    for i in range(n_scan):
        if fs[i] == 0.0:
            roots.append(float(xs[i]))
        elif fs[i] * fs[i + 1] < 0:
            roots.append(brentq(func, xs[i], xs[i + 1], xtol=xtol, rtol=1e-15))
    return roots


def threshold_crossings(
    template: ModelParams,
    along: str = "Lambda",
    lo: float = 0.0,
    hi: float = 30.0,
    *,
    n_scan: int = 120,
    method: str = "gamma_eff",
    xtol: float = 1e-12,
) -> list[float]:
    """All lasing thresholds on a one-dimensional cut.

    ``method="gamma_eff"`` locates ``gamma_m + gamma_opt = 0``; ``method="eigen"``
    locates where the largest real part of the drift-matrix spectrum crosses zero.
    """
    if along not in ("Lambda", "Delta"):
        raise ValueError("along must be 'Lambda' or 'Delta'")
    if method == "gamma_eff":
        func = lambda v: effective_damping(template.replace(**{along: v}))  # noqa: E731
    elif method == "eigen":
        func = lambda v: max_real_eigenvalue(template.replace(**{along: v}))  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    return _scan_roots(func, lo, hi, n_scan, xtol)


def find_threshold(
    template: ModelParams,
    Delta: float | None = None,
    *,
    Lambda_max: float = 30.0,
    method: str = "gamma_eff",
) -> float:
    """Smallest drive amplitude at which the mechanical mode starts lasing.

    Raises
    ------
    NoBracket
        ``gamma_opt`` never reaches ``-gamma_m`` on ``(0, Lambda_max]``.
    """
    params = template if Delta is None else template.replace(Delta=float(Delta))
    roots = threshold_crossings(params, "Lambda", 1e-3, Lambda_max, method=method)
    if not roots:
        raise NoBracket(
            f"no lasing threshold below Lambda={Lambda_max} at Delta={params.Delta}"
        )
    return roots[0]


def hopf_pair(params: ModelParams) -> np.ndarray:
    """The complex-conjugate eigenvalue pair with the largest real part."""
    eig = solve_fixed_point(params)[0].eigenvalues
    return eig[:2]
