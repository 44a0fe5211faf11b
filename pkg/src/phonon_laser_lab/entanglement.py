"""Gaussian fluctuations around the classical orbit and their entanglement.

The covariance matrix ``V`` of ``(dX1, dY1, dX2, dY2, dq, dp)`` obeys
``dV/dt = S V + V S^T + D`` with ``S`` evaluated on the classical orbit. The
optical supermode ``c2`` and the mechanical mode share the lower-right 4x4
block ``W``, whose logarithmic negativity measures their entanglement.
Quadratures follow ``X = (c + c^dag)/sqrt(2)``, so the vacuum variance is 1/2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import integrator
from .dynamics import (
    AttractorKind,
    IntegratorConfig,
    simulate_attractor,
)
from .errors import (
    LinearizationBreakdown,
    PhononLabError,
    NonPhysical,
    NotHurwitz,
    Unbounded,
)
from .fixed_points import find_threshold, solve_fixed_point, threshold_crossings
from .model import (
    KAPPA,
    ModelParams,
    build_diffusion_matrix,
    build_drift_matrix,
    QUADRATURE,
    coupling_scale,
    quadrature_drift_into,
    rhs_supermode_into,
)
from .parallel import pmap
from .paths import PathSpec

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-6


# ---------------------------------------------------------------------------
# covariance algebra


def symmetrize(V) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    return 0.5 * (V + V.T)


def vacuum_covariance(nbar: float = 0.0) -> np.ndarray:
    """Vacuum optics with a thermal mechanical block ``(2 nbar + 1)/2``."""
    return np.diag([0.5] * 4 + [0.5 * (2 * nbar + 1)] * 2)


def random_covariance(nbar: float, rng, scale: float = 0.5) -> np.ndarray:
    """Vacuum/thermal covariance plus a seeded symmetric positive perturbation."""
    G = rng.standard_normal((6, 6))
    return vacuum_covariance(nbar) + scale * (G @ G.T) / 6.0


def two_mode_block(V):
    """Split the ``c2``-mechanics block ``W`` into ``(W, M, N, C)``."""
    V = np.asarray(V, dtype=np.float64)
    W = V[2:6, 2:6]
    return W, W[:2, :2], W[2:, 2:], W[:2, 2:]


def _sym_index_maps(n):
    """Duplication (n^2 x m) and elimination (m x n^2) matrices for symmetric n x n."""
    iu = np.triu_indices(n)
    m = iu[0].size
    dup = np.zeros((n * n, m))
    elim = np.zeros((m, n * n))
    for k, (i, j) in enumerate(zip(*iu)):
        dup[i * n + j, k] = 1.0
        dup[j * n + i, k] = 1.0
        elim[k, i * n + j] = 1.0
    return dup, elim, iu


def steady_lyapunov_solve(S, D) -> np.ndarray:
    """Stationary covariance: the symmetric solution of ``S V + V S^T + D = 0``.

    The Kronecker form ``(S (x) I + I (x) S) vec V = -vec D`` is reduced to the
    ``n(n+1)/2`` independent entries of a symmetric ``V`` and solved directly.

    Raises
    ------
    NotHurwitz
        ``S`` has an eigenvalue with non-negative real part; no stationary state.
    """
    S = np.asarray(S, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    n = S.shape[0]
    if S.shape != (n, n) or D.shape != (n, n):
        raise ValueError("S and D must be square matrices of equal size")
    max_re = np.linalg.eigvals(S).real.max()
    if max_re >= 0:
        raise NotHurwitz(f"drift matrix has an eigenvalue with real part {max_re:.3g} >= 0")
    dup, elim, iu = _sym_index_maps(n)
    eye = np.eye(n)
    # row-major vec: vec(S V) = (S (x) I) vec V, vec(V S^T) = (I (x) S) vec V
    K = np.kron(S, eye) + np.kron(eye, S)
    v = np.linalg.solve(elim @ K @ dup, -(elim @ D.ravel()))
    V = np.zeros((n, n))
    V[iu] = v
    V = V + V.T - np.diag(np.diag(V))
    return V


def lyapunov_residual(S, V, D) -> float:
    """Max-norm of ``S V + V S^T + D``."""
    return float(np.abs(S @ V + V @ S.T + D).max())


def symplectic_eigenvalues(V) -> np.ndarray:
    """Symplectic spectrum of a ``2n x 2n`` covariance in ``(x1, p1, x2, p2, ...)`` order."""
    V = np.asarray(V, dtype=np.float64)
    n = V.shape[0] // 2
    omega = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    ev = np.abs(np.linalg.eigvals(1j * omega @ V))
    return np.sort(ev)[::2]


def check_physical(V, tol: float = PHYSICAL_TOL) -> float:
    """Return the smallest symplectic eigenvalue; warn below ``1/2 - tol``."""
    nu = float(symplectic_eigenvalues(V).min())
    if nu < 0.5 - tol:
        log.warning("covariance violates uncertainty relation: min symplectic eigenvalue %.6g", nu)
    return nu


def log_negativity(W, tol: float = 1e-10) -> float:
    """Logarithmic negativity of a two-mode Gaussian covariance ``W``.

    ``E_N = max(0, -ln(2 eta))`` with the smallest partially transposed
    symplectic eigenvalue
    ``eta = sqrt((Sigma - sqrt(Sigma^2 - 4 det W)) / 2)`` and
    ``Sigma = det M + det N - 2 det C``.

    Raises
    ------
    NonPhysical
        ``Sigma^2 - 4 det W`` is negative beyond ``tol`` (relative), which only
        happens when ``W`` has been corrupted upstream.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (4, 4):
        raise ValueError("W must be 4x4")
    M, N, C = W[:2, :2], W[2:, 2:], W[:2, 2:]
    sigma = np.linalg.det(M) + np.linalg.det(N) - 2.0 * np.linalg.det(C)
    disc = sigma * sigma - 4.0 * np.linalg.det(W)
    if disc < 0:
        if disc < -tol * max(1.0, sigma * sigma):
            raise NonPhysical(f"negative discriminant {disc:.3g} in symplectic spectrum")
        disc = 0.0
    eta_sq = 0.5 * (sigma - math.sqrt(disc))
    if eta_sq <= 0:
        raise NonPhysical(f"non-positive partially transposed eigenvalue {eta_sq:.3g}")
    return max(0.0, -math.log(2.0 * math.sqrt(eta_sq)))


def entanglement_of(V) -> float:
    return log_negativity(two_mode_block(V)[0])


def fluctuation_radius(V) -> tuple[float, float]:
    """``(sqrt(V_qq)/2, sqrt(V_pp)/2)``, the mechanical fluctuation radii."""
    V = np.asarray(V, dtype=np.float64)
    vqq, vpp = V[4, 4], V[5, 5]
    if vqq < 0 or vpp < 0:
        raise ValueError("negative mechanical variance")
    return 0.5 * math.sqrt(vqq), 0.5 * math.sqrt(vpp)


# ---------------------------------------------------------------------------
# co-integration of (classical state, V)


@njit(cache=True)
def rhs_covariance_into(y, pr, out):
    # y = (state[6], row-major V[36]); pr[7] is the quadrature coupling scale
    rhs_supermode_into(y[:6], pr, out[:6])
    S = np.empty((6, 6))
    quadrature_drift_into(y[:6], pr, pr[7], S)
    SV = np.empty((6, 6))
    for i in range(6):
        for k in range(6):
            acc = 0.0
            for j in range(6):
                acc += S[i, j] * y[6 + 6 * j + k]
            SV[i, k] = acc
    for i in range(6):
        for k in range(6):
            out[6 + 6 * i + k] = SV[i, k] + SV[k, i]
    hk = 0.5 * KAPPA
    out[6] += hk
    out[13] += hk
    out[20] += hk
    out[27] += hk
    out[41] += pr[3] * (2.0 * pr[6] + 1.0)


@njit(cache=True)
def symmetrize_covariance(y, pr):
    for i in range(6):
        for k in range(i + 1, 6):
            a = 6 + 6 * i + k
            b = 6 + 6 * k + i
            m = 0.5 * (y[a] + y[b])
            y[a] = m
            y[b] = m
    return False


@dataclass
class CovarianceSeries:
    t: np.ndarray
    states: np.ndarray  # (n, 6)
    V: np.ndarray  # (n, 6, 6)
    final: np.ndarray  # packed (state, V) at the last sample


def integrate_covariance(
    params: ModelParams,
    initial_state,
    V0,
    config: IntegratorConfig | None = None,
    *,
    t_out=None,
    t_end: float | None = None,
    max_variance: float = 1e8,
    convention: str = QUADRATURE,
) -> CovarianceSeries:
    """Co-integrate the classical orbit and its covariance from ``t = 0``.

    ``V`` is symmetrised after every accepted step.

    Raises
    ------
    LinearizationBreakdown
        The covariance diverged (fluctuations no longer small).
    """
    config = config or IntegratorConfig()
    V0 = np.asarray(V0, dtype=np.float64)
    if np.abs(V0 - V0.T).max() > SYMMETRY_TOL * max(1.0, np.abs(V0).max()):
        raise ValueError("initial covariance must be symmetric")
    t_out = np.empty(0) if t_out is None else np.asarray(t_out, dtype=np.float64)
    if t_end is None:
        t_end = float(t_out[-1]) if t_out.size else 0.0
    y0 = np.concatenate([np.asarray(initial_state, dtype=np.float64), V0.ravel()])
    try:
        y_end, samples = integrator.solve(
            rhs_covariance_into,
            y0,
            0.0,
            t_end,
            t_out,
            np.r_[params.as_array(), coupling_scale(convention)],
            rtol=np.r_[np.full(6, config.rel_tol), np.full(36, config.cov_rel_tol)],
            atol=np.r_[np.full(6, config.abs_tol), np.full(36, config.cov_abs_tol)],
            h_max=config.h_max(params),
            post=symmetrize_covariance,
            max_norm=max_variance,
        )
    except Unbounded as exc:
        raise LinearizationBreakdown(
            f"covariance diverged at t={exc.t:.6g}; linearization no longer valid", t=exc.t
        ) from exc
    return CovarianceSeries(
        t_out, samples[:, :6], samples[:, 6:].reshape(-1, 6, 6), y_end
    )


# ---------------------------------------------------------------------------
# entanglement traces


@dataclass(frozen=True)
class EntanglementConfig:
    """Sampling and convergence settings for entanglement traces."""

    n_periods: int = 10
    samples_per_period: int = 64
    steady_tol: float = 1e-6
    steady_periods: int = 5
    t_max: float | None = None  # default 100 / gamma_m
    method: str = "auto"  # auto | ode | algebraic
    random_V0: bool = False
    convention: str = QUADRATURE

    def __post_init__(self):
        if self.n_periods < 10:
            raise ValueError("sample at least 10 mechanical periods")
        if self.samples_per_period < 64:
            raise ValueError("sample at least 64 points per mechanical period")
        if self.method not in ("auto", "ode", "algebraic"):
            raise ValueError(f"unknown method {self.method!r}")
        coupling_scale(self.convention)


@dataclass
class EntanglementTrace:
    t: np.ndarray
    E_N: np.ndarray
    E_max: float
    E_min: float
    is_constant: bool
    period: float
    kind: AttractorKind
    V_final: np.ndarray
    converged: bool = True
    min_symplectic: float = math.nan
    radius: tuple = (math.nan, math.nan)
    extra: dict = field(default_factory=dict)


def autocorrelation_period(t, signal) -> float:
    """Lag of the first non-trivial autocorrelation maximum, refined parabolically."""
    x = np.asarray(signal, dtype=np.float64)
    x = x - x.mean()
    if not np.any(np.abs(x) > 1e-15):
        return math.nan
    n = x.size
    ac = np.correlate(x, x, mode="full")[n - 1 :]
    ac /= ac[0]
    # first local maximum after the first zero crossing
    below = np.nonzero(ac < 0)[0]
    start = int(below[0]) if below.size else 1
    k = start + int(np.argmax(ac[start : n // 2]))
    shift = 0.0
    if 0 < k < n - 1:
        a, b, c = ac[k - 1 : k + 2]
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    return (k + shift) * (t[1] - t[0])


def _E_series(V_series):
    return np.array([entanglement_of(V) for V in V_series])


def _stationary_trace(params, state, ecfg, nu_check=True):
    S = build_drift_matrix(params, state, ecfg.convention)
    D = build_diffusion_matrix(params)
    V = steady_lyapunov_solve(S, D)
    E = entanglement_of(V)
    T = params.mechanical_period
    t = np.arange(ecfg.n_periods * ecfg.samples_per_period + 1) * T / ecfg.samples_per_period
    return EntanglementTrace(
        t=t,
        E_N=np.full(t.size, E),
        E_max=E,
        E_min=E,
        is_constant=True,
        period=math.nan,
        kind=AttractorKind.FIXED_POINT,
        V_final=V,
        min_symplectic=check_physical(V) if nu_check else math.nan,
        radius=fluctuation_radius(V),
    )


def entanglement_trace(
    params: ModelParams,
    config: IntegratorConfig | None = None,
    ecfg: EntanglementConfig | None = None,
) -> EntanglementTrace:
    """Long-time entanglement between the ``c2`` supermode and the mechanics.

    The classical attractor is located from seeded random initial conditions.
    When the only stationary state is stable (and ``method`` is not ``"ode"``),
    or the integration lands on a stable fixed point, the stationary covariance
    is solved algebraically; otherwise classical state and covariance are co-integrated,
    period by period, until the per-period ``(E_max, E_min)`` pair changes by
    less than ``steady_tol`` (relative) over ``steady_periods`` periods, and
    ``E_N(t)`` is then sampled over ``n_periods`` mechanical periods.
    """
    config = config or IntegratorConfig()
    ecfg = ecfg or EntanglementConfig()
    if ecfg.method != "ode":
        roots = solve_fixed_point(params)
        stable = [fp for fp in roots if fp.stable]
        # a unique, stable root is the global attractor; skip the integration
        if len(roots) == 1 and stable:
            return _stationary_trace(params, stable[0].state, ecfg)
    report = simulate_attractor(params, None, config)
    if report.kind is AttractorKind.FIXED_POINT and ecfg.method != "ode":
        stable = [fp for fp in solve_fixed_point(params) if fp.stable]
        if stable:
            fp = min(stable, key=lambda s: np.linalg.norm(s.state - report.state))
            return _stationary_trace(params, fp.state, ecfg)
    if ecfg.method == "algebraic":
        raise NotHurwitz("algebraic covariance requested but the attractor is not a stable fixed point")

    rng = np.random.default_rng(config.seed + 2)
    V0 = random_covariance(params.nbar, rng) if ecfg.random_V0 else vacuum_covariance(params.nbar)
    T = params.mechanical_period
    n_per = ecfg.samples_per_period
    t_max = 100.0 / params.gamma_m if ecfg.t_max is None else ecfg.t_max
    state = report.state
    y = np.concatenate([state, V0.ravel()])
    t_elapsed = 0.0
    history = []
    converged = False
    chunk_periods = max(ecfg.steady_periods, 1)
    while True:
        # one chunk: `chunk_periods` periods sampled for per-period extrema
        t_out = np.arange(chunk_periods * n_per + 1) * (T / n_per)
        series = integrate_covariance(
            params, y[:6], y[6:].reshape(6, 6), config, t_out=t_out,
            convention=ecfg.convention,
        )
        y = series.final
        t_elapsed += t_out[-1]
        E = _E_series(series.V)
        for k in range(chunk_periods):
            seg = E[k * n_per : (k + 1) * n_per + 1]
            history.append((seg.max(), seg.min()))
        if len(history) > ecfg.steady_periods:
            recent = np.array(history[-(ecfg.steady_periods + 1) :])
            ref = np.maximum(np.abs(recent[-1]), 1e-12)
            change = np.abs(np.diff(recent, axis=0)).max(axis=0) / ref
            if np.all(change < ecfg.steady_tol):
                converged = True
                break
        if t_elapsed >= t_max:
            log.warning("entanglement not steady after t=%.3g at %s", t_elapsed, params)
            break
        # skip ahead cheaply before sampling again
        skip = min(max(10.0 * T, 0.05 * t_elapsed), max(t_max - t_elapsed, 0.0))
        if skip > 0:
            series = integrate_covariance(
                params, y[:6], y[6:].reshape(6, 6), config, t_end=skip, convention=ecfg.convention
            )
            y = series.final
            t_elapsed += skip

    t_out = np.arange(ecfg.n_periods * n_per + 1) * (T / n_per)
    series = integrate_covariance(
        params, y[:6], y[6:].reshape(6, 6), config, t_out=t_out, convention=ecfg.convention
    )
    E = _E_series(series.V)
    E_max, E_min = float(E.max()), float(E.min())
    is_constant = (E_max - E_min) < max(ecfg.steady_tol, 1e-9)
    period = math.nan if is_constant else autocorrelation_period(series.t, E)
    nu = min(check_physical(V) for V in series.V[:: max(1, n_per // 8)])
    return EntanglementTrace(
        t=series.t + t_elapsed,
        E_N=E,
        E_max=E_max,
        E_min=E_min,
        is_constant=bool(is_constant),
        period=period,
        kind=report.kind,
        V_final=series.V[-1],
        converged=converged,
        min_symplectic=nu,
        radius=fluctuation_radius(series.V[-1]),
        extra={"t_settle": t_elapsed, "A": report.A},
    )


# ---------------------------------------------------------------------------
# stationary fluctuations of region-I points


def stationary_covariance(params: ModelParams, convention: str = QUADRATURE) -> np.ndarray:
    """Algebraic covariance at the least-displaced stable stationary state.

    Raises
    ------
    NotHurwitz
        No stationary state is linearly stable.
    """
    stable = [fp for fp in solve_fixed_point(params) if fp.stable]
    if not stable:
        raise NotHurwitz(
            f"no stable stationary state at Lambda={params.Lambda}, Delta={params.Delta}"
        )
    S = build_drift_matrix(params, stable[0].state, convention)
    return steady_lyapunov_solve(S, build_diffusion_matrix(params))


def _radius_or_inf(params, convention):
    try:
        return fluctuation_radius(stationary_covariance(params, convention))[0]
    except NotHurwitz:
        return math.inf


def is_excluded(
    params: ModelParams,
    along: str,
    step: float,
    *,
    factor: float = 10.0,
    convention: str = QUADRATURE,
) -> bool:
    """Near-boundary exclusion rule for a region-I point.

    The point is excluded when its mechanical fluctuation radius exceeds
    ``factor`` times the radius one ``step`` further from the boundary, i.e. at
    the neighbour (``+step`` or ``-step`` in ``along``) with the more stable
    spectrum. Points without a stable stationary state are always excluded.
    """
    r = _radius_or_inf(params, convention)
    if not math.isfinite(r):
        return True
    x = getattr(params, along)
    neighbours = []
    for side in (-1.0, 1.0):
        q = params.replace(**{along: x + side * step})
        try:
            growth = min(fp.max_real for fp in solve_fixed_point(q))
        except PhononLabError:
            continue
        neighbours.append((growth, q))
    if not neighbours:
        return False
    _, far = min(neighbours, key=lambda item: item[0])
    r_far = _radius_or_inf(far, convention)
    return bool(math.isfinite(r_far) and r > factor * r_far)


@dataclass
class FluctuationPoint:
    value: float
    region: int  # 1 stable stationary state, 2 otherwise
    radius_q: float
    radius_p: float
    excluded: bool


def _fluctuation_point(args):
    params, along, step, convention = args
    value = getattr(params, along)
    try:
        V = stationary_covariance(params, convention)
    except NotHurwitz:
        return FluctuationPoint(value, 2, math.nan, math.nan, False)
    rq, rp = fluctuation_radius(V)
    excluded = is_excluded(params, along, step, convention=convention)
    return FluctuationPoint(value, 1, rq, rp, excluded)


def fluctuation_sweep(
    template: ModelParams,
    path: PathSpec,
    *,
    convention: str = QUADRATURE,
    n_jobs: int | None = 1,
) -> list[FluctuationPoint]:
    """Stationary fluctuation radii along a cut; region-II points carry ``nan``."""
    values = np.asarray(path.values, dtype=np.float64)
    step = float(np.min(np.diff(values))) if values.size > 1 else 0.01
    items = [(path.params_at(template, v), path.swept, step, convention) for v in values]
    return pmap(_fluctuation_point, items, n_jobs)


# ---------------------------------------------------------------------------
# temperature dependence


def _trace_item(args):
    params, config, ecfg = args
    return entanglement_trace(params, config, ecfg)


def entanglement_sweep(
    template: ModelParams,
    path: PathSpec,
    config: IntegratorConfig | None = None,
    ecfg: EntanglementConfig | None = None,
    *,
    n_jobs: int | None = 1,
) -> list[EntanglementTrace]:
    """One entanglement trace per grid point of ``path``."""
    items = [(p, config, ecfg) for p in path.points(template)]
    return pmap(_trace_item, items, n_jobs)


def temperature_sweep(
    template: ModelParams,
    path: PathSpec,
    nbar_list,
    config: IntegratorConfig | None = None,
    ecfg: EntanglementConfig | None = None,
    *,
    n_jobs: int | None = 1,
) -> list[tuple[float, float, EntanglementTrace]]:
    """Entanglement traces for every ``(path value, nbar)`` pair, path-major."""
    nbar_list = [float(n) for n in nbar_list]
    if not nbar_list:
        raise ValueError("nbar list is empty")
    if any(not math.isfinite(n) or n < 0 for n in nbar_list):
        raise ValueError("thermal occupations must be finite and non-negative")
    keys, items = [], []
    for v in path.values:
        for n in nbar_list:
            keys.append((float(v), n))
            items.append((path.params_at(template, v).replace(nbar=n), config, ecfg))
    traces = pmap(_trace_item, items, n_jobs)
    return [(v, n, tr) for (v, n), tr in zip(keys, traces)]


# ---------------------------------------------------------------------------
# entanglement next to the lasing boundary


@dataclass(frozen=True)
class BoundarySample:
    """A point of the lasing boundary and the cut along which it is approached."""

    label: str
    along: str  # "Lambda" or "Delta"
    Lambda: float
    Delta: float

    @property
    def value(self) -> float:
        return self.Lambda if self.along == "Lambda" else self.Delta


def boundary_samples(
    template: ModelParams,
    Delta_cuts=(9.25, 9.5, 9.75, 10.0, 10.25, 10.5),
    Lambda_cuts=(7.0,),
    *,
    Delta_range=(8.0, 12.0),
    Lambda_max: float = 30.0,
) -> list[BoundarySample]:
    """Boundary points located by the eigenvalue crossing.

    Each ``Delta`` cut is swept in ``Lambda`` (first threshold only); each
    ``Lambda`` cut is swept in ``Delta`` over ``Delta_range`` and contributes
    every crossing found. With the defaults this covers the three reference
    cuts (``Delta = J``, ``Delta = 9.5``, ``Lambda = 7``) and four more.
    """
    out = []
    for D in Delta_cuts:
        lt = find_threshold(template, D, Lambda_max=Lambda_max, method="eigen")
        out.append(BoundarySample(f"Delta={D:g}", "Lambda", lt, float(D)))
    for L in Lambda_cuts:
        roots = threshold_crossings(
            template.replace(Lambda=float(L)), "Delta", *Delta_range, method="eigen"
        )
        for k, dt in enumerate(roots):
            out.append(BoundarySample(f"Lambda={L:g}:{k}", "Delta", float(L), dt))
    return out


@dataclass
class BoundaryPoint:
    sample: BoundarySample
    params: ModelParams
    E_N: float
    radius: float
    excluded: bool
    reason: str = ""


@dataclass
class BoundaryScan:
    points: list
    mean: float
    std: float

    @property
    def relative_spread(self) -> float:
        return self.std / self.mean if self.mean > 0 else math.nan

    @property
    def admissible(self) -> list:
        return [p for p in self.points if not p.excluded]


def _region_one_side(sample: BoundarySample, template: ModelParams, offset: float):
    base = template.replace(Lambda=sample.Lambda, Delta=sample.Delta)
    best = None
    for side in (-1.0, 1.0):
        q = base.replace(**{sample.along: sample.value + side * offset})
        growth = min(fp.max_real for fp in solve_fixed_point(q))
        if best is None or growth < best[0]:
            best = (growth, q)
    return best[1]


def _boundary_item(args):
    sample, template, offset, convention = args
    params = _region_one_side(sample, template, offset)
    try:
        V = stationary_covariance(params, convention)
    except NotHurwitz as exc:
        return BoundaryPoint(sample, params, math.nan, math.nan, True, str(exc))
    if is_excluded(params, sample.along, offset, convention=convention):
        return BoundaryPoint(
            sample, params, math.nan, fluctuation_radius(V)[0], True, "fluctuation radius blow-up"
        )
    return BoundaryPoint(sample, params, entanglement_of(V), fluctuation_radius(V)[0], False)


def boundary_constant_scan(
    template: ModelParams,
    samples=None,
    offset: float = 0.01,
    *,
    convention: str = QUADRATURE,
    n_jobs: int | None = 1,
) -> BoundaryScan:
    """Stationary ``E_N`` a distance ``offset`` inside region I of each boundary sample.

    The side is chosen as the neighbour with the more negative growth rate.
    Excluded points (no stable state, or radius blow-up) are kept in the result
    with ``excluded=True`` and do not enter the mean and spread.
    """
    if offset <= 0:
        raise ValueError("offset must be positive")
    samples = boundary_samples(template) if samples is None else list(samples)
    points = pmap(
        _boundary_item, [(s, template, offset, convention) for s in samples], n_jobs
    )
    values = np.array([p.E_N for p in points if not p.excluded])
    for p in points:
        if p.excluded:
            log.warning("boundary sample %s excluded: %s", p.sample.label, p.reason)
    if values.size == 0:
        return BoundaryScan(points, math.nan, math.nan)
    return BoundaryScan(points, float(values.mean()), float(values.std()))
