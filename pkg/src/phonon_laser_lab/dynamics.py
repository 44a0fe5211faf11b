"""Classical mean-field dynamics: integration, attractor classification, sweeps."""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from numba import njit
from scipy.signal import find_peaks

from . import integrator
from .errors import AmbiguousAttractor, NotConverged, PhononLabError
from .fixed_points import max_real_eigenvalue, solve_fixed_point, threshold_crossings
from .model import ModelParams, drift_matrix_into, rhs_supermode_into
from .parallel import pmap
from .paths import PathSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegratorConfig:
    """Numerical settings shared by every time integration.

    Times are in units of ``1/kappa``; ``None`` selects a default derived from
    the model parameters by the accessor methods.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = 0.05  # in mechanical periods
    t_transient: float | None = None  # default 50 / gamma_m
    t_observe: float | None = None  # default 40 mechanical periods
    samples_per_period: int = 64
    seed: int = 0
    init_scale: float = 1.0
    eps_A: float = 1e-3
    refine_cycles: bool = True
    t_settle_max: float | None = None  # default 2000 / gamma_m
    lyapunov_time: float | None = None  # default 20 / gamma_m
    lyapunov_tol: float | None = None  # default gamma_m / 4
    max_norm: float = 1e8
    cov_rel_tol: float = 1e-7
    cov_abs_tol: float = 1e-9

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("integration tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.samples_per_period < 8:
            raise ValueError("need at least 8 samples per mechanical period")
        if self.init_scale < 0:
            raise ValueError("init_scale must be non-negative")

    def replace(self, **changes) -> "IntegratorConfig":
        return dataclasses.replace(self, **changes)

    def transient(self, params: ModelParams) -> float:
        return 50.0 / params.gamma_m if self.t_transient is None else float(self.t_transient)

    def observe(self, params: ModelParams) -> float:
        t_min = 20.0 * params.mechanical_period
        if self.t_observe is None:
            return 40.0 * params.mechanical_period
        if self.t_observe < t_min * (1 - 1e-9):
            raise ValueError("t_observe must cover at least 20 mechanical periods")
        return float(self.t_observe)

    def h_max(self, params: ModelParams) -> float:
        return self.max_step * params.mechanical_period

    def dt_sample(self, params: ModelParams) -> float:
        return params.mechanical_period / self.samples_per_period

    def settle_max(self, params: ModelParams) -> float:
        return 2000.0 / params.gamma_m if self.t_settle_max is None else float(self.t_settle_max)


class AttractorKind(str, enum.Enum):
    FIXED_POINT = "fixed_point"
    LIMIT_CYCLE = "limit_cycle"


@dataclass
class Trajectory:
    """Uniformly sampled classical trajectory; ``states`` has shape ``(n, 6)``."""

    t: np.ndarray
    states: np.ndarray
    params: ModelParams

    @property
    def q(self):
        return self.states[:, 4]

    @property
    def x1(self):
        return self.states[:, 0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def __len__(self):
        return self.t.size


@dataclass
class AttractorReport:
    kind: AttractorKind
    q0: float
    A: float
    period: float
    extrema_per_period: int
    variation: float
    fixed_point: np.ndarray | None = None
    max_lyapunov: float = math.nan
    state: np.ndarray | None = None  # a point on the attractor
    refined: bool = False

    @property
    def is_limit_cycle(self) -> bool:
        return self.kind is AttractorKind.LIMIT_CYCLE


# ---------------------------------------------------------------------------
# compiled right-hand sides for the extended systems


@njit(cache=True)
def _rhs_tangent(y, pr, out):
    # y = (state[6], tangent[6], log-growth accumulator)
    rhs_supermode_into(y[:6], pr, out[:6])
    S = np.empty((6, 6))
    drift_matrix_into(y[:6], pr, S)
    for i in range(6):
        acc = 0.0
        for j in range(6):
            acc += S[i, j] * y[6 + j]
        out[6 + i] = acc
    out[12] = 0.0


@njit(cache=True)
def _renormalize_tangent(y, pr):
    nrm = 0.0
    for i in range(6, 12):
        nrm += y[i] * y[i]
    nrm = np.sqrt(nrm)
    if nrm > 1e3 or nrm < 1e-3:
        for i in range(6, 12):
            y[i] /= nrm
        y[12] += np.log(nrm)
        return True
    return False


@njit(cache=True)
def _rhs_variational(y, pr, out):
    # y = (state[6], row-major monodromy[36])
    rhs_supermode_into(y[:6], pr, out[:6])
    S = np.empty((6, 6))
    drift_matrix_into(y[:6], pr, S)
    for i in range(6):
        for k in range(6):
            acc = 0.0
            for j in range(6):
                acc += S[i, j] * y[6 + 6 * j + k]
            out[6 + 6 * i + k] = acc


# ---------------------------------------------------------------------------
# integration


def random_initial_state(config: IntegratorConfig, rng=None) -> np.ndarray:
    """Uniform draw from ``[-init_scale, init_scale]`` for each component."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return rng.uniform(-config.init_scale, config.init_scale, 6)


def _sample_times(start, duration, dt):
    n = int(round(duration / dt))
    return start + dt * np.arange(n + 1)


def integrate_classical(
    params: ModelParams,
    initial=None,
    config: IntegratorConfig | None = None,
    *,
    t_start: float | None = None,
    duration: float | None = None,
) -> Trajectory:
    """Integrate the supermode mean-field equations from ``t = 0``.

    Samples are returned on a uniform grid over ``[t_start, t_start + duration]``
    (defaults: the post-transient observation window).

    Raises
    ------
    StepSizeUnderflow
        The adaptive step collapsed (stiffness).
    Unbounded
        The state norm exceeded ``config.max_norm``.
    """
    config = config or IntegratorConfig()
    if initial is None:
        initial = random_initial_state(config)
    t_start = config.transient(params) if t_start is None else float(t_start)
    duration = config.observe(params) if duration is None else float(duration)
    t_out = _sample_times(t_start, duration, config.dt_sample(params))
    _, samples = integrator.solve(
        rhs_supermode_into,
        np.asarray(initial, dtype=np.float64),
        0.0,
        t_out[-1],
        t_out,
        params.as_array(),
        rtol=config.rel_tol,
        atol=config.abs_tol,
        h_max=config.h_max(params),
        max_norm=config.max_norm,
    )
    return Trajectory(t_out, samples, params)


# ---------------------------------------------------------------------------
# signal analysis


def dominant_period(t, signal) -> float:
    """Period of the strongest non-DC spectral line.

    Uses a Hann window and Gaussian (log-parabolic) interpolation of the peak bin.
    Returns ``nan`` for a constant signal.
    """
    x = np.asarray(signal, dtype=np.float64)
    x = x - x.mean()
    if not np.any(x):
        return math.nan
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size)))
    k = int(np.argmax(spec[1:])) + 1
    shift = 0.0
    if 1 <= k < spec.size - 1:
        a, b, c = np.log(spec[k - 1 : k + 2] + 1e-300)
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    freq = (k + shift) / (x.size * dt)
    return 1.0 / freq


def count_extrema_per_period(signal, n_periods: float, prominence: float = 0.01) -> int:
    """Local maxima per period, ignoring ripples below ``prominence * ptp``."""
    x = np.asarray(signal, dtype=np.float64)
    span = np.ptp(x)
    if span == 0 or n_periods <= 0:
        return 0
    peaks, _ = find_peaks(x, prominence=prominence * span)
    return max(1, int(round(peaks.size / n_periods)))


# ---------------------------------------------------------------------------
# classification


def _whole_periods(trajectory: Trajectory, config: IntegratorConfig):
    """Slice covering the last integer number of nominal mechanical periods."""
    n_per = config.samples_per_period
    n_periods = (len(trajectory) - 1) // n_per
    stop = len(trajectory) - 1
    return slice(stop - n_periods * n_per, stop), n_periods


def classify_attractor(
    trajectory: Trajectory, params: ModelParams, config: IntegratorConfig | None = None
) -> AttractorReport:
    """Classify a post-transient trajectory as a fixed point or a limit cycle.

    Raises
    ------
    AmbiguousAttractor
        Peak-to-peak variation of ``q`` inside ``(eps_A, 2 eps_A)``; extend the
        observation window and retry.
    """
    config = config or IntegratorConfig()
    q = trajectory.q
    variation = float(np.ptp(q))
    eps = config.eps_A
    if variation < eps:
        return AttractorReport(
            kind=AttractorKind.FIXED_POINT,
            q0=float(q.mean()),
            A=0.0,  # residual motion is kept in `variation`
            period=math.nan,
            extrema_per_period=0,
            variation=variation,
            fixed_point=trajectory.final,
            state=trajectory.final,
        )
    if variation <= 2 * eps:
        raise AmbiguousAttractor(
            f"q peak-to-peak {variation:.3g} inside hysteresis band ({eps:g}, {2 * eps:g})",
            variation=variation,
        )
    # analyse an integer number of nominal periods
    sl, n_periods = _whole_periods(trajectory, config)
    period = dominant_period(trajectory.t[sl], q[sl])
    extrema = count_extrema_per_period(trajectory.x1[sl], n_periods)
    return AttractorReport(
        kind=AttractorKind.LIMIT_CYCLE,
        q0=float(q[sl].mean()),
        A=0.5 * variation,
        period=period,
        extrema_per_period=extrema,
        variation=variation,
        state=trajectory.final,
    )


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class PeriodicOrbit:
    state: np.ndarray  # point on the orbit with p = 0
    period: float
    multipliers: np.ndarray
    residual: float


def flow_with_monodromy(params: ModelParams, state, duration: float, config: IntegratorConfig):
    """Return ``(phi_T(state), M)`` where ``M`` is the monodromy matrix."""
    y0 = np.concatenate([np.asarray(state, dtype=np.float64), np.eye(6).ravel()])
    y_end, _ = integrator.solve(
        _rhs_variational,
        y0,
        0.0,
        duration,
        np.empty(0),
        params.as_array(),
        rtol=min(config.rel_tol, 1e-11),
        atol=min(config.abs_tol, 1e-13),
        h_max=config.h_max(params),
        max_norm=config.max_norm,
    )
    return y_end[:6], y_end[6:].reshape(6, 6)


def _deflation(x, equilibria):
    """Deflation factor ``prod(1/|x - x_i|^2 + 1)`` and its gradient."""
    m = 1.0
    grad = np.zeros(6)
    for xe in equilibria:
        diff = x - xe
        d2 = float(diff @ diff)
        mi = 1.0 / d2 + 1.0
        grad = grad * mi + m * (-2.0 * diff / d2**2)
        m *= mi
    return m, grad


def refine_limit_cycle(
    params: ModelParams,
    guess,
    period_guess: float,
    config: IntegratorConfig | None = None,
    *,
    equilibria=(),
    tol: float = 1e-9,
    max_iter: int = 60,
) -> PeriodicOrbit:
    """Newton shooting for a periodic orbit through the section ``p = 0``.

    Unknowns are the initial state and the period; the phase condition pins
    ``p(0) = 0``. Equilibria solve the shooting equations for any period, so the
    residual is deflated at each entry of ``equilibria`` to push Newton away
    from them. A backtracking line search keeps the deflated residual decreasing.

    Raises
    ------
    NotConverged
        Newton did not reach ``tol`` or ended on an equilibrium.
    """
    config = config or IntegratorConfig()
    equilibria = [np.asarray(e, dtype=np.float64) for e in equilibria]
    x = np.asarray(guess, dtype=np.float64).copy()
    T = float(period_guess)
    pr = params.as_array()
    f_end = np.empty(6)

    def evaluate(x, T):
        end, M = flow_with_monodromy(params, x, T, config)
        r = np.concatenate([end - x, [x[5]]])
        m, grad = _deflation(x, equilibria)
        return r, m, grad, end, M

    r, m, grad, end, M = evaluate(x, T)
    for _ in range(max_iter):
        scale = max(1.0, np.abs(x).max())
        if np.linalg.norm(r) < tol * scale:
            break
        rhs_supermode_into(end, pr, f_end)
        jac = np.zeros((7, 7))
        jac[:6, :6] = M - np.eye(6)
        jac[:6, 6] = f_end
        jac[6, 5] = 1.0
        jac = m * jac
        jac[:, :6] += np.outer(r, grad)
        g_norm = m * np.linalg.norm(r)
        try:
            step = np.linalg.solve(jac, -m * r)
        except np.linalg.LinAlgError as exc:
            raise NotConverged(f"singular shooting Jacobian: {exc}") from exc
        lam = 1.0
        while lam > 1e-4:
            x_try = x + lam * step[:6]
            T_try = T + lam * step[6]
            if T_try > 0:
                try:
                    trial = evaluate(x_try, T_try)
                except PhononLabError:
                    trial = None
                if trial is not None and trial[1] * np.linalg.norm(trial[0]) < (
                    1 - 1e-4 * lam
                ) * g_norm:
                    break
            lam *= 0.5
        else:
            raise NotConverged("line search failed in periodic-orbit shooting")
        x, T = x_try, T_try
        r, m, grad, end, M = trial
    else:
        raise NotConverged(f"shooting residual {np.linalg.norm(r):.3g} after {max_iter} iterations")
    rhs_supermode_into(x, pr, f_end)
    if np.linalg.norm(f_end) < 1e-6 * max(1.0, np.abs(x).max()):
        raise NotConverged("shooting ended on an equilibrium")
    return PeriodicOrbit(x, T, np.linalg.eigvals(M), float(np.linalg.norm(r)))


# ---------------------------------------------------------------------------
# Lyapunov exponent


def max_lyapunov_exponent(
    params: ModelParams, initial=None, config: IntegratorConfig | None = None
) -> float:
    """Largest Lyapunov exponent from tangent-vector growth with renormalisation.

    The tangent vector is evolved through the transient to align it with the
    dominant direction; growth is then accumulated over ``lyapunov_time``.

    Raises
    ------
    NotConverged
        Estimates from the first half and the full window differ by more than
        ``lyapunov_tol``.
    """
    config = config or IntegratorConfig()
    if initial is None:
        initial = random_initial_state(config)
    rng = np.random.default_rng(config.seed + 1)
    v = rng.standard_normal(6)
    y = np.concatenate([np.asarray(initial, dtype=np.float64), v / np.linalg.norm(v), [0.0]])
    pr = params.as_array()
    kw = dict(
        rtol=config.rel_tol,
        atol=config.abs_tol,
        h_max=config.h_max(params),
        post=_renormalize_tangent,
        max_norm=config.max_norm,
    )
    t0 = config.transient(params)
    y, _ = integrator.solve(_rhs_tangent, y, 0.0, t0, np.empty(0), pr, **kw)
    y[6:12] /= np.linalg.norm(y[6:12])
    y[12] = 0.0
    t_lyap = 20.0 / params.gamma_m if config.lyapunov_time is None else config.lyapunov_time
    estimates = []
    for t_end in (t0 + 0.5 * t_lyap, t0 + t_lyap):
        t_begin = t0 if not estimates else t0 + 0.5 * t_lyap
        y, _ = integrator.solve(_rhs_tangent, y, t_begin, t_end, np.empty(0), pr, **kw)
        growth = y[12] + math.log(np.linalg.norm(y[6:12]))
        estimates.append(growth / (t_end - t0))
    tol = 0.25 * params.gamma_m if config.lyapunov_tol is None else config.lyapunov_tol
    if abs(estimates[1] - estimates[0]) > tol:
        raise NotConverged(
            f"Lyapunov estimate drifted from {estimates[0]:.3g} to {estimates[1]:.3g}"
        )
    return float(estimates[1])


# ---------------------------------------------------------------------------
# full pipeline


def _settle(params, state, t_now, config):
    """Brute-force integration until the oscillation amplitude stops changing."""
    chunk = 10.0 / params.gamma_m
    t_limit = t_now + config.settle_max(params)
    window = config.observe(params)
    prev = None
    while True:
        traj = integrate_classical(params, state, config, t_start=chunk, duration=window)
        state = traj.final
        t_now += chunk + window
        amp = 0.5 * np.ptp(traj.q)
        if prev is not None and abs(amp - prev) < 1e-6 * max(amp, 1.0) + 0.1 * config.eps_A:
            return state, t_now
        if t_now > t_limit:
            log.warning("limit cycle amplitude not settled by t=%.3g", t_now)
            return state, t_now
        prev = amp


def simulate_attractor(
    params: ModelParams,
    initial=None,
    config: IntegratorConfig | None = None,
    *,
    lyapunov: bool = False,
) -> AttractorReport:
    """Integrate from (random) initial conditions and characterise the attractor.

    Oscillating trajectories are polished onto the exact periodic orbit by
    Newton shooting when ``config.refine_cycles`` is set; if shooting fails the
    trajectory is integrated further until the amplitude settles.
    """
    config = config or IntegratorConfig()
    if initial is None:
        initial = random_initial_state(config)
    traj = integrate_classical(params, initial, config)
    t_now = traj.t[-1]
    try:
        report = classify_attractor(traj, params, config)
    except AmbiguousAttractor:
        traj = integrate_classical(
            params, traj.final, config, t_start=config.transient(params)
        )
        t_now += traj.t[-1]
        try:
            report = classify_attractor(traj, params, config)
        except AmbiguousAttractor:
            report = _slow_transient_report(params, traj)
            if report is None:
                raise

    if report.is_limit_cycle and config.refine_cycles:
        orbit = find_stable_cycle(params, traj, report.period, config)
        slow = None if orbit is not None else _slow_transient_report(params, traj)
        if slow is not None:
            report = slow
        else:
            if orbit is None:
                log.info("shooting failed at %s; settling by integration", params)
                state, t_now = _settle(params, traj.final, t_now, config)
            else:
                state = orbit.state
            traj = integrate_classical(params, state, config, t_start=0.0)
            report = classify_attractor(traj, params, config)
            report.refined = orbit is not None
    if lyapunov:
        report.max_lyapunov = max_lyapunov_exponent(params, initial, config)
    return report


def _slow_transient_report(params, traj):
    """Fixed-point report for an oscillation that is still decaying.

    Just below threshold the stationary state is stable but the decay time
    ``1/|Re lambda|`` can exceed any affordable integration, so a trajectory
    that still oscillates is attributed to the nearest linearly stable
    stationary state when shooting finds no stable periodic orbit. Returns
    ``None`` if no stationary state is stable.
    """
    stable = [fp for fp in solve_fixed_point(params) if fp.stable]
    if not stable:
        return None
    centre = traj.states.mean(axis=0)
    fp = min(stable, key=lambda s: np.linalg.norm(s.state - centre))
    log.info(
        "slow transient at %s (growth rate %.3g); reporting the stable stationary state",
        params, fp.max_real,
    )
    return AttractorReport(
        kind=AttractorKind.FIXED_POINT,
        q0=fp.q,
        A=0.0,
        period=math.nan,
        extrema_per_period=0,
        variation=float(np.ptp(traj.q)),
        fixed_point=fp.state.copy(),
        state=fp.state.copy(),
    )


CYCLE_GUESS_SCALES = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def find_stable_cycle(params, traj, period_guess, config) -> PeriodicOrbit | None:
    """Polish an oscillating trajectory onto a stable periodic orbit.

    Near a Hopf point the trajectory is still spiralling out slowly and Newton
    heads back to the equilibrium from small amplitudes, so the deviation from
    the equilibrium is scaled up along a ladder; overshooting is harmless.
    Returns ``None`` when no stable orbit is found.
    """
    equilibria = [fp.state for fp in solve_fixed_point(params)]
    x = _section_point(traj)
    anchor = min(equilibria, key=lambda e: np.linalg.norm(x - e))
    for scale in CYCLE_GUESS_SCALES:
        guess = anchor + scale * (x - anchor)
        try:
            orbit = refine_limit_cycle(params, guess, period_guess, config, equilibria=equilibria)
        except (NotConverged, PhononLabError):
            continue
        if orbit_is_stable(orbit):
            return orbit
    return None


def orbit_is_stable(orbit: PeriodicOrbit, tol: float = 1e-9) -> bool:
    """All Floquet multipliers except the trivial one lie inside the unit circle."""
    mods = np.sort(np.abs(orbit.multipliers))[::-1]
    return bool(abs(mods[0] - 1.0) < 1e-4 and mods[1] < 1.0 - tol)


def _section_point(traj: Trajectory) -> np.ndarray:
    """Sample with the largest ``q`` in the last mechanical period (``p`` close to 0)."""
    dt = traj.t[1] - traj.t[0]
    n = max(2, int(round(traj.params.mechanical_period / dt)))
    tail = traj.q[-n:]
    return traj.states[len(traj) - n + int(np.argmax(tail))].copy()


# ---------------------------------------------------------------------------
# sweeps


def _sweep_point(value, *, path, template, config):
    params = path.params_at(template, value)
    return value, simulate_attractor(params, None, config)


def amplitude_sweep(
    template: ModelParams,
    path: PathSpec,
    config: IntegratorConfig | None = None,
    *,
    n_jobs: int | None = 1,
):
    """Attractor report at every grid value of ``path``, in grid order."""
    config = config or IntegratorConfig()
    values = np.asarray(path.values, dtype=np.float64)
    if values.size > 1 and np.any(np.diff(values) <= 0):
        raise ValueError("sweep grid must be strictly increasing")
    worker = partial(_sweep_point, path=path, template=template, config=config)
    return pmap(worker, list(values), n_jobs)


def fit_scaling_exponent(
    values, amplitudes, threshold: float, n_points: int = 10, max_distance: float | None = None
):
    """Log-log fit ``A = c |value - threshold|^beta`` on the points nearest threshold.

    Only points with ``A > 0`` (and within ``max_distance`` of the threshold,
    if given) are used. Returns ``(beta, c)``.
    """
    values = np.asarray(values, dtype=np.float64)
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    dist = np.abs(values - threshold)
    mask = (amplitudes > 0) & (dist > 0)
    if max_distance is not None:
        mask &= dist <= max_distance
    if mask.sum() < 2:
        raise ValueError("need at least two lasing points for the fit")
    order = np.argsort(dist[mask])[:n_points]
    x = np.log(dist[mask][order])
    y = np.log(amplitudes[mask][order])
    beta, logc = np.polyfit(x, y, 1)
    return float(beta), float(math.exp(logc))


@dataclass
class ScalingFit:
    threshold: float
    side: int  # +1: lasing above the threshold, -1: below
    exponent: float
    prefactor: float
    n_points: int


def scaling_fits(
    template: ModelParams,
    path: PathSpec,
    values,
    amplitudes,
    *,
    rel_window: float = 0.05,
    n_points: int = 10,
) -> list[ScalingFit]:
    """Near-threshold amplitude exponents at every Hopf crossing inside the cut.

    Thresholds are the eigenvalue crossings of the stationary state along
    ``path``; each fit uses up to ``n_points`` lasing points within
    ``rel_window * |threshold|`` on the lasing side.
    """
    values = np.asarray(values, dtype=np.float64)
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    base = path.base_params(template)
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return []
    fits = []
    for th in threshold_crossings(base, path.swept, lo, hi, method="eigen"):
        h = 1e-6 * max(1.0, abs(th))
        growth = max_real_eigenvalue(base.replace(**{path.swept: th + h}))
        side = 1 if growth > 0 else -1
        mask = (side * (values - th) > 0) & (np.abs(values - th) <= rel_window * abs(th))
        try:
            beta, c = fit_scaling_exponent(values[mask], amplitudes[mask], th, n_points)
        except ValueError:
            beta, c = math.nan, math.nan
        fits.append(ScalingFit(th, side, beta, c, int(min(mask.sum(), n_points))))
    return fits
