"""Adaptive Dormand-Prince 5(4) stepper with 4th-order dense output.

The stepper is compiled with numba and takes the right-hand side as a compiled
function ``rhs(y, pr, out)``. A second compiled hook ``post(y, pr) -> bool`` runs
after each accepted step and may modify the state in place (renormalisation,
symmetrisation); returning True forces the FSAL derivative to be recomputed.

Output is produced only at the requested sample times, so very long transients
cost no memory.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import StepSizeUnderflow, Unbounded

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_UNBOUNDED = 2

# Butcher tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# 5th-order minus embedded 4th-order weights
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# continuous extension (Hairer, Norsett & Wanner)
D1, D3, D4, D5, D6, D7 = (
    -12715105075.0 / 11282082432.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
)


@njit(cache=True)
def no_post(y, pr):
    return False


@njit(cache=True)
def _initial_step(rhs, y0, f0, t0, pr, rtol, atol, h_max):
    n = y0.size
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol[i] + rtol[i] * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, h_max)
    y1 = y0 + h0 * f0
    f1 = np.empty(n)
    rhs(y1, pr, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol[i] + rtol[i] * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, h_max)


@njit(cache=True)
def dopri5(rhs, post, y0, t0, t_end, t_out, pr, rtol, atol, h_max, max_norm):
    """Integrate from ``t0`` to ``t_end`` sampling at sorted times ``t_out``.

    ``rtol`` and ``atol`` are per-component arrays.

    Returns ``(y_end, samples, status, t_stop, n_accepted, n_rejected)``.
    """
    n = y0.size
    n_out = t_out.size
    samples = np.full((n_out, n), np.nan)
    y = y0.copy()
    post(y, pr)
    t = t0
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    yt = np.empty(n)
    y_new = np.empty(n)
    rhs(y, pr, k1)

    idx = 0
    while idx < n_out and t_out[idx] <= t0:
        if t_out[idx] == t0:
            samples[idx, :] = y
        idx += 1

    if t_end <= t0:
        return y, samples, STATUS_OK, t, 0, 0

    h = _initial_step(rhs, y, k1, t0, pr, rtol, atol, h_max)
    n_acc = 0
    n_rej = 0
    last_rejected = False
    while t < t_end:
        final = False
        # absorb a sliver of the interval into the last step
        if t + h * (1.0 + 1e-6) >= t_end:
            h = t_end - t
            final = True
        if h < 1e-14 * max(1.0, abs(t)):
            return y, samples, STATUS_UNDERFLOW, t, n_acc, n_rej

        for i in range(n):
            yt[i] = y[i] + h * A21 * k1[i]
        rhs(yt, pr, k2)
        for i in range(n):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(yt, pr, k3)
        for i in range(n):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(yt, pr, k4)
        for i in range(n):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(yt, pr, k5)
        for i in range(n):
            yt[i] = y[i] + h * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        rhs(yt, pr, k6)
        for i in range(n):
            y_new[i] = y[i] + h * (
                A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]
            )
        rhs(y_new, pr, k7)

        err = 0.0
        finite = True
        for i in range(n):
            e = h * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            sc = atol[i] + rtol[i] * max(abs(y[i]), abs(y_new[i]))
            err += (e / sc) ** 2
            if not np.isfinite(y_new[i]):
                finite = False
        err = np.sqrt(err / n)
        if not finite:
            err = 1e10

        if err <= 1.0:
            # land exactly on t_end; t + (t_end - t) can fall one ulp short
            t_new = t_end if final else t + h
            # dense output on (t, t_new]
            while idx < n_out and t_out[idx] <= t_new:
                th = (t_out[idx] - t) / h
                th1 = 1.0 - th
                for i in range(n):
                    ydiff = y_new[i] - y[i]
                    bspl = h * k1[i] - ydiff
                    r4 = ydiff - h * k7[i] - bspl
                    r5 = h * (
                        D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]
                    )
                    samples[idx, i] = y[i] + th * (
                        ydiff + th1 * (bspl + th * (r4 + th1 * r5))
                    )
                idx += 1
            t = t_new
            nrm = 0.0
            for i in range(n):
                y[i] = y_new[i]
                k1[i] = k7[i]
                nrm = max(nrm, abs(y[i]))
            if nrm > max_norm:
                return y, samples, STATUS_UNBOUNDED, t, n_acc, n_rej
            if post(y, pr):
                rhs(y, pr, k1)
            n_acc += 1
            fac = 0.9 * err ** -0.2 if err > 0 else 10.0
            fac = min(10.0, max(0.2, fac))
            if last_rejected:
                fac = min(fac, 1.0)
            h = min(h * fac, h_max)
            last_rejected = False
        else:
            n_rej += 1
            fac = max(0.2, 0.9 * err ** -0.2)
            h = h * fac
            last_rejected = True
    return y, samples, STATUS_OK, t, n_acc, n_rej


def solve(rhs, y0, t0, t_end, t_out, pr, *, rtol, atol, h_max, post=no_post, max_norm=1e12):
    """Python front end to :func:`dopri5` that raises on failure.

    ``rtol`` and ``atol`` may be scalars or per-component arrays.
    """
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    rtol = np.ascontiguousarray(np.broadcast_to(np.asarray(rtol, dtype=np.float64), y0.shape))
    atol = np.ascontiguousarray(np.broadcast_to(np.asarray(atol, dtype=np.float64), y0.shape))
    t_out = np.ascontiguousarray(t_out, dtype=np.float64)
    if t_out.size and np.any(np.diff(t_out) < 0):
        raise ValueError("sample times must be sorted")
    y_end, samples, status, t_stop, _, _ = dopri5(
        rhs, post, y0, float(t0), float(t_end), t_out, pr, rtol, atol,
        float(h_max), float(max_norm),
    )
    if status == STATUS_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow at t={t_stop:.6g}", t=t_stop)
    if status == STATUS_UNBOUNDED:
        raise Unbounded(f"state norm exceeded {max_norm:g} at t={t_stop:.6g}", t=t_stop)
    return y_end, samples
