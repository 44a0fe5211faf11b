"""Two-cavity optomechanical phonon-laser model.

All rates are in units of the cavity decay rate (``KAPPA == 1``) and time is in
units of ``1/KAPPA``.

State vectors are plain ``float64`` arrays of length six:

* supermode basis ``(x1, y1, x2, y2, q, p)`` with ``c_j = x_j + i y_j``
* bare-mode basis ``(Re a1, Im a1, Re a2, Im a2, q, p)``

where ``c1 = (a1 + a2)/sqrt(2)`` and ``c2 = (a1 - a2)/sqrt(2)``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

KAPPA = 1.0
SQRT2 = math.sqrt(2.0)
MIN_QUALITY_FACTOR = 100.0

# coordinates of the optical fluctuations in the drift matrix
QUADRATURE = "quadrature"
AMPLITUDE = "amplitude"
CONVENTIONS = (QUADRATURE, AMPLITUDE)

# indices into the packed parameter array used by the compiled kernels
P_J, P_WM, P_G, P_GM, P_DELTA, P_LAMBDA, P_NBAR = range(7)
X1, Y1, X2, Y2, Q, P = range(6)


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the phonon laser, in units of kappa.

    Parameters
    ----------
    J : float
        Tunnelling rate between the two cavities.
    omega_m : float
        Mechanical frequency.
    g : float
        Optomechanical coupling of cavity 2.
    gamma_m : float
        Mechanical damping rate.
    Delta : float
        Laser detuning ``omega_L - omega_a`` (any sign).
    Lambda : float
        Drive amplitude on cavity 1.
    nbar : float
        Mean thermal phonon occupation.
    """

    J: float = 10.0
    omega_m: float = 20.0
    g: float = 0.02
    gamma_m: float = 0.01
    Delta: float = 10.0
    Lambda: float = 3.0
    nbar: float = 0.0

    def __post_init__(self):
        for name in ("J", "omega_m", "g", "gamma_m", "Delta", "Lambda", "nbar"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        for name in ("J", "omega_m", "gamma_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        # g = 0 and Lambda = 0 are the decoupled/undriven limits
        for name in ("g", "Lambda", "nbar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.quality_factor < MIN_QUALITY_FACTOR:
            warnings.warn(
                f"mechanical quality factor {self.quality_factor:.3g} < "
                f"{MIN_QUALITY_FACTOR:g}; Markovian Brownian noise is a poor "
                "approximation",
                RuntimeWarning,
                stacklevel=3,
            )

    @classmethod
    def reference(cls, **overrides) -> "ModelParams":
        """Reference parameter set J=10, omega_m=20, g=0.02, gamma_m=0.01."""
        return cls(**overrides)

    @property
    def quality_factor(self) -> float:
        return self.omega_m / self.gamma_m

    @property
    def mechanical_period(self) -> float:
        return 2.0 * math.pi / self.omega_m

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.J, self.omega_m, self.g, self.gamma_m, self.Delta, self.Lambda, self.nbar],
            dtype=np.float64,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def make_state(c1=0j, c2=0j, q=0.0, p=0.0) -> np.ndarray:
    """Pack supermode amplitudes and mechanical quadratures into a state vector."""
    c1, c2 = complex(c1), complex(c2)
    return np.array([c1.real, c1.imag, c2.real, c2.imag, q, p], dtype=np.float64)


def amplitudes(state) -> tuple[complex, complex]:
    """Return the complex supermode amplitudes ``(c1, c2)`` of a state vector."""
    s = np.asarray(state, dtype=np.float64)
    return complex(s[X1], s[Y1]), complex(s[X2], s[Y2])


def alpha2(state) -> complex:
    """Mean amplitude of the mechanically coupled bare mode, ``(c1 - c2)/sqrt(2)``."""
    c1, c2 = amplitudes(state)
    return (c1 - c2) / SQRT2


# ---------------------------------------------------------------------------
# compiled kernels; `pr` is ModelParams.as_array()


@njit(cache=True)
def rhs_supermode_into(y, pr, out):
    J, wm, g, gm, D, L = pr[0], pr[1], pr[2], pr[3], pr[4], pr[5]
    x1, y1, x2, y2, q, p = y[0], y[1], y[2], y[3], y[4], y[5]
    dx = x1 - x2
    dy = y1 - y2
    drive = L / SQRT2
    hk = 0.5 * KAPPA
    gq = 0.5 * g * q
    out[0] = -(D - J) * y1 - hk * x1 - gq * dy + drive
    out[1] = (D - J) * x1 - hk * y1 + gq * dx
    out[2] = -(D + J) * y2 - hk * x2 + gq * dy + drive
    out[3] = (D + J) * x2 - hk * y2 - gq * dx
    out[4] = wm * p
    out[5] = -wm * q - gm * p + 0.5 * g * (dx * dx + dy * dy)


@njit(cache=True)
def rhs_baremode_into(y, pr, out):
    J, wm, g, gm, D, L = pr[0], pr[1], pr[2], pr[3], pr[4], pr[5]
    u1, v1, u2, v2, q, p = y[0], y[1], y[2], y[3], y[4], y[5]
    hk = 0.5 * KAPPA
    # a1' = (i D - k/2) a1 - i J a2 + L
    out[0] = -D * v1 - hk * u1 + J * v2 + L
    out[1] = D * u1 - hk * v1 - J * u2
    # a2' = (i D - k/2) a2 - i J a1 + i g q a2
    out[2] = -(D + g * q) * v2 - hk * u2 + J * v1
    out[3] = (D + g * q) * u2 - hk * v2 - J * u1
    out[4] = wm * p
    out[5] = g * (u2 * u2 + v2 * v2) - wm * q - gm * p


@njit(cache=True)
def drift_matrix_into(y, pr, S):
    J, wm, g, gm, D = pr[0], pr[1], pr[2], pr[3], pr[4]
    q = y[4]
    dx = y[0] - y[2]
    dy = y[1] - y[3]
    hk = 0.5 * KAPPA
    h = 0.5 * g * q
    for i in range(6):
        for j in range(6):
            S[i, j] = 0.0
    S[0, 0] = -hk
    S[0, 1] = -(D - J) - h
    S[0, 3] = h
    S[0, 4] = -0.5 * g * dy
    S[1, 0] = (D - J) + h
    S[1, 1] = -hk
    S[1, 2] = -h
    S[1, 4] = 0.5 * g * dx
    S[2, 1] = h
    S[2, 2] = -hk
    S[2, 3] = -(D + J) - h
    S[2, 4] = 0.5 * g * dy
    S[3, 0] = -h
    S[3, 2] = (D + J) + h
    S[3, 3] = -hk
    S[3, 4] = -0.5 * g * dx
    S[4, 5] = wm
    S[5, 0] = g * dx
    S[5, 1] = g * dy
    S[5, 2] = -g * dx
    S[5, 3] = -g * dy
    S[5, 4] = -wm
    S[5, 5] = -gm


@njit(cache=True)
def quadrature_drift_into(y, pr, scale, S):
    drift_matrix_into(y, pr, S)
    if scale != 1.0:
        for i in range(4):
            S[i, 4] *= scale
            S[5, i] /= scale


# ---------------------------------------------------------------------------
# public API


def _as_state(state) -> np.ndarray:
    s = np.ascontiguousarray(state, dtype=np.float64)
    if s.shape != (6,):
        raise ValueError(f"state must have shape (6,), got {s.shape}")
    return s


def classical_rhs_supermode(params: ModelParams, state) -> np.ndarray:
    """Time derivative of the supermode mean fields ``(x1, y1, x2, y2, q, p)``."""
    out = np.empty(6)
    rhs_supermode_into(_as_state(state), params.as_array(), out)
    return out


def classical_rhs_baremode(params: ModelParams, state) -> np.ndarray:
    """Time derivative of the bare-mode mean fields with mean-field radiation pressure."""
    out = np.empty(6)
    rhs_baremode_into(_as_state(state), params.as_array(), out)
    return out


_MIX = np.array(
    [
        [1.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, SQRT2, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, SQRT2],
    ]
) / SQRT2


def supermode_transform(bare_state) -> np.ndarray:
    """Map a bare-mode state to the supermode basis.

    The mixing matrix is real, orthogonal and symmetric, so it is its own inverse.
    """
    return _MIX @ _as_state(bare_state)


def inverse_supermode_transform(state) -> np.ndarray:
    return _MIX.T @ _as_state(state)


def coupling_scale(convention: str) -> float:
    """Factor relating amplitude and quadrature fluctuation coordinates."""
    if convention == QUADRATURE:
        return SQRT2
    if convention == AMPLITUDE:
        return 1.0
    raise ValueError(f"unknown convention {convention!r}; expected {CONVENTIONS}")


def build_drift_matrix(params: ModelParams, state, convention: str = QUADRATURE) -> np.ndarray:
    """Drift matrix S of the linearized fluctuations around ``state``.

    Ordered ``(dX1, dY1, dX2, dY2, dq, dp)``.

    ``convention="amplitude"`` returns the Jacobian of
    :func:`classical_rhs_supermode` in the ``(x, y) = (Re c, Im c)``
    coordinates, entry for entry. ``convention="quadrature"`` (default) rescales
    the optical fluctuations to ``dX = (dc + dc^dag)/sqrt(2) = sqrt(2) dx``, the
    coordinates in which the optical diffusion is ``kappa/2``; only the
    optomechanical couplings change (``g dy/2 -> g dy/sqrt(2)`` and
    ``g dx -> g dx/sqrt(2)``). The two are similar matrices, so stability is
    unaffected, but only the quadrature form yields covariances that obey the
    uncertainty relation together with :func:`build_diffusion_matrix`.
    """
    S = np.empty((6, 6))
    quadrature_drift_into(_as_state(state), params.as_array(), coupling_scale(convention), S)
    return S


def build_diffusion_matrix(params: ModelParams) -> np.ndarray:
    """Diagonal diffusion matrix ``diag(k/2, k/2, k/2, k/2, 0, gamma_m (2 nbar + 1))``."""
    if params.nbar < 0:
        raise ValueError("nbar must be non-negative")
    return np.diag([0.5 * KAPPA] * 4 + [0.0, params.gamma_m * (2.0 * params.nbar + 1.0)])


def nbar_from_ratio(hbar_omega_over_kT: float) -> float:
    """Bose-Einstein occupation ``1/(exp(x) - 1)`` for ``x = hbar omega_m / k_B T``."""
    x = float(hbar_omega_over_kT)
    if not x > 0:
        raise ValueError("hbar*omega/kT must be strictly positive")
    return 1.0 / math.expm1(x)
