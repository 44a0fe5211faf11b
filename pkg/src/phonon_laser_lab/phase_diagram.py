"""Region I / region II map of the (Lambda, Delta) plane."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import brentq

from .dynamics import AttractorKind, IntegratorConfig, simulate_attractor
from .errors import PhononLabError
from .fixed_points import max_real_eigenvalue, solve_fixed_point
from .model import ModelParams
from .parallel import pmap

log = logging.getLogger(__name__)

REGION_UNKNOWN = 0
REGION_I = 1  # a linearly stable stationary state exists
REGION_II = 2  # every stationary state is unstable: limit cycle


@dataclass
class CrossCheck:
    """Time-integration verdict for one cell of the diagram."""

    i: int  # Delta index
    j: int  # Lambda index
    eigen_region: int
    integration_region: int
    near_boundary: bool

    @property
    def agree(self) -> bool:
        return self.eigen_region == self.integration_region


@dataclass
class PhaseDiagram:
    """Cell classification on a ``(Delta, Lambda)`` grid.

    ``region`` and ``max_real`` have shape ``(Delta.size, Lambda.size)``.
    ``max_real`` is the largest growth rate at the least unstable stationary
    state (``nan`` for unknown cells). ``threshold[i]`` is the first lasing
    threshold in ``Lambda`` on row ``i``, or ``nan`` if the row never lases.
    """

    Lambda: np.ndarray
    Delta: np.ndarray
    region: np.ndarray
    max_real: np.ndarray
    threshold: np.ndarray
    crosscheck: list = field(default_factory=list)

    @property
    def unknown_fraction(self) -> float:
        return float(np.mean(self.region == REGION_UNKNOWN))

    @property
    def discrepancies(self) -> list:
        """Cross-checked cells away from the boundary where the two methods disagree."""
        return [c for c in self.crosscheck if not c.agree and not c.near_boundary]

    def region_at(self, Lambda: float, Delta: float) -> int:
        j = int(np.argmin(np.abs(self.Lambda - Lambda)))
        i = int(np.argmin(np.abs(self.Delta - Delta)))
        return int(self.region[i, j])

    def near_boundary(self, i: int, j: int) -> bool:
        """True when a neighbouring cell (8-neighbourhood) has a different region."""
        r = self.region[i, j]
        block = self.region[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2]
        return bool(np.any(block != r))


def classify_cell(params: ModelParams) -> tuple[int, float]:
    """``(region, max_real)`` from the stationary states' spectra."""
    try:
        roots = solve_fixed_point(params)
    except PhononLabError as exc:
        log.warning("cell Lambda=%g Delta=%g unknown: %s", params.Lambda, params.Delta, exc)
        return REGION_UNKNOWN, math.nan
    region = REGION_I if any(fp.stable for fp in roots) else REGION_II
    return region, min(fp.max_real for fp in roots)


def _row_threshold(template, Delta, Lambdas, regions, max_real):
    """First I -> II transition along the row, refined by bisection."""
    for j in range(len(Lambdas) - 1):
        if regions[j] == REGION_I and regions[j + 1] == REGION_II:
            lo, hi = Lambdas[j], Lambdas[j + 1]
            if max_real[j] == 0.0:
                return lo
            f = lambda L: max_real_eigenvalue(template.replace(Lambda=L, Delta=Delta))  # noqa: E731
            try:
                return brentq(f, lo, hi, xtol=1e-9, rtol=1e-12)
            except (ValueError, PhononLabError):
                return 0.5 * (lo + hi)
    return math.nan


def _row(Delta, *, template, Lambdas):
    regions = np.empty(len(Lambdas), dtype=np.int64)
    max_real = np.empty(len(Lambdas))
    for j, L in enumerate(Lambdas):
        regions[j], max_real[j] = classify_cell(template.replace(Lambda=float(L), Delta=float(Delta)))
    return regions, max_real, _row_threshold(template, Delta, Lambdas, regions, max_real)


def _integration_region(args):
    params, config = args
    try:
        report = simulate_attractor(params, None, config)
    except PhononLabError as exc:
        log.warning("cross-check failed at %s: %s", params, exc)
        return REGION_UNKNOWN
    return REGION_I if report.kind is AttractorKind.FIXED_POINT else REGION_II


def sweep_phase_diagram(
    template: ModelParams,
    Lambda_range=(0.0, 12.0),
    Delta_range=(8.0, 12.0),
    resolution=(121, 81),
    *,
    crosscheck_fraction: float = 0.01,
    config: IntegratorConfig | None = None,
    n_jobs: int | None = 1,
) -> PhaseDiagram:
    """Classify every cell of a ``Lambda x Delta`` grid by linear stability.

    A seeded random ``crosscheck_fraction`` of the cells is re-classified by
    long-time integration from random initial conditions. Cells where the two
    verdicts differ are reported in :attr:`PhaseDiagram.discrepancies` (unless
    they touch the boundary) and never overwritten.
    """
    n_L, n_D = (int(r) for r in resolution)
    if n_L < 1 or n_D < 1:
        raise ValueError("resolution must be positive")
    if not 0.0 <= crosscheck_fraction <= 1.0:
        raise ValueError("crosscheck_fraction must lie in [0, 1]")
    config = config or IntegratorConfig()
    Lambdas = np.linspace(*Lambda_range, n_L)
    Deltas = np.linspace(*Delta_range, n_D)
    rows = pmap(partial(_row, template=template, Lambdas=Lambdas), list(Deltas), n_jobs)
    region = np.array([r[0] for r in rows]).reshape(n_D, n_L)
    max_real = np.array([r[1] for r in rows]).reshape(n_D, n_L)
    threshold = np.array([r[2] for r in rows])
    diagram = PhaseDiagram(Lambdas, Deltas, region, max_real, threshold)

    n_check = int(round(crosscheck_fraction * region.size))
    if n_check:
        rng = np.random.default_rng(config.seed)
        cells = np.sort(rng.choice(region.size, size=n_check, replace=False))
        idx = [divmod(int(c), n_L) for c in cells]
        items = [
            (template.replace(Lambda=float(Lambdas[j]), Delta=float(Deltas[i])), config)
            for i, j in idx
        ]
        verdicts = pmap(_integration_region, items, n_jobs)
        for (i, j), v in zip(idx, verdicts):
            check = CrossCheck(i, j, int(region[i, j]), v, diagram.near_boundary(i, j))
            diagram.crosscheck.append(check)
            if not check.agree:
                log.warning(
                    "phase diagram disagreement at Lambda=%g Delta=%g: eigen %d, integration %d",
                    Lambdas[j], Deltas[i], check.eigen_region, v,
                )
    return diagram
