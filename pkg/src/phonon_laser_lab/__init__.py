"""Classical dynamics and fluctuation entanglement of a two-cavity phonon laser.

Rates are in units of the cavity decay ``kappa``; see :mod:`phonon_laser_lab.model`.
"""

from .dynamics import (
    AttractorKind,
    AttractorReport,
    IntegratorConfig,
    Trajectory,
    amplitude_sweep,
    classify_attractor,
    fit_scaling_exponent,
    integrate_classical,
    max_lyapunov_exponent,
    simulate_attractor,
)
from .entanglement import (
    EntanglementConfig,
    EntanglementTrace,
    boundary_constant_scan,
    boundary_samples,
    entanglement_trace,
    fluctuation_radius,
    integrate_covariance,
    log_negativity,
    steady_lyapunov_solve,
    temperature_sweep,
)
from .errors import PhononLabError
from .fixed_points import (
    FixedPointSolution,
    find_threshold,
    gamma_opt,
    solve_fixed_point,
    stability_eigenvalues,
)
from .model import (
    ModelParams,
    build_diffusion_matrix,
    build_drift_matrix,
    classical_rhs_baremode,
    classical_rhs_supermode,
    inverse_supermode_transform,
    nbar_from_ratio,
    supermode_transform,
)
from .paths import PATH1, PATH2, PATH3, PathSpec, get_path
from .phase_diagram import PhaseDiagram, sweep_phase_diagram

__version__ = "0.1.0"

__all__ = [
    "AttractorKind",
    "AttractorReport",
    "EntanglementConfig",
    "EntanglementTrace",
    "FixedPointSolution",
    "IntegratorConfig",
    "ModelParams",
    "PATH1",
    "PATH2",
    "PATH3",
    "PathSpec",
    "PhaseDiagram",
    "PhononLabError",
    "Trajectory",
    "amplitude_sweep",
    "boundary_constant_scan",
    "boundary_samples",
    "build_diffusion_matrix",
    "build_drift_matrix",
    "classical_rhs_baremode",
    "classical_rhs_supermode",
    "classify_attractor",
    "entanglement_trace",
    "find_threshold",
    "fit_scaling_exponent",
    "fluctuation_radius",
    "gamma_opt",
    "get_path",
    "integrate_classical",
    "integrate_covariance",
    "inverse_supermode_transform",
    "log_negativity",
    "max_lyapunov_exponent",
    "nbar_from_ratio",
    "simulate_attractor",
    "solve_fixed_point",
    "stability_eigenvalues",
    "steady_lyapunov_solve",
    "sweep_phase_diagram",
    "supermode_transform",
    "temperature_sweep",
]
