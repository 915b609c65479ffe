"""Trapping regions for lossless quadratic dynamical systems via convex optimization."""

from .conic import SolverOptions
from .errors import (
    DegenerateEllipsoidError,
    DimensionError,
    DivergenceError,
    InconsistencyError,
    LosslessError,
    NotNegativeDefiniteError,
    SolverError,
    SystemFormatError,
    TrapdynError,
)
from .kernels import BACKEND
from .model import (
    EnergyEllipsoid,
    LosslessQuadraticSystem,
    ShiftedForm,
    ellipsoid_E,
    energy_rate,
    eval_rhs,
    load_system,
    lossless_defect,
    save_system,
    shift,
)
from .opt import (
    AnalysisReport,
    CriticalSphere,
    ExistenceResult,
    TrappingRegion,
    TrappingStatus,
    analyze,
    conservative_radius,
    critical_sphere,
    solve_existence,
    tight_radius_scalar,
    tight_radius_sdp,
)
from .sim import Trajectory, integrate

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "BACKEND", "CriticalSphere", "DegenerateEllipsoidError", "DimensionError",
    "DivergenceError", "EnergyEllipsoid", "ExistenceResult", "InconsistencyError",
    "LosslessError", "LosslessQuadraticSystem", "NotNegativeDefiniteError", "ShiftedForm",
    "SolverError", "SolverOptions", "SystemFormatError", "Trajectory", "TrapdynError",
    "TrappingRegion", "TrappingStatus", "analyze", "conservative_radius", "critical_sphere",
    "ellipsoid_E", "energy_rate", "eval_rhs", "integrate", "load_system", "lossless_defect",
    "save_system", "shift", "solve_existence", "tight_radius_scalar", "tight_radius_sdp",
]
