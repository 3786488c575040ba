"""Lagrangian solver for cylindrically symmetric relativistic Euler flow with a physical vacuum."""

from .errors import (
    BoundsViolation,
    ConfigError,
    DensityBreakdownError,
    DomainError,
    NonFiniteError,
    PositivityLossError,
    RelvacError,
    ShapeError,
    ShellCrossingError,
    SolverError,
    SuperluminalError,
)
from .grid_ops import Grid
from .thermo import INFINITE_C, InitialData, PhysParams, State, builtin_data, demo_data
from .records import RunRecord
from .dynamics import advance, rhs, step

__all__ = [
    "BoundsViolation",
    "ConfigError",
    "DensityBreakdownError",
    "DomainError",
    "NonFiniteError",
    "PositivityLossError",
    "RelvacError",
    "ShapeError",
    "ShellCrossingError",
    "SolverError",
    "SuperluminalError",
    "Grid",
    "INFINITE_C",
    "InitialData",
    "PhysParams",
    "State",
    "builtin_data",
    "demo_data",
    "RunRecord",
    "advance",
    "rhs",
    "step",
]
