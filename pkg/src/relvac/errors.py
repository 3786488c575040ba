"""Exception hierarchy shared by the solver, diagnostics and harness."""

from __future__ import annotations


class RelvacError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(RelvacError, ValueError):
    """A nodal field does not match the grid it is paired with."""


class DomainError(RelvacError, ValueError):
    """An argument lies outside the admissible range of a formula."""


class ConfigError(RelvacError, ValueError):
    """A run configuration or sweep specification is malformed."""


class SolverError(RelvacError):
    """A physical admissibility condition failed during a step.

    ``node`` and ``t`` locate the first offending node when known.
    """

    reason = "solver-error"

    def __init__(self, message: str, node: int | None = None, t: float | None = None):
        self.node = node
        self.t = t
        where = []
        if node is not None:
            where.append(f"node={node}")
        if t is not None:
            where.append(f"t={t:.6g}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SuperluminalError(SolverError):
    reason = "superluminal"


class PositivityLossError(SolverError):
    reason = "positivity-loss"


class ShellCrossingError(SolverError):
    reason = "shell-crossing"


class DensityBreakdownError(SolverError):
    reason = "density-breakdown"


class NonFiniteError(SolverError):
    reason = "non-finite"


class BoundsViolation(SolverError):
    """Raised only when a run is asked to stop on a failed bounds monitor."""

    reason = "bounds-violation"
