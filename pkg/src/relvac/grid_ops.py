"""Uniform reference grid on [0, 1] with second-order difference operators.

The Lagrangian label ``x`` never moves, so every field in the package lives on
one static set of nodes ``x_i = i / n_cells``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "Grid",
    "deriv",
    "second_deriv",
    "integrate",
    "distance",
    "cutoff_interior",
    "cutoff_interior_deriv",
    "cutoff_boundary",
    "cutoff_boundary_deriv",
]


@dataclass(frozen=True)
class Grid:
    """Nodes, spacing and cut-off half-width of the reference interval.

    ``delta0`` is the optional interior-positivity radius; when given, the
    cut-off width must satisfy ``2 * delta <= delta0``.
    """

    n_cells: int
    delta: float = 0.125
    delta0: float | None = None
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise DomainError(f"n_cells must be an integer >= 4, got {self.n_cells}")
        if not 0.0 < self.delta <= 0.25:
            raise DomainError(f"delta must lie in (0, 1/4], got {self.delta}")
        if self.delta0 is not None and 2.0 * self.delta > self.delta0:
            raise DomainError(
                f"cut-off width 2*delta={2 * self.delta} exceeds positivity radius {self.delta0}"
            )
        nodes = np.arange(self.n_cells + 1, dtype=float) / self.n_cells
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "dx", 1.0 / self.n_cells)

    @property
    def size(self) -> int:
        return self.n_cells + 1

    def check(self, f, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise ShapeError(f"{name} has shape {f.shape}, expected ({self.size},)")
        return f


def deriv(f, grid: Grid) -> np.ndarray:
    """First derivative: centred in the interior, one-sided 3-point at the ends."""
    f = grid.check(f)
    h2 = 2.0 * grid.dx
    df = np.empty_like(f)
    df[1:-1] = (f[2:] - f[:-2]) / h2
    df[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / h2
    df[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / h2
    return df


def second_deriv(f, grid: Grid) -> np.ndarray:
    """Compact second derivative; 4-point one-sided closures keep order 2 at the ends."""
    f = grid.check(f)
    h = grid.dx
    d2 = np.empty_like(f)
    d2[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    d2[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return d2


def integrate(f, grid: Grid) -> float:
    """Composite trapezoid rule over [0, 1]."""
    f = grid.check(f)
    return float(np.trapezoid(f, dx=grid.dx))


def distance(grid: Grid) -> np.ndarray:
    """Distance to the boundary {0, 1}: ``min(x, 1 - x)``."""
    x = grid.nodes
    return np.minimum(x, 1.0 - x)


def _smoothstep(theta):
    theta = np.clip(theta, 0.0, 1.0)
    return theta * theta * (3.0 - 2.0 * theta)


def _smoothstep_deriv(theta):
    inside = (theta > 0.0) & (theta < 1.0)
    return np.where(inside, 6.0 * theta * (1.0 - theta), 0.0)


def cutoff_interior(grid: Grid) -> np.ndarray:
    """xi: 1 on [0, delta], 0 on [2 delta, 1], C1 cubic ramp in between."""
    theta = (grid.nodes - grid.delta) / grid.delta
    return 1.0 - _smoothstep(theta)


def cutoff_interior_deriv(grid: Grid) -> np.ndarray:
    theta = (grid.nodes - grid.delta) / grid.delta
    return -_smoothstep_deriv(theta) / grid.delta


def cutoff_boundary(grid: Grid) -> np.ndarray:
    """chi: 0 on [0, delta/2], 1 on [delta, 1], C1 cubic ramp in between."""
    half = 0.5 * grid.delta
    theta = (grid.nodes - half) / half
    return _smoothstep(theta)


def cutoff_boundary_deriv(grid: Grid) -> np.ndarray:
    half = 0.5 * grid.delta
    theta = (grid.nodes - half) / half
    return _smoothstep_deriv(theta) / half
