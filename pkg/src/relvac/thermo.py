"""Equation of state, Lorentz kinematics and density reconstruction.

Velocities are measured in units where the classical sound speed is O(1);
``c`` is the (rescaled) light speed and ``math.inf`` selects the classical
formulas exactly instead of a large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    DensityBreakdownError,
    DomainError,
    ShapeError,
    ShellCrossingError,
    SuperluminalError,
)
from .grid_ops import Grid, deriv

__all__ = [
    "INFINITE_C",
    "PhysParams",
    "InitialData",
    "State",
    "pressure",
    "pressure_deriv",
    "lorentz_theta",
    "alpha_c",
    "enthalpy_weight",
    "enthalpy_weight_x",
    "shell_geometry",
    "density_reconstruct",
    "check_admissibility",
    "demo_data",
    "uniform_data",
    "load_initial_data",
    "builtin_data",
]

INFINITE_C = math.inf


@dataclass(frozen=True)
class PhysParams:
    c: float = 16.0
    gamma: float = 2.0
    mu: float = 0.0
    cfl: float = 0.5

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if not self.c > 0.0:
            raise DomainError(f"light speed must be positive, got {self.c}")
        if self.mu < 0.0:
            raise DomainError(f"viscosity must be non-negative, got {self.mu}")
        if not 0.0 < self.cfl < 1.0:
            raise DomainError(f"cfl must lie in (0, 1), got {self.cfl}")

    @property
    def classical(self) -> bool:
        return math.isinf(self.c)

    @property
    def inv_c2(self) -> float:
        return 0.0 if self.classical else 1.0 / self.c**2

    def with_c(self, c: float) -> "PhysParams":
        return replace(self, c=c)


@dataclass(frozen=True)
class InitialData:
    """Nodal initial density and velocities on the uniform grid.

    ``validate=False`` skips the vacuum/axis checks; it exists for
    analytic test fixtures such as a uniform static slab.
    """

    rho0: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    w0: np.ndarray
    gamma: float = 2.0
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        arrays = [np.array(a, dtype=float) for a in (self.rho0, self.u0, self.v0, self.w0)]
        n = arrays[0].shape
        if len(n) != 1 or n[0] < 5 or any(a.shape != n for a in arrays):
            raise ShapeError("initial fields must be 1-D arrays of equal length >= 5")
        for name, a in zip(("rho0", "u0", "v0", "w0"), arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if self.validate:
            self._check_vacuum()

    @property
    def grid(self) -> Grid:
        return Grid(self.rho0.size - 1)

    def _check_vacuum(self):
        rho0 = self.rho0
        if np.any(rho0[:-1] <= 0.0):
            raise DomainError("rho0 must be positive on [0, 1)")
        if rho0[-1] != 0.0:
            raise DomainError("rho0(1) must vanish (vacuum boundary)")
        slope = deriv(rho0 ** (self.gamma - 1.0), self.grid)[-1]
        if not (np.isfinite(slope) and slope < 0.0):
            raise DomainError(f"physical vacuum violated: d(rho0^(gamma-1))/dx(1) = {slope}")
        if self.u0[0] != 0.0 or self.v0[0] != 0.0:
            raise DomainError("axis regularity requires u0(0) = v0(0) = 0")

    def speed_sq(self) -> np.ndarray:
        return self.u0**2 + self.v0**2 + self.w0**2


@dataclass(frozen=True)
class State:
    t: float
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @classmethod
    def initial(cls, init: InitialData, grid: Grid | None = None) -> "State":
        grid = grid or init.grid
        return cls(
            0.0,
            grid.nodes.copy(),
            init.u0.copy(),
            init.v0.copy(),
            init.w0.copy(),
        )

    def fields(self) -> tuple[np.ndarray, ...]:
        return self.r, self.u, self.v, self.w


def pressure(rho, gamma: float):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("negative density")
    return rho**gamma


def pressure_deriv(rho, gamma: float):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise DomainError("negative density")
    return gamma * rho ** (gamma - 1.0)


def lorentz_theta(u, v, w, c: float):
    """Theta = sqrt(1 - |v|^2 / c^2); exactly 1 in classical mode."""
    speed_sq = np.asarray(u, dtype=float) ** 2 + np.asarray(v, dtype=float) ** 2 + np.asarray(w, dtype=float) ** 2
    if math.isinf(c):
        return np.ones_like(speed_sq)
    ratio = speed_sq / c**2
    bad = np.flatnonzero(np.atleast_1d(ratio) >= 1.0)
    if bad.size:
        raise SuperluminalError(f"speed reached the light speed c={c}", node=int(bad[0]))
    return np.sqrt(1.0 - ratio)


def _check_a1(rho0, gamma, c):
    if math.isinf(c):
        return
    top = float(np.max(np.asarray(rho0) ** (gamma - 1.0)))
    if not top < c**2:
        raise DomainError(f"(rho0)^(gamma-1) = {top} must stay below c^2 = {c**2}")


def enthalpy_weight(rho0, theta0, gamma: float, c: float) -> np.ndarray:
    """(alpha_c / x)^(gamma-1) = rho0^(gamma-1) / ((1 + rho0^(gamma-1)/c^2) Theta0^(gamma-1)).

    Smooth up to the vacuum node; it multiplies every pressure-type term.
    """
    rho0 = np.asarray(rho0, dtype=float)
    _check_a1(rho0, gamma, c)
    s = rho0 ** (gamma - 1.0)
    if math.isinf(c):
        return s
    theta0 = np.asarray(theta0, dtype=float)
    return s / ((1.0 + s / c**2) * theta0 ** (gamma - 1.0))


def enthalpy_weight_x(init: "InitialData", params: "PhysParams", grid: Grid) -> np.ndarray:
    """x-derivative of :func:`enthalpy_weight` by the chain rule.

    Only the primitive fields rho0^(gamma-1), u0, v0, w0 are differenced, so
    the result is exact whenever those are quadratics.
    """
    gamma, inv_c2 = params.gamma, params.inv_c2
    s0 = init.rho0 ** (gamma - 1.0)
    s0_x = deriv(s0, grid)
    if params.classical:
        return s0_x
    u0, v0, w0 = init.u0, init.v0, init.w0
    theta0 = lorentz_theta(u0, v0, w0, params.c)
    theta0_x = -(u0 * deriv(u0, grid) + v0 * deriv(v0, grid) + w0 * deriv(w0, grid)) * inv_c2 / theta0
    q = enthalpy_weight(init.rho0, theta0, gamma, params.c)
    return s0_x / ((1.0 + s0 * inv_c2) ** 2 * theta0 ** (gamma - 1.0)) - (gamma - 1.0) * q * theta0_x / theta0


def alpha_c(rho0, theta0, gamma: float, c: float, x=None) -> np.ndarray:
    """Lagrangian mass weight rho0 x / ((1 + rho0^(gamma-1)/c^2)^(1/(gamma-1)) Theta0).

    ``x`` defaults to the uniform nodes matching ``rho0``.
    """
    rho0 = np.asarray(rho0, dtype=float)
    if x is None:
        x = Grid(rho0.size - 1).nodes
    _check_a1(rho0, gamma, c)
    if math.isinf(c):
        return rho0 * x
    s = rho0 ** (gamma - 1.0)
    theta0 = np.asarray(theta0, dtype=float)
    return rho0 * x / ((1.0 + s / c**2) ** (1.0 / (gamma - 1.0)) * theta0)


def shell_geometry(r, grid: Grid, t: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return (r_x, x/r) with the axis limit x/r -> 1/r_x at x = 0."""
    r = grid.check(r, "r")
    r_x = deriv(r, grid)
    bad = np.flatnonzero(r_x <= 0.0)
    if bad.size:
        raise ShellCrossingError("r_x <= 0", node=int(bad[0]), t=t)
    if r[0] < 0.0 or np.any(np.diff(r) <= 0.0):
        node = 0 if r[0] < 0.0 else int(np.flatnonzero(np.diff(r) <= 0.0)[0]) + 1
        raise ShellCrossingError("fluid shells crossed", node=node, t=t)
    x_over_r = np.empty_like(r)
    x_over_r[1:] = grid.nodes[1:] / r[1:]
    x_over_r[0] = 1.0 / r_x[0]
    return r_x, x_over_r


def density_reconstruct(state: State, init: InitialData, params: PhysParams, grid: Grid):
    """Baryon density n and mass-energy density rho from the flow map.

    n follows from freezing (n / Theta) r r_x = alpha_c(x); rho then follows
    from the isentropic relation rho = n (1 - n^(gamma-1)/c^2)^(1/(1-gamma)).
    """
    gamma, c = params.gamma, params.c
    r_x, x_over_r = shell_geometry(state.r, grid, state.t)
    theta = lorentz_theta(state.u, state.v, state.w, c)
    theta0 = lorentz_theta(init.u0, init.v0, init.w0, c)
    a_over_x = enthalpy_weight(init.rho0, theta0, gamma, c) ** (1.0 / (gamma - 1.0))
    n = a_over_x * x_over_r * theta / r_x
    if params.classical:
        return n, n.copy()
    bracket = 1.0 - n ** (gamma - 1.0) / c**2
    bad = np.flatnonzero(bracket <= 0.0)
    if bad.size:
        raise DensityBreakdownError("relativistic density bracket <= 0", node=int(bad[0]), t=state.t)
    rho = n * bracket ** (1.0 / (1.0 - gamma))
    return n, rho


def check_admissibility(params: PhysParams, init: InitialData) -> None:
    """Gate a run on (A1), (A2) and the sound-speed bound before stepping."""
    if params.classical:
        return
    c2 = params.c**2
    vmax2 = float(np.max(init.speed_sq()))
    if not 12.0 * vmax2 < c2:
        raise DomainError(f"12 max|v0|^2 = {12 * vmax2:.6g} must stay below c^2 = {c2:.6g}")
    _check_a1(init.rho0, params.gamma, params.c)
    cs2 = float(np.max(pressure_deriv(init.rho0, params.gamma)))
    if not cs2 < c2:
        raise DomainError(f"sound speed^2 {cs2:.6g} must stay below c^2 = {c2:.6g}")


def demo_data(grid: Grid, gamma: float = 2.0) -> InitialData:
    """rho0 = (1 - x^2)^(1/(gamma-1)) with small swirling, axial and radial motion."""
    x = grid.nodes
    rho0 = (1.0 - x**2) ** (1.0 / (gamma - 1.0))
    rho0[-1] = 0.0
    return InitialData(
        rho0=rho0,
        u0=0.1 * x * (1.0 - x),
        v0=0.1 * x * (1.0 - x),
        w0=0.05 * (1.0 - x**2),
        gamma=gamma,
    )


def uniform_data(grid: Grid, gamma: float = 2.0, rho: float = 0.5) -> InitialData:
    """Static slab of constant density; ignores the vacuum requirement."""
    ones = np.ones(grid.size)
    zeros = np.zeros(grid.size)
    return InitialData(rho * ones, zeros, zeros.copy(), zeros.copy(), gamma, validate=False)


def builtin_data(name: str, grid: Grid, gamma: float = 2.0) -> InitialData:
    builders = {
        "demo": demo_data,
        "uniform": uniform_data,
        "rest": lambda g, gm: replace(
            demo_data(g, gm),
            u0=np.zeros(g.size),
            v0=np.zeros(g.size),
            w0=np.zeros(g.size),
        ),
        "radial": lambda g, gm: replace(
            demo_data(g, gm), v0=np.zeros(g.size), w0=np.zeros(g.size)
        ),
    }
    try:
        return builders[name](grid, gamma)
    except KeyError:
        raise DomainError(f"unknown builtin initial data {name!r}; choose from {sorted(builders)}") from None


def load_initial_data(path: str | Path, grid: Grid, gamma: float) -> InitialData:
    """Read whitespace columns ``x rho0 u0 v0 w0`` sampled on the grid nodes."""
    table = np.loadtxt(path, ndmin=2)
    if table.shape != (grid.size, 5):
        raise ShapeError(f"{path}: expected {grid.size} rows of 5 columns, got {table.shape}")
    if not np.allclose(table[:, 0], grid.nodes, rtol=0.0, atol=1e-12):
        raise ShapeError(f"{path}: x column does not match the grid nodes")
    return InitialData(table[:, 1], table[:, 2], table[:, 3], table[:, 4], gamma)
