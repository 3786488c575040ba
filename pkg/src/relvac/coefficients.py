"""Relativistic coefficient algebra of the Lagrangian momentum equations.

Eulerian kernels (Lambda_i, A0, a11, a12) depend only on the local velocity
and density.  The Lagrangian multipliers turn them into the coefficients that
actually appear in the (r, u, v, w) equations; they also need the flow-map
geometry and the baryon bracket ``1 - n^(gamma-1)/c^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DensityBreakdownError, PositivityLossError
from .grid_ops import Grid
from .thermo import (
    InitialData,
    PhysParams,
    State,
    density_reconstruct,
    lorentz_theta,
    pressure_deriv,
    shell_geometry,
)

__all__ = [
    "CoeffBundle",
    "lambdas_a0",
    "a_coeffs",
    "lagrangian_a_coeffs",
    "b_coeffs",
    "flux_bracket",
    "j_factor",
    "coefficient_bundle",
]


def _kinematic_factor(u, v, w, rho, params: PhysParams):
    """(1 - p'/c^2) / (c^2 Theta^2) and Theta; zero factor in classical mode."""
    theta = lorentz_theta(u, v, w, params.c)
    if params.classical:
        return np.zeros_like(theta), theta
    k = (1.0 - pressure_deriv(rho, params.gamma) / params.c**2) / (params.c**2 * theta**2)
    return k, theta


def lambdas_a0(u, v, w, rho, params: PhysParams):
    """Return (Lambda1, Lambda2, Lambda3, A0); raises if any Lambda_i <= 0."""
    u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
    k, theta = _kinematic_factor(u, v, w, rho, params)
    lam1 = 1.0 + k * u**2
    lam2 = 1.0 - k * v**2
    lam3 = 1.0 + k * w**2
    for lam in (lam1, lam2, lam3):
        bad = np.flatnonzero(np.atleast_1d(lam) <= 0.0)
        if bad.size:
            raise PositivityLossError("Lambda_i <= 0", node=int(bad[0]))
    cross = 0.0 if params.classical else k * w**2 * v**2 / (params.c**2 * theta**2)
    a0 = 1.0 / (lam2 * lam3 + cross)
    return lam1, lam2, lam3, a0


def a_coeffs(u, v, w, rho, params: PhysParams):
    """Eulerian kernels (a11, a12) of the radial momentum equation."""
    u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
    lam1, _, _, a0 = lambdas_a0(u, v, w, rho, params)
    k, _ = _kinematic_factor(u, v, w, rho, params)
    a11 = lam1 - k**2 * a0 * w**2 * u**2 + k**2 * a0 * v**2 * u**2
    a12 = 1.0 + k * a0 * (v**2 - w**2)
    return a11, a12


def lagrangian_a_coeffs(u, v, w, rho, bracket, params: PhysParams):
    """Lagrangian (a11, a12): Eulerian kernels times the mass-energy multipliers.

    ``bracket`` is the baryon bracket ``1 - n^(gamma-1)/c^2``.
    """
    a11, a12 = a_coeffs(u, v, w, rho, params)
    if params.classical:
        # formal limit of the multipliers: 1 for a11, gamma for a12
        return a11, params.gamma * a12
    gamma = params.gamma
    theta = lorentz_theta(u, v, w, params.c)
    enthalpy = 1.0 + np.asarray(rho, dtype=float) ** (gamma - 1.0) / params.c**2
    a11_l = a11 * bracket ** (1.0 / (1.0 - gamma)) * enthalpy / theta
    a12_l = gamma * a12 * theta ** (gamma - 2.0) * bracket ** (gamma / (1.0 - gamma)) * enthalpy
    return a11_l, a12_l


def b_coeffs(u, v, w, rho, x_over_r, r_x, bracket, params: PhysParams):
    """Lagrangian (b11, b12) of the angular and axial equations.

    b11 = gamma A0 ((x/r) Theta / r_x)^(gamma-1) / bracket and
    b12 = A0 (1 - gamma rho^(gamma-1)/c^2) / Theta.  In the equations b11 is
    always paired with the enthalpy weight (alpha_c/x)^(gamma-1), which
    vanishes at the vacuum node.
    """
    gamma = params.gamma
    _, _, _, a0 = lambdas_a0(u, v, w, rho, params)
    theta = lorentz_theta(u, v, w, params.c)
    b11 = gamma * a0 * (np.asarray(x_over_r) * theta / np.asarray(r_x)) ** (gamma - 1.0) / bracket
    rho_term = 0.0 if params.classical else gamma * np.asarray(rho, dtype=float) ** (gamma - 1.0) / params.c**2
    b12 = a0 * (1.0 - rho_term) / theta
    return b11, b12


def flux_bracket(rho0, x_over_r, r_x, theta, params: PhysParams, t: float | None = None):
    """1 - (rho0 (x/r) Theta / r_x)^(gamma-1) / c^2, the bracket of the pressure flux and J."""
    if params.classical:
        return np.ones_like(np.asarray(theta, dtype=float))
    z = np.asarray(rho0) * np.asarray(x_over_r) * np.asarray(theta) / np.asarray(r_x)
    out = 1.0 - z ** (params.gamma - 1.0) / params.c**2
    bad = np.flatnonzero(np.atleast_1d(out) <= 0.0)
    if bad.size:
        raise DensityBreakdownError("flux bracket <= 0", node=int(bad[0]), t=t)
    return out


def j_factor(state: State, init: InitialData, params: PhysParams, grid: Grid) -> np.ndarray:
    """J = (x/(r r_x))^(gamma-1) * bracket^((2 gamma - 1)/(1 - gamma)).

    At gamma = 2 this is (x/(r r_x)) / (1 - rho0 x Theta / (c^2 r r_x))^3; the
    classical limit is (x/(r r_x))^(gamma-1).
    """
    gamma = params.gamma
    r_x, x_over_r = shell_geometry(state.r, grid, state.t)
    theta = lorentz_theta(state.u, state.v, state.w, params.c)
    bracket = flux_bracket(init.rho0, x_over_r, r_x, theta, params, state.t)
    return (x_over_r / r_x) ** (gamma - 1.0) * bracket ** ((2.0 * gamma - 1.0) / (1.0 - gamma))


@dataclass(frozen=True)
class CoeffBundle:
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    a0: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    b11: np.ndarray
    b12: np.ndarray
    j_factor: np.ndarray


def coefficient_bundle(state: State, init: InitialData, params: PhysParams, grid: Grid) -> CoeffBundle:
    """All Lagrangian coefficients at one state; rho always comes from the flow map."""
    u, v, w = state.u, state.v, state.w
    r_x, x_over_r = shell_geometry(state.r, grid, state.t)
    n, rho = density_reconstruct(state, init, params, grid)
    bracket = 1.0 if params.classical else 1.0 - n ** (params.gamma - 1.0) / params.c**2
    lam1, lam2, lam3, a0 = lambdas_a0(u, v, w, rho, params)
    a11, a12 = lagrangian_a_coeffs(u, v, w, rho, bracket, params)
    b11, b12 = b_coeffs(u, v, w, rho, x_over_r, r_x, bracket, params)
    return CoeffBundle(lam1, lam2, lam3, a0, a11, a12, b11, b12, j_factor(state, init, params, grid))
