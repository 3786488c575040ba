"""Weighted norms, truncated energy, bounds monitors and identity residuals.

Term names returned by :func:`energy_truncated` form a stable vocabulary:

``E(u)``  u_H2, u_over_x_H1, alpha0_u_H2, ut_H1, ut_over_x_H1,
          sqrt_alpha0_ut_xx_L2, xi_alpha0_ut_H2, xi_ut_H1,
          alpha0_sqrtx_utt_H2, utt_H1
``E(v)``  v_x_L2, vt_x_L2, sqrt_alpha0_vtt_x_L2, alpha0_sqrtx_vtt_xx_L2,
          vt_sup, vtt_sup, vt_over_x_sup, vtt_over_x_sup, alpha0_over_x_vt_x_sup
``E(w)``  the E(v) names with ``v`` replaced by ``w``.

Every value is a square: L2/Sobolev norms squared, and sup-norms squared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import lagrangian_a_coeffs
from .errors import ConfigError, SolverError
from .grid_ops import (
    Grid,
    cutoff_boundary,
    cutoff_interior,
    deriv,
    distance,
    integrate,
    second_deriv,
)
from .thermo import (
    InitialData,
    PhysParams,
    State,
    alpha_c,
    density_reconstruct,
    enthalpy_weight,
    enthalpy_weight_x,
    lorentz_theta,
    shell_geometry,
)

__all__ = [
    "WEIGHTS",
    "ENERGY_GROWTH_FACTOR",
    "weight_field",
    "weighted_norm",
    "EnergySnapshot",
    "energy_truncated",
    "BoundsReport",
    "bounds_report",
    "compat_first_derivative",
    "baryon_residual",
]

LORENTZ_FLOOR = 11.0 / 12.0
VELOCITY_FACTOR = 4.0
# no-blow-up stand-in: max_t E(t) <= ENERGY_GROWTH_FACTOR * E(0)
ENERGY_GROWTH_FACTOR = 10.0


def _base_weights(grid: Grid, rho0):
    x = grid.nodes
    d = distance(grid)
    a0 = None if rho0 is None else np.asarray(rho0, dtype=float) * x
    table = {"1": lambda: np.ones_like(x), "d": lambda: d, "d2": lambda: d**2}
    if a0 is not None:
        rho0 = np.asarray(rho0, dtype=float)
        table.update(
            {
                # the 1/sqrt(x) and 1/x weights are written through rho0 so x = 0 is finite
                "alpha0/sqrt(x)": lambda: rho0 * np.sqrt(x),
                "alpha0": lambda: a0,
                "sqrt(alpha0)": lambda: np.sqrt(a0),
                "alpha0/x": lambda: rho0,
                "alpha0^1.5": lambda: a0**1.5,
                "sqrt(alpha0^3/x)": lambda: rho0**1.5 * x,
            }
        )
    return table


WEIGHTS = ("1", "d", "d2", "alpha0/sqrt(x)", "alpha0", "sqrt(alpha0)", "alpha0/x", "alpha0^1.5", "sqrt(alpha0^3/x)")


def weight_field(name: str, grid: Grid, rho0=None) -> np.ndarray:
    """Nodal weight by name; prefix ``xi*`` or ``chi*`` masks with a cut-off."""
    mask = None
    base = name
    if name.startswith("xi*"):
        mask, base = cutoff_interior(grid), name[3:]
    elif name.startswith("chi*"):
        mask, base = cutoff_boundary(grid), name[4:]
    table = _base_weights(grid, rho0)
    if base not in table:
        if base in WEIGHTS:
            raise ConfigError(f"weight {base!r} needs rho0")
        raise ConfigError(f"unknown weight {name!r}; known: {', '.join(WEIGHTS)} (optionally xi*/chi*)")
    w = table[base]()
    return w if mask is None else mask * w


def weighted_norm(f, weight: str, grid: Grid, rho0=None) -> float:
    """sqrt(integral of weight^2 f^2) by the trapezoid rule."""
    f = grid.check(f)
    w = weight_field(weight, grid, rho0)
    return math.sqrt(integrate((w * f) ** 2, grid))


def _l2_sq(f, grid):
    return integrate(f * f, grid)


def _sobolev_sq(f, k, grid, weight=None):
    """sum_{j <= k} integral of (weight * d^j f / dx^j)^2; the weight is not differentiated."""
    w = 1.0 if weight is None else weight
    total = _l2_sq(w * f, grid)
    if k >= 1:
        total += _l2_sq(w * deriv(f, grid), grid)
    if k >= 2:
        total += _l2_sq(w * second_deriv(f, grid), grid)
    return total


def _sup_sq(f):
    return float(np.max(np.abs(f))) ** 2


def _over_x(f, grid):
    out = np.empty_like(f)
    out[1:] = f[1:] / grid.nodes[1:]
    out[0] = deriv(f, grid)[0]
    return out


def _time_weights(ts, order, at=-1):
    """Finite-difference weights at ts[at] for the ``order``-th time derivative."""
    ts = np.asarray(ts, dtype=float)
    scale = ts[-1] - ts[0]
    tau = (ts - ts[at]) / scale
    m = tau.size
    vander = np.array([tau**j / math.factorial(j) for j in range(m)])
    rhs = np.zeros(m)
    rhs[order] = 1.0
    return np.linalg.solve(vander, rhs) / scale**order


@dataclass(frozen=True)
class EnergySnapshot:
    t: float
    e_u: float
    e_v: float
    e_w: float
    terms: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.e_u + self.e_v + self.e_w


def _angular_terms(prefix, f, ft, ftt, a0, rho0, grid):
    f_x = deriv(f, grid)
    ft_x = deriv(ft, grid)
    x = grid.nodes
    return {
        f"{prefix}_x_L2": _l2_sq(f_x, grid),
        f"{prefix}t_x_L2": _l2_sq(ft_x, grid),
        f"sqrt_alpha0_{prefix}tt_x_L2": _l2_sq(np.sqrt(a0) * deriv(ftt, grid), grid),
        f"alpha0_sqrtx_{prefix}tt_xx_L2": _l2_sq(rho0 * np.sqrt(x) * second_deriv(ftt, grid), grid),
        f"{prefix}t_sup": _sup_sq(ft),
        f"{prefix}tt_sup": _sup_sq(ftt),
        f"{prefix}t_over_x_sup": _sup_sq(_over_x(ft, grid)),
        f"{prefix}tt_over_x_sup": _sup_sq(_over_x(ftt, grid)),
        f"alpha0_over_x_{prefix}t_x_sup": _sup_sq(rho0 * ft_x),
    }


def energy_truncated(history, init: InitialData, params: PhysParams, grid: Grid, at: int = -1):
    """Energy functional truncated to time derivatives of order <= 2.

    ``history`` holds consecutive States; the last five are used and time
    derivatives come from the 5-point (possibly nonuniform) difference
    stencil evaluated at ``recent[at]`` (the newest state by default,
    ``at=0`` for the oldest, e.g. t = 0).  Returns None until five states
    are available.
    """
    if len(history) < 5:
        return None
    recent = list(history)[-5:]
    ts = [s.t for s in recent]
    if np.any(np.diff(ts) <= 0.0):
        return None
    w1 = _time_weights(ts, 1, at)
    w2 = _time_weights(ts, 2, at)

    now = recent[at]

    def d_t(name, weights):
        # derivative weights sum to zero; differencing against ``now`` makes a
        # constant history give exactly 0
        ref = getattr(now, name)
        return sum(wk * (getattr(s, name) - ref) for wk, s in zip(weights, recent))

    x = grid.nodes
    rho0 = init.rho0
    a0 = rho0 * x
    xi = cutoff_interior(grid)
    u = now.u
    ut, utt = d_t("u", w1), d_t("u", w2)

    terms = {
        "u_H2": _sobolev_sq(u, 2, grid),
        "u_over_x_H1": _sobolev_sq(_over_x(u, grid), 1, grid),
        "alpha0_u_H2": _sobolev_sq(u, 2, grid, a0),
        "ut_H1": _sobolev_sq(ut, 1, grid),
        "ut_over_x_H1": _sobolev_sq(_over_x(ut, grid), 1, grid),
        "sqrt_alpha0_ut_xx_L2": _l2_sq(np.sqrt(a0) * second_deriv(ut, grid), grid),
        "xi_alpha0_ut_H2": _sobolev_sq(ut, 2, grid, xi * a0),
        "xi_ut_H1": _sobolev_sq(ut, 1, grid, xi),
        "alpha0_sqrtx_utt_H2": _sobolev_sq(utt, 2, grid, rho0 * np.sqrt(x)),
        "utt_H1": _sobolev_sq(utt, 1, grid),
    }
    e_u = sum(terms.values())
    v_terms = _angular_terms("v", now.v, d_t("v", w1), d_t("v", w2), a0, rho0, grid)
    w_terms = _angular_terms("w", now.w, d_t("w", w1), d_t("w", w2), a0, rho0, grid)
    terms.update(v_terms)
    terms.update(w_terms)
    return EnergySnapshot(now.t, e_u, sum(v_terms.values()), sum(w_terms.values()), terms)


@dataclass(frozen=True)
class BoundsReport:
    theta_sq_min: float
    vel_sup: float
    vel_sup_ratio: float
    rx_range: tuple
    x_over_r_range: tuple
    lorentz_ok: bool
    velocity_ok: bool
    geometry_ok: bool


def bounds_report(
    state: State,
    init: InitialData,
    params: PhysParams,
    grid: Grid | None = None,
    *,
    v_init_max: float | None = None,
) -> BoundsReport:
    """Extrema behind the short-time bounds: Theta^2 >= 11/12, |v| <= 4 |v0|."""
    grid = grid or init.grid
    speed_sq = state.u**2 + state.v**2 + state.w**2
    theta_sq_min = 1.0 if params.classical else float(1.0 - np.max(speed_sq) / params.c**2)
    vel_sup = float(np.sqrt(np.max(speed_sq)))
    if v_init_max is None:
        v_init_max = float(np.sqrt(np.max(init.speed_sq())))
    ratio = 0.0 if v_init_max == 0.0 and vel_sup == 0.0 else (
        math.inf if v_init_max == 0.0 else vel_sup / v_init_max
    )
    r_x = deriv(state.r, grid)
    x_over_r = np.empty_like(state.r)
    x_over_r[1:] = grid.nodes[1:] / state.r[1:]
    x_over_r[0] = 1.0 / r_x[0]
    rx_range = (float(r_x.min()), float(r_x.max()))
    xr_range = (float(x_over_r.min()), float(x_over_r.max()))
    geometry_ok = 0.5 <= rx_range[0] and rx_range[1] <= 1.5 and 2.0 / 3.0 <= xr_range[0] and xr_range[1] <= 2.0
    return BoundsReport(
        theta_sq_min=theta_sq_min,
        vel_sup=vel_sup,
        vel_sup_ratio=ratio,
        rx_range=rx_range,
        x_over_r_range=xr_range,
        lorentz_ok=theta_sq_min >= LORENTZ_FLOOR,
        velocity_ok=ratio <= VELOCITY_FACTOR,
        geometry_ok=bool(geometry_ok),
    )


def compat_first_derivative(init: InitialData, params: PhysParams, grid: Grid) -> np.ndarray:
    """du/dt at t = 0 from the initial data alone (first compatibility condition).

    At t = 0 r = x, r_x = 1 and Theta = Theta0, so the hoop-stress term
    cancels the 1/x part of the flux divergence exactly and

        u_t = v0^2/x - [gamma/(gamma-1) q' H0 + q H0' + a12 q (u0' + u0/x) u0 / c^2] / a11,

    with H0 = Theta0^gamma (1 - (rho0 Theta0)^(gamma-1)/c^2)^(gamma/(1-gamma)).
    """
    gamma = params.gamma
    x = grid.nodes
    rho0, u0, v0, w0 = init.rho0, init.u0, init.v0, init.w0
    theta0 = lorentz_theta(u0, v0, w0, params.c)
    q = enthalpy_weight(rho0, theta0, gamma, params.c)
    if params.classical:
        h0 = np.ones_like(x)
        baryon_bracket = 1.0
    else:
        h0 = theta0**gamma * (1.0 - (rho0 * theta0) ** (gamma - 1.0) / params.c**2) ** (gamma / (1.0 - gamma))
        baryon_bracket = 1.0 / (1.0 + rho0 ** (gamma - 1.0) / params.c**2)
    a11, a12 = lagrangian_a_coeffs(u0, v0, w0, rho0, baryon_bracket, params)
    u0_over_x = _over_x(u0, grid)
    a12_term = params.inv_c2 * a12 * q * (deriv(u0, grid) + u0_over_x) * u0
    flux = gamma / (gamma - 1.0) * enthalpy_weight_x(init, params, grid) * h0 + q * deriv(h0, grid)
    out = v0 * _over_x(v0, grid) - (flux + a12_term) / a11
    out[0] = 0.0
    return out


def baryon_residual(state: State, init: InitialData, params: PhysParams, grid: Grid, n=None) -> float:
    """max |(n/Theta) r_x r - alpha_c| / max alpha_c; n is reconstructed unless given."""
    try:
        if n is None:
            n, _ = density_reconstruct(state, init, params, grid)
        r_x, _ = shell_geometry(state.r, grid, state.t)
        theta = lorentz_theta(state.u, state.v, state.w, params.c)
        theta0 = lorentz_theta(init.u0, init.v0, init.w0, params.c)
    except SolverError:
        return math.nan
    alpha = alpha_c(init.rho0, theta0, params.gamma, params.c, grid.nodes)
    lhs = np.asarray(n) / theta * r_x * state.r
    return float(np.max(np.abs(lhs - alpha)) / np.max(np.abs(alpha)))
