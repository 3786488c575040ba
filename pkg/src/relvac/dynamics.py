"""Semi-discrete right-hand sides and SSP-RK3 time stepping.

The radial equation is divided through by the degenerate weight alpha_c(x)
analytically.  Writing the pressure flux as (alpha_c/x)^gamma * x * H with

    H = (x/r)^(gamma-1) Theta^gamma r_x^(-gamma) B^(gamma/(1-gamma)),
    B = 1 - (rho0 (x/r) Theta / r_x)^(gamma-1) / c^2,

the flux divergence minus the hoop-stress term becomes

    gamma/(gamma-1) q' H + q (H_x + H (1 - (x/r) r_x) / x),   q = (alpha_c/x)^(gamma-1),

which stays finite at the vacuum node where alpha_c = 0.  At gamma = 2 this
is exactly the printed cylindrical system; the axis node is pinned (u = 0).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .coefficients import b_coeffs, flux_bracket, lagrangian_a_coeffs
from .errors import BoundsViolation, DomainError, NonFiniteError, SolverError
from .grid_ops import Grid, deriv, second_deriv
from .records import RunRecord
from .thermo import (
    InitialData,
    PhysParams,
    State,
    alpha_c,
    density_reconstruct,
    enthalpy_weight,
    enthalpy_weight_x,
    lorentz_theta,
    pressure_deriv,
    shell_geometry,
)

__all__ = [
    "RhsEval",
    "StepControl",
    "rhs_relativistic",
    "rhs_classical",
    "rhs_regularization",
    "rhs",
    "step_control",
    "step",
    "advance",
    "energy_at",
]


@dataclass
class RhsEval:
    du_dt: np.ndarray
    dv_dt: np.ndarray
    dw_dt: np.ndarray
    dr_dt: np.ndarray
    max_wave_speed: float
    flags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StepControl:
    dt_hyperbolic: float
    dt_parabolic: float
    dt: float


def _over_r(f, f_x, r, r_x):
    """f / r with the axis limit f_x / r_x at node 0 (f odd in x)."""
    out = np.empty_like(f)
    out[1:] = f[1:] / r[1:]
    out[0] = f_x[0] / r_x[0]
    return out


def _ratio_to_x(f, grid: Grid):
    """f / x for f vanishing at the axis; node 0 by quadratic extrapolation."""
    g = np.empty_like(f)
    g[1:] = f[1:] / grid.nodes[1:]
    g[0] = 3.0 * g[1] - 3.0 * g[2] + g[3]
    return g


def _stretch_log_deriv(r, grid: Grid):
    """-(1 - (x/r) r_x) / x written as (r/x)_x / (r/x).

    The direct form divides an O(dx^2) error in r_x by x and loses an order
    next to the axis; differencing the smooth ratio r/x does not.
    """
    m = _ratio_to_x(r, grid)
    return deriv(m, grid) / m, m


def _pressure_divergence(q, q_x, h, h_x, m_log_x, gamma):
    out = np.zeros_like(h)
    s = slice(1, None)
    out[s] = gamma / (gamma - 1.0) * q_x[s] * h[s] + q[s] * (h_x[s] - h[s] * m_log_x[s])
    return out


def _flux_profile(r, u, v, w, r_x, x_over_r, theta, init, params, grid, t):
    """H and H_x of the pressure flux, with r_xx from the compact stencil.

    Differentiating H by the chain rule keeps the leading r_xx term compact;
    a centred difference of the nodal H would be blind to grid-scale modes.
    """
    gamma, inv_c2 = params.gamma, params.inv_c2
    r_xx = second_deriv(r, grid)
    m_log_x, _ = _stretch_log_deriv(r, grid)
    # (x/r)_x / (x/r) = -(r/x)_x / (r/x)
    x_over_r_log_x = -m_log_x
    log_x = (gamma - 1.0) * x_over_r_log_x - gamma * r_xx / r_x
    bracket = flux_bracket(init.rho0, x_over_r, r_x, theta, params, t)
    h = x_over_r ** (gamma - 1.0) * theta**gamma * r_x ** (-gamma) * bracket ** (gamma / (1.0 - gamma))
    if params.classical:
        return h, h * log_x, m_log_x
    theta_x = -(u * deriv(u, grid) + v * deriv(v, grid) + w * deriv(w, grid))
    theta_x = theta_x * inv_c2 / theta
    s0 = init.rho0 ** (gamma - 1.0)
    y = (x_over_r * theta / r_x) ** (gamma - 1.0)
    log_y_x = (gamma - 1.0) * (x_over_r_log_x + theta_x / theta - r_xx / r_x)
    bracket_x = -inv_c2 * (deriv(s0, grid) * y + s0 * y * log_y_x)
    log_x = log_x + gamma * theta_x / theta + gamma / (1.0 - gamma) * bracket_x / bracket
    return h, h * log_x, m_log_x


def _check_finite(ev: RhsEval, t):
    for name in ("du_dt", "dv_dt", "dw_dt"):
        arr = getattr(ev, name)
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise NonFiniteError(f"non-finite {name}", node=int(bad[0]), t=t)


def rhs_regularization(state: State, init: InitialData, params: PhysParams, grid: Grid) -> np.ndarray:
    """Degenerate parabolic term 2 mu (alpha u_xx + (2 alpha' - alpha/x) u_x - alpha' u/x) / alpha.

    With alpha = a x this is 2 mu (u_xx + (a'/a)(2 u_x - u/x) + (u/x)_x), which
    avoids dividing difference errors by x near the axis.  The axis node is
    pinned and returns 0; the vacuum node uses the reduced limit 2 mu (2 u_x - u/x).
    """
    if params.mu < 0.0:
        raise DomainError(f"viscosity must be non-negative, got {params.mu}")
    out = np.zeros(grid.size)
    if params.mu == 0.0:
        return out
    theta0 = lorentz_theta(init.u0, init.v0, init.w0, params.c)
    a = enthalpy_weight(init.rho0, theta0, params.gamma, params.c) ** (1.0 / (params.gamma - 1.0))
    u = state.u
    u_x = deriv(u, grid)
    g = _ratio_to_x(u, grid)
    s = slice(1, -1)
    log_a_x = deriv(a, grid)[s] / a[s]
    out[s] = 2.0 * params.mu * (
        second_deriv(u, grid)[s] + log_a_x * (2.0 * u_x[s] - g[s]) + deriv(g, grid)[s]
    )
    out[-1] = 2.0 * params.mu * (2.0 * u_x[-1] - g[-1])
    return out


def rhs_relativistic(state: State, init: InitialData, params: PhysParams, grid: Grid) -> RhsEval:
    """Tendencies of (r, u, v, w) for finite (or infinite) light speed."""
    gamma, inv_c2, t = params.gamma, params.inv_c2, state.t
    x = grid.nodes
    r, u, v, w = state.r, state.u, state.v, state.w
    r_x, x_over_r = shell_geometry(r, grid, t)
    try:
        theta = lorentz_theta(u, v, w, params.c)
    except SolverError as err:
        raise type(err)("speed reached the light speed", node=err.node, t=t) from None
    theta0 = lorentz_theta(init.u0, init.v0, init.w0, params.c)
    q = enthalpy_weight(init.rho0, theta0, gamma, params.c)
    q_x = enthalpy_weight_x(init, params, grid)

    n, rho = density_reconstruct(state, init, params, grid)
    bracket = 1.0 if params.classical else 1.0 - n ** (gamma - 1.0) * inv_c2
    try:
        a11, a12 = lagrangian_a_coeffs(u, v, w, rho, bracket, params)
        b11, b12 = b_coeffs(u, v, w, rho, x_over_r, r_x, bracket, params)
    except SolverError as err:
        raise type(err)("coefficient positivity lost", node=err.node, t=t) from None

    h, h_x, m_log_x = _flux_profile(r, u, v, w, r_x, x_over_r, theta, init, params, grid, t)
    pressure_term = _pressure_divergence(q, q_x, h, h_x, m_log_x, gamma)

    u_x = deriv(u, grid)
    u_over_r = _over_r(u, u_x, r, r_x)
    v_over_r = _over_r(v, deriv(v, grid), r, r_x)
    div = u_x + u_over_r * r_x
    a12_term = inv_c2 * a12 * q * x_over_r ** (gamma - 1.0) * r_x ** (-gamma) * div * u

    hoop = v * v_over_r
    du = hoop - (pressure_term + a12_term) / a11
    if params.mu > 0.0:
        du = du + rhs_regularization(state, init, params, grid)
    du[0] = 0.0

    accel = du - hoop
    slot = inv_c2 * b11 * q * div
    dv = -u_over_r * v + slot * v - inv_c2 * b12 * accel * u * v
    dw = slot * w - inv_c2 * b12 * accel * u * w

    wave = np.sqrt(pressure_deriv(rho, gamma)) * x_over_r / r_x + np.abs(u)
    ev = RhsEval(du, dv, dw, u.copy(), float(np.max(wave)), {"theta_sq_min": float(np.min(theta**2))})
    _check_finite(ev, t)
    return ev


def rhs_classical(state: State, init: InitialData, grid: Grid, mu: float = 0.0) -> RhsEval:
    """Classical cylindrical Euler in Lagrangian form with alpha_0 = rho0 x.

    The axial tendency is the literal zero so w is carried bit-exactly.
    """
    gamma, t = init.gamma, state.t
    x = grid.nodes
    r, u, v = state.r, state.u, state.v
    r_x, x_over_r = shell_geometry(r, grid, t)
    q = init.rho0 ** (gamma - 1.0)
    ones = np.ones_like(r)
    h, h_x, m_log_x = _flux_profile(r, u, v, state.w, r_x, x_over_r, ones, init, PhysParams(c=math.inf, gamma=gamma), grid, t)
    pressure_term = _pressure_divergence(q, deriv(q, grid), h, h_x, m_log_x, gamma)

    u_x = deriv(u, grid)
    u_over_r = _over_r(u, u_x, r, r_x)
    v_over_r = _over_r(v, deriv(v, grid), r, r_x)
    du = v * v_over_r - pressure_term
    if mu > 0.0:
        du = du + rhs_regularization(state, init, PhysParams(c=math.inf, gamma=gamma, mu=mu), grid)
    du[0] = 0.0
    dv = -u_over_r * v
    dw = np.zeros_like(u)

    rho = init.rho0 * x_over_r / r_x
    wave = np.sqrt(gamma * rho ** (gamma - 1.0)) * x_over_r / r_x + np.abs(u)
    ev = RhsEval(du, dv, dw, u.copy(), float(np.max(wave)), {"theta_sq_min": 1.0})
    _check_finite(ev, t)
    return ev


def rhs(state: State, init: InitialData, params: PhysParams, grid: Grid) -> RhsEval:
    if params.classical:
        return rhs_classical(state, init, grid, params.mu)
    return rhs_relativistic(state, init, params, grid)


def step_control(
    state: State, init: InitialData, params: PhysParams, grid: Grid, max_wave_speed: float
) -> StepControl:
    """Largest stable dt from the CFL number and, when mu > 0, the parabolic limit."""
    dx = grid.dx
    dt_hyp = params.cfl * dx / max(max_wave_speed, 1e-12)
    dt_par = math.inf
    if params.mu > 0.0:
        x = grid.nodes[1:-1]
        theta0 = lorentz_theta(init.u0, init.v0, init.w0, params.c)
        alpha = alpha_c(init.rho0, theta0, params.gamma, params.c, grid.nodes)
        alpha_x = deriv(alpha, grid)[1:-1]
        a = alpha[1:-1]
        drift = np.max(np.abs((2.0 * alpha_x - a / x) / a))
        react = np.max(np.abs(alpha_x / (a * x)))
        dt_par = 0.4 * dx**2 / (2.0 * params.mu * (1.0 + drift * dx + react * dx**2))
    return StepControl(dt_hyp, dt_par, min(dt_hyp, dt_par))


def _pack(state: State) -> np.ndarray:
    return np.stack([state.r, state.u, state.v, state.w])


def _unpack(t: float, y: np.ndarray) -> State:
    return State(t, y[0].copy(), y[1].copy(), y[2].copy(), y[3].copy())


def _tendency(state, init, params, grid):
    ev = rhs(state, init, params, grid)
    return np.stack([ev.dr_dt, ev.du_dt, ev.dv_dt, ev.dw_dt]), ev


def step(state: State, init: InitialData, params: PhysParams, grid: Grid, dt: float) -> State:
    """One Shu-Osher SSP-RK3 step."""
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    y0 = _pack(state)
    k, _ = _tendency(state, init, params, grid)
    y1 = y0 + dt * k
    k, _ = _tendency(_unpack(state.t + dt, y1), init, params, grid)
    y2 = 0.75 * y0 + 0.25 * (y1 + dt * k)
    k, _ = _tendency(_unpack(state.t + 0.5 * dt, y2), init, params, grid)
    y3 = y0 / 3.0 + 2.0 / 3.0 * (y2 + dt * k)
    # the classical axial velocity must survive untouched, not just to roundoff
    if params.classical:
        y3[3] = state.w
    new = _unpack(state.t + dt, y3)
    bad = np.flatnonzero(~np.all(np.isfinite(y3), axis=0))
    if bad.size:
        raise NonFiniteError("non-finite field after step", node=int(bad[0]), t=new.t)
    return new


def _output_times(t0: float, t_end: float, every: float | None) -> list[float]:
    if every is None or every <= 0.0 or every >= t_end - t0:
        return [t_end]
    count = int(math.floor((t_end - t0) / every + 1e-9))
    times = [t0 + k * every for k in range(1, count + 1)]
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    else:
        times[-1] = t_end
    return times


def energy_at(state: State, init: InitialData, params: PhysParams, grid: Grid, dt: float | None = None):
    """Energy snapshot at ``state`` from four throwaway forward steps.

    Used where no backward history exists (t = 0, or a sparse record).
    Returns None if a probe step fails.
    """
    try:
        if dt is None:
            ev = rhs(state, init, params, grid)
            dt = step_control(state, init, params, grid, ev.max_wave_speed).dt
        probe = [state]
        for _ in range(4):
            probe.append(step(probe[-1], init, params, grid, dt))
    except SolverError:
        return None
    return diagnostics.energy_truncated(probe, init, params, grid, at=0)


def _initial_energy(state, init, params, grid, dt_fixed, record):
    snap = energy_at(state, init, params, grid, dt_fixed)
    if snap is not None:
        record.rows[0].update(E_total=snap.total, E_u=snap.e_u, E_v=snap.e_v, E_w=snap.e_w)


def advance(
    state: State,
    init: InitialData,
    params: PhysParams,
    grid: Grid,
    t_end: float,
    *,
    output_every: float | None = None,
    dt_fixed: float | None = None,
    abort_on_bounds: bool = False,
    energy: bool = True,
    keep_snapshots: bool = True,
) -> tuple[State, RunRecord]:
    """Integrate to ``t_end`` recording diagnostics at every output time.

    With ``dt_fixed`` every member of a sweep follows the same step schedule.
    Steps between output times are equalised so each output is hit exactly.
    A solver error ends the run early; the record carries its reason.
    """
    record = RunRecord(grid=grid, params=params, init=init)
    history: deque[State] = deque([state], maxlen=5)
    v_init = float(np.sqrt(np.max(init.speed_sq())))

    def observe(s: State, dt: float):
        report = diagnostics.bounds_report(s, init, params, grid, v_init_max=v_init)
        row = {
            "t": s.t,
            "theta_sq_min": report.theta_sq_min,
            "vel_sup_ratio": report.vel_sup_ratio,
            "baryon_residual": diagnostics.baryon_residual(s, init, params, grid),
            "E_total": math.nan,
            "E_u": math.nan,
            "E_v": math.nan,
            "E_w": math.nan,
            "dt": dt,
        }
        if energy:
            snap = diagnostics.energy_truncated(list(history), init, params, grid)
            if snap is not None:
                row.update(E_total=snap.total, E_u=snap.e_u, E_v=snap.e_v, E_w=snap.e_w)
        record.add_row(row, s if keep_snapshots else None)
        return report

    observe(state, 0.0)
    if energy:
        _initial_energy(state, init, params, grid, dt_fixed, record)
    current = state
    dt = 0.0
    try:
        for t_out in _output_times(state.t, t_end, output_every):
            while current.t < t_out:
                if dt_fixed is None:
                    ev = rhs(current, init, params, grid)
                    dt_max = step_control(current, init, params, grid, ev.max_wave_speed).dt
                else:
                    dt_max = dt_fixed
                remaining = t_out - current.t
                n_steps = max(1, math.ceil(remaining / dt_max - 1e-9))
                dt = remaining / n_steps
                nxt = step(current, init, params, grid, dt)
                if n_steps == 1:
                    nxt = State(t_out, nxt.r, nxt.u, nxt.v, nxt.w)
                current = nxt
                history.append(current)
                record.n_steps += 1
                if abort_on_bounds:
                    report = diagnostics.bounds_report(current, init, params, grid, v_init_max=v_init)
                    if not (report.lorentz_ok and report.velocity_ok):
                        raise BoundsViolation("short-time bounds monitor failed", t=current.t)
            observe(current, dt)
    except SolverError as err:
        record.fail(err)
    record.final = current
    return current, record
