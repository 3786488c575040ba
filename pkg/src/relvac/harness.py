"""Experiment orchestration: configs, single runs, sweeps and rate reports.

Every sweep member shares one fixed time step, the smallest initial
StepControl dt over all members (reference included), so time-stepping
error cancels in the differences.  Members are independent and may run in
a process pool; results are always gathered by member index.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .diagnostics import weighted_norm
from .dynamics import advance, rhs, step_control
from .errors import ConfigError, SolverError
from .grid_ops import Grid, deriv
from .records import RunRecord
from .thermo import (
    InitialData,
    PhysParams,
    State,
    builtin_data,
    check_admissibility,
    load_initial_data,
)

__all__ = [
    "Config",
    "parse_config",
    "load_config",
    "run_simulation",
    "SweepSpec",
    "RateReport",
    "fit_rate",
    "limit_sweep",
    "viscosity_sweep",
    "refinement_study",
    "stability_probe",
    "perturb",
    "format_report",
    "write_report",
]

LIGHT_SPEED_WINDOW = (-2.3, -1.7)
VISCOSITY_WINDOW = (0.7, 1.3)
REFINEMENT_WINDOW = (1.7, 2.3)
# an exact invariant only needs "at least second order"
INVARIANT_WINDOW = (2.0, math.inf)
STABILITY_LIMIT = 100.0


# configuration


@dataclass(frozen=True)
class Config:
    mode: str = "relativistic"
    gamma: float = 2.0
    c: float = 16.0
    mu: float = 0.0
    cfl: float = 0.5
    n_cells: int = 256
    delta: float = 0.125
    t_end: float = 0.1
    output_every: float | None = 0.01
    init: str = "builtin:demo"

    def __post_init__(self):
        if self.mode not in ("relativistic", "classical"):
            raise ConfigError(f"mode must be 'relativistic' or 'classical', got {self.mode!r}")
        if not self.t_end > 0.0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not (self.init.startswith("builtin:") or self.init.startswith("file:")):
            raise ConfigError(f"init must be builtin:NAME or file:PATH, got {self.init!r}")

    @property
    def light_speed(self) -> float:
        return math.inf if self.mode == "classical" else self.c

    def params(self) -> PhysParams:
        return PhysParams(c=self.light_speed, gamma=self.gamma, mu=self.mu, cfl=self.cfl)

    def grid(self) -> Grid:
        return Grid(self.n_cells, self.delta)

    def initial_data(self, grid: Grid | None = None) -> InitialData:
        grid = grid or self.grid()
        kind, _, value = self.init.partition(":")
        if kind == "builtin":
            return builtin_data(value, grid, self.gamma)
        return load_initial_data(value, grid, self.gamma)

    def with_(self, **changes) -> "Config":
        return replace(self, **changes)


_FIELD_TYPES = {
    "mode": str,
    "gamma": float,
    "c": float,
    "mu": float,
    "cfl": float,
    "n_cells": int,
    "delta": float,
    "t_end": float,
    "output_every": float,
    "init": str,
}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if key == "output_every" and raw.lower() in ("", "none"):
        return None
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)  # accepts "inf"
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def parse_config(text: str, **overrides) -> Config:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if math.isinf(values.get("c", 0.0)):
        values.setdefault("mode", "classical")
    return Config(**values)


def load_config(path: str | Path, **overrides) -> Config:
    return parse_config(Path(path).read_text(), **overrides)


# single runs


def run_simulation(
    config: Config,
    out: str | Path | None = None,
    *,
    energy: bool = True,
    dt_fixed: float | None = None,
) -> RunRecord:
    """Gate on admissibility, integrate to t_end and optionally persist."""
    grid = config.grid()
    init = config.initial_data(grid)
    params = config.params()
    check_admissibility(params, init)
    _, record = advance(
        State.initial(init, grid),
        init,
        params,
        grid,
        config.t_end,
        output_every=config.output_every,
        dt_fixed=dt_fixed,
        energy=energy,
    )
    if out is not None:
        record.save(out)
    return record


def _initial_dt(config: Config, init: InitialData | None = None) -> float:
    grid = config.grid()
    init = init or config.initial_data(grid)
    params = config.params()
    state = State.initial(init, grid)
    ev = rhs(state, init, params, grid)
    return step_control(state, init, params, grid, ev.max_wave_speed).dt


def _final_state(config: Config, dt: float | None, init: InitialData | None = None):
    """Run one member without snapshots; returns (State, status, message)."""
    grid = config.grid()
    init = init or config.initial_data(grid)
    params = config.params()
    check_admissibility(params, init)
    state, record = advance(
        State.initial(init, grid),
        init,
        params,
        grid,
        config.t_end,
        dt_fixed=dt,
        energy=False,
        keep_snapshots=False,
    )
    return state, record.status, record.message


def _run_member(job):
    config, dt, init = job
    return _final_state(config, dt, init)


def _map(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_run_member(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_member, jobs))


# sweeps and reports


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    values: tuple
    base: Config = field(default_factory=Config)
    horizon: float | None = None
    norm: str = "sup"
    quantity: str = "u"

    def __post_init__(self):
        kinds = ("light-speed", "viscosity", "refinement", "stability")
        if self.kind not in kinds:
            raise ConfigError(f"sweep kind must be one of {kinds}, got {self.kind!r}")
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if self.kind != "stability":
            if len(values) < 3:
                raise ConfigError("a rate fit needs at least 3 sweep values")
            steps = np.diff(np.asarray(values, dtype=float))
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ConfigError(f"sweep values must be strictly monotone, got {values}")
        if self.norm not in ("sup", "weighted-L2"):
            raise ConfigError(f"norm must be 'sup' or 'weighted-L2', got {self.norm!r}")
        if self.quantity not in ("u", "angular-momentum"):
            raise ConfigError(f"quantity must be 'u' or 'angular-momentum', got {self.quantity!r}")

    @property
    def config(self) -> Config:
        return self.base if self.horizon is None else self.base.with_(t_end=self.horizon)


@dataclass
class RateReport:
    kind: str
    parameter: str
    pairs: list
    slope: float
    intercept: float
    residual: float
    window: tuple
    passed: bool
    monotone: bool = True
    flagged: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)


def fit_rate(
    params, errors, window, *, kind: str = "", parameter: str = "value", require_monotone: bool = False
) -> RateReport:
    """Least-squares slope of log(error) against log(parameter)."""
    params = np.asarray(params, dtype=float)
    errors = np.asarray(errors, dtype=float)
    pairs = [(float(p), float(e)) for p, e in zip(params, errors)]
    good = np.isfinite(errors) & (errors > 0.0) & (params > 0.0)
    slope = intercept = residual = math.nan
    if good.sum() >= 2:
        lx, ly = np.log(params[good]), np.log(errors[good])
        (slope, intercept), res, *_ = np.polyfit(lx, ly, 1, full=True)
        slope, intercept = float(slope), float(intercept)
        residual = float(np.sqrt(res[0] / good.sum())) if res.size else 0.0
    order = np.argsort(params)[::-1]
    monotone = bool(np.all(np.diff(errors[order]) < 0.0))
    passed = bool(good.all() and window[0] <= slope <= window[1] and (monotone or not require_monotone))
    return RateReport(kind, parameter, pairs, slope, intercept, residual, tuple(window), passed, monotone)


def _norm(f, norm: str, grid: Grid, rho0) -> float:
    if norm == "sup":
        return float(np.max(np.abs(f)))
    return weighted_norm(f, "alpha0", grid, rho0)


def _state_distance(a: State, b: State, grid: Grid, with_rx: bool = True, norm: str = "sup", rho0=None) -> float:
    diffs = [a.u - b.u, a.v - b.v, a.w - b.w, a.r - b.r]
    if with_rx:
        diffs.append(deriv(a.r, grid) - deriv(b.r, grid))
    return max(_norm(d, norm, grid, rho0) for d in diffs)


def limit_sweep(spec: SweepSpec, workers: int = 1) -> RateReport:
    """Error against the infinite-c reference as c grows; expects slope -2."""
    if spec.kind != "light-speed":
        raise ConfigError("limit_sweep needs a light-speed SweepSpec")
    base = spec.config.with_(mode="relativistic")
    reference = base.with_(mode="classical")
    members = [base.with_(c=float(c)) for c in spec.values]
    dt = min(_initial_dt(cfg) for cfg in members + [reference])
    results = _map([(cfg, dt, None) for cfg in [reference] + members], workers)
    ref_state, ref_status, ref_msg = results[0]
    if ref_status != "ok":
        raise SolverError(f"infinite-c reference aborted: {ref_msg}")
    grid = base.grid()
    errors, flagged = [], []
    for c, (state, status, _) in zip(spec.values, results[1:]):
        if status != "ok":
            flagged.append(c)
            errors.append(math.nan)
        else:
            errors.append(_state_distance(state, ref_state, grid, norm=spec.norm, rho0=base.initial_data(grid).rho0))
    report = fit_rate(spec.values, errors, LIGHT_SPEED_WINDOW, kind="light-speed", parameter="c")
    report.flagged = flagged
    report.passed = report.passed and not flagged
    report.notes = {"dt": dt, "n_cells": base.n_cells, "t_end": base.t_end}
    return report


def viscosity_sweep(spec: SweepSpec, workers: int = 1) -> RateReport:
    """sup |u_mu - u_0| against mu; expects slope 1 and monotone decrease."""
    if spec.kind != "viscosity":
        raise ConfigError("viscosity_sweep needs a viscosity SweepSpec")
    base = spec.config
    members = [base.with_(mu=float(mu)) for mu in spec.values]
    reference = base.with_(mu=0.0)
    dt = min(_initial_dt(cfg) for cfg in members + [reference])
    results = _map([(cfg, dt, None) for cfg in [reference] + members], workers)
    ref_state, ref_status, ref_msg = results[0]
    if ref_status != "ok":
        raise SolverError(f"mu = 0 reference aborted: {ref_msg}")
    errors, flagged = [], []
    for mu, (state, status, _) in zip(spec.values, results[1:]):
        if status != "ok":
            flagged.append(mu)
            errors.append(math.nan)
        else:
            grid = base.grid()
            errors.append(_norm(state.u - ref_state.u, spec.norm, grid, base.initial_data(grid).rho0))
    report = fit_rate(
        spec.values, errors, VISCOSITY_WINDOW, kind="viscosity", parameter="mu", require_monotone=True
    )
    report.flagged = flagged
    report.passed = report.passed and not flagged
    report.notes = {"dt": dt, "n_cells": base.n_cells, "t_end": base.t_end}
    return report


def refinement_study(spec: SweepSpec, workers: int = 1) -> RateReport:
    """Three-grid (or longer) study under simultaneous dx and dt halving.

    ``quantity="u"``: Richardson self-convergence, pairs (dx_coarse, |u_h - u_h/2|).
    ``quantity="angular-momentum"``: pairs (dx, max |r v - x v0|), an exact invariant
    of the classical system.  The fitted slope is the observed order.
    """
    if spec.kind != "refinement":
        raise ConfigError("refinement_study needs a refinement SweepSpec")
    sizes = [int(n) for n in spec.values]
    if any(b != 2 * a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"refinement grids must double, got {sizes}")
    base = spec.config
    members = [base.with_(n_cells=n) for n in sizes]
    # dt * n is held fixed so dt halves with dx
    dt_n = min(_initial_dt(cfg) * cfg.n_cells for cfg in members)
    results = _map([(cfg, dt_n / cfg.n_cells, None) for cfg in members], workers)
    flagged = [n for n, (_, status, _) in zip(sizes, results) if status != "ok"]
    if spec.quantity == "u":
        params = [1.0 / n for n in sizes[:-1]]
        errors = [
            float(np.max(np.abs(coarse.u - fine.u[::2])))
            for (coarse, _, _), (fine, _, _) in zip(results, results[1:])
        ]
    else:
        params, errors = [], []
        for cfg, (state, _, _) in zip(members, results):
            grid = cfg.grid()
            init = cfg.initial_data(grid)
            params.append(1.0 / cfg.n_cells)
            errors.append(float(np.max(np.abs(state.r * state.v - grid.nodes * init.v0))))
    window = REFINEMENT_WINDOW if spec.quantity == "u" else INVARIANT_WINDOW
    report = fit_rate(params, errors, window, kind="refinement", parameter="dx")
    report.flagged = flagged
    report.passed = report.passed and not flagged
    report.notes = {"dt_times_n": dt_n, "t_end": base.t_end, "quantity": spec.quantity}
    return report


def perturb(init: InitialData, epsilon: float) -> InitialData:
    """Shift (u0, v0) by epsilon * x and w0 by epsilon: max-norm distance epsilon."""
    x = Grid(init.rho0.size - 1).nodes
    return InitialData(
        init.rho0,
        init.u0 + epsilon * x,
        init.v0 + epsilon * x,
        init.w0 + epsilon,
        init.gamma,
    )


def stability_probe(config: Config, epsilon: float = 1e-6, workers: int = 1) -> float:
    """Amplification max |solution difference| / epsilon at t_end; 0/0 counts as 0."""
    grid = config.grid()
    init = config.initial_data(grid)
    if epsilon == 0.0:
        return 0.0
    other = perturb(init, epsilon)
    dt = min(_initial_dt(config, init), _initial_dt(config, other))
    results = _map([(config, dt, init), (config, dt, other)], workers)
    for state, status, message in results:
        if status != "ok":
            raise SolverError(f"stability member aborted: {message}")
    distance = _state_distance(results[0][0], results[1][0], grid, with_rx=False)
    return distance / abs(epsilon)


# report output


def format_report(report: RateReport) -> str:
    lines = [
        f"kind = {report.kind}",
        f"parameter = {report.parameter}",
        f"slope = {report.slope!r}",
        f"intercept = {report.intercept!r}",
        f"residual = {report.residual!r}",
        f"window = {report.window[0]!r} {report.window[1]!r}",
        f"monotone = {str(report.monotone).lower()}",
        f"passed = {str(report.passed).lower()}",
        f"flagged = {' '.join(repr(v) for v in report.flagged)}",
    ]
    for key, value in report.notes.items():
        lines.append(f"note.{key} = {value!r}" if not isinstance(value, str) else f"note.{key} = {value}")
    lines.append("")
    lines.append(f"{report.parameter},error")
    lines.extend(f"{p!r},{e!r}" for p, e in report.pairs)
    return "\n".join(lines) + "\n"


def write_report(report: RateReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_report(report))
    return path
