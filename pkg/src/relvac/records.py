"""RunRecord: the unit of persistence for one simulation.

On disk a record is a directory::

    config.txt        key = value lines (grid, physics, status)
    init.txt          columns x rho0 u0 v0 w0
    diagnostics.csv   one row per output time
    state_0000.txt    columns x r u v w rho n, header carries t

Floats are written with 17 significant digits so a load reproduces every
value bit for bit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, SolverError
from .grid_ops import Grid
from .thermo import InitialData, PhysParams, State, density_reconstruct

__all__ = ["DIAGNOSTIC_COLUMNS", "RunRecord"]

DIAGNOSTIC_COLUMNS = (
    "t",
    "theta_sq_min",
    "vel_sup_ratio",
    "baryon_residual",
    "E_total",
    "E_u",
    "E_v",
    "E_w",
    "dt",
)

_FMT = "%.17g"


@dataclass
class RunRecord:
    grid: Grid
    params: PhysParams
    init: InitialData
    rows: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""
    abort_node: int | None = None
    abort_t: float | None = None
    n_steps: int = 0
    final: State | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def add_row(self, row: dict | None, snapshot: State | None = None):
        if row is not None:
            self.rows.append({k: float(row[k]) for k in DIAGNOSTIC_COLUMNS})
        if snapshot is not None:
            self.snapshots.append(snapshot)

    def fail(self, err: SolverError):
        self.status = err.reason
        self.message = str(err)
        self.abort_node = err.node
        self.abort_t = err.t

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    # persistence

    def save(self, directory: str | Path) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        p = self.params
        config = {
            "n_cells": self.grid.n_cells,
            "delta": repr(self.grid.delta),
            "mode": "classical" if p.classical else "relativistic",
            "c": "inf" if p.classical else repr(p.c),
            "gamma": repr(p.gamma),
            "mu": repr(p.mu),
            "cfl": repr(p.cfl),
            "status": self.status,
            "message": self.message.replace("\n", " "),
            "abort_node": "" if self.abort_node is None else self.abort_node,
            "abort_t": "" if self.abort_t is None else repr(self.abort_t),
            "n_steps": self.n_steps,
        }
        with open(out / "config.txt", "w") as fh:
            for key, value in config.items():
                fh.write(f"{key} = {value}\n")

        x = self.grid.nodes
        init = self.init
        np.savetxt(
            out / "init.txt",
            np.column_stack([x, init.rho0, init.u0, init.v0, init.w0]),
            fmt=_FMT,
            header="x rho0 u0 v0 w0",
        )

        with open(out / "diagnostics.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(DIAGNOSTIC_COLUMNS)
            for row in self.rows:
                writer.writerow([repr(row[k]) for k in DIAGNOSTIC_COLUMNS])

        for old in out.glob("state_*.txt"):
            old.unlink()
        for k, snap in enumerate(self.snapshots):
            try:
                n, rho = density_reconstruct(snap, init, p, self.grid)
            except SolverError:
                n = rho = np.full(self.grid.size, math.nan)
            np.savetxt(
                out / f"state_{k:04d}.txt",
                np.column_stack([x, snap.r, snap.u, snap.v, snap.w, rho, n]),
                fmt=_FMT,
                header=f"t = {snap.t!r}\nx r u v w rho n",
            )
        return out

    @classmethod
    def load(cls, directory: str | Path) -> "RunRecord":
        src = Path(directory)
        config = {}
        with open(src / "config.txt") as fh:
            for line in fh:
                if "=" in line:
                    key, value = line.split("=", 1)
                    config[key.strip()] = value.strip()
        try:
            grid = Grid(int(config["n_cells"]), float(config["delta"]))
            params = PhysParams(
                c=float(config["c"]),
                gamma=float(config["gamma"]),
                mu=float(config["mu"]),
                cfl=float(config["cfl"]),
            )
        except KeyError as err:
            raise ConfigError(f"{src}: missing key {err}") from None
        table = np.loadtxt(src / "init.txt", ndmin=2)
        init = InitialData(table[:, 1], table[:, 2], table[:, 3], table[:, 4], params.gamma, validate=False)

        rec = cls(grid=grid, params=params, init=init)
        rec.status = config.get("status", "ok")
        rec.message = config.get("message", "")
        rec.abort_node = int(config["abort_node"]) if config.get("abort_node") else None
        rec.abort_t = float(config["abort_t"]) if config.get("abort_t") else None
        rec.n_steps = int(config.get("n_steps", 0))

        with open(src / "diagnostics.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            rec.rows = [{k: float(row[k]) for k in DIAGNOSTIC_COLUMNS} for row in reader]

        for path in sorted(src.glob("state_*.txt")):
            with open(path) as fh:
                t = float(fh.readline().split("=", 1)[1])
            data = np.loadtxt(path, ndmin=2)
            rec.snapshots.append(State(t, data[:, 1], data[:, 2], data[:, 3], data[:, 4]))
        if rec.snapshots:
            rec.final = rec.snapshots[-1]
        return rec
