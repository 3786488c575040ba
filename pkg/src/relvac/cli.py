"""Command-line entry point: ``relvac <command> [options]``.

Exit status: 0 on success (run finished / rate within window), 1 when a
sweep misses its target window or a run aborted, 2 on configuration or
admissibility errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .dynamics import energy_at
from .errors import ConfigError, DomainError, ShapeError, SolverError


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [int(v) for v in _float_list(text)]


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--mode", choices=("relativistic", "classical"))
    p.add_argument("--gamma", type=float)
    p.add_argument("--c", type=float, help="light speed; 'inf' selects the classical solver")
    p.add_argument("--mu", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--n-cells", dest="n_cells", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--output-every", dest="output_every", type=float)
    p.add_argument("--init", help="builtin:NAME (demo, radial, rest, uniform) or file:PATH")
    p.add_argument("--out", type=Path, help="output directory")


def _config(args) -> harness.Config:
    keys = ("mode", "gamma", "c", "mu", "cfl", "n_cells", "delta", "t_end", "output_every", "init")
    overrides = {k: getattr(args, k) for k in keys}
    text = args.config.read_text() if args.config else ""
    return harness.parse_config(text, **overrides)


def _emit_report(report: harness.RateReport, args, name: str) -> int:
    text = harness.format_report(report)
    print(text, end="")
    if args.out:
        path = harness.write_report(report, args.out / f"{name}.txt")
        print(f"report written to {path}")
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    cfg = _config(args)
    record = harness.run_simulation(cfg, args.out, energy=not args.no_energy)
    last = record.rows[-1]
    print(f"status = {record.status}")
    if not record.ok:
        print(f"reason = {record.message} (node {record.abort_node}, t = {record.abort_t})")
    print(f"steps = {record.n_steps}")
    print(f"t = {last['t']:.6g}  theta_sq_min = {last['theta_sq_min']:.6g}  vel_sup_ratio = {last['vel_sup_ratio']:.6g}")
    if args.out:
        print(f"record written to {args.out}")
    return 0 if record.ok else 1


def cmd_limit_sweep(args) -> int:
    spec = harness.SweepSpec("light-speed", args.values, _config(args), norm=args.norm)
    return _emit_report(harness.limit_sweep(spec, workers=args.workers), args, "limit_sweep")


def cmd_viscosity_sweep(args) -> int:
    cfg = _config(args)
    if args.t_end is None and args.config is None:
        cfg = cfg.with_(t_end=0.05)
    spec = harness.SweepSpec("viscosity", args.values, cfg, norm=args.norm)
    return _emit_report(harness.viscosity_sweep(spec, workers=args.workers), args, "viscosity_sweep")


def cmd_refine(args) -> int:
    spec = harness.SweepSpec("refinement", args.values, _config(args), quantity=args.quantity)
    return _emit_report(harness.refinement_study(spec, workers=args.workers), args, "refinement")


def cmd_stability(args) -> int:
    cfg = _config(args)
    if args.t_end is None and args.config is None:
        cfg = cfg.with_(t_end=0.05)
    amp = harness.stability_probe(cfg, args.epsilon, workers=args.workers)
    ok = amp <= harness.STABILITY_LIMIT
    print(f"epsilon = {args.epsilon!r}")
    print(f"amplification = {amp!r}")
    print(f"limit = {harness.STABILITY_LIMIT!r}")
    print(f"passed = {str(ok).lower()}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "stability.txt").write_text(
            f"epsilon = {args.epsilon!r}\namplification = {amp!r}\npassed = {str(ok).lower()}\n"
        )
    return 0 if ok else 1


def cmd_energy_report(args) -> int:
    cfg = _config(args)
    record = harness.run_simulation(cfg, args.out, energy=True)
    print("t,E_total,E_u,E_v,E_w")
    for row in record.rows:
        if not math.isnan(row["E_total"]):
            print(f"{row['t']!r},{row['E_total']!r},{row['E_u']!r},{row['E_v']!r},{row['E_w']!r}")
    snap = energy_at(record.final, record.init, record.params, record.grid) if record.ok else None
    if snap is not None:
        print()
        print(f"terms at t = {snap.t!r}")
        for name, value in snap.terms.items():
            print(f"  {name} = {value!r}")
    totals = np.array([row["E_total"] for row in record.rows])
    totals = totals[np.isfinite(totals)]
    if totals.size:
        print(f"max/first = {float(totals.max() / totals[0])!r}")
    return 0 if record.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relvac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration and write a RunRecord")
    _add_config_flags(p)
    p.add_argument("--no-energy", action="store_true", help="skip the energy functional")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limit-sweep", help="error against the infinite-c run as c grows")
    _add_config_flags(p)
    p.add_argument("--values", type=_float_list, default=[8, 16, 32, 64, 128])
    p.add_argument("--norm", choices=("sup", "weighted-L2"), default="sup")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_limit_sweep)

    p = sub.add_parser("viscosity-sweep", help="distance to the mu = 0 run as mu shrinks")
    _add_config_flags(p)
    p.add_argument("--values", type=_float_list, default=[1e-2, 5e-3, 2.5e-3])
    p.add_argument("--norm", choices=("sup", "weighted-L2"), default="sup")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_viscosity_sweep)

    p = sub.add_parser("refine", help="observed order under dx and dt halving")
    _add_config_flags(p)
    p.add_argument("--values", type=_int_list, default=[64, 128, 256])
    p.add_argument("--quantity", choices=("u", "angular-momentum"), default="u")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("stability", help="amplification of a small initial perturbation")
    _add_config_flags(p)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("energy-report", help="truncated energy functional over a run")
    _add_config_flags(p)
    p.set_defaults(func=cmd_energy_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, ShapeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SolverError as err:
        print(f"solver error [{err.reason}]: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
