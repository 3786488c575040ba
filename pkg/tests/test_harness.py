import math

import numpy as np
import pytest

from relvac import harness
from relvac.errors import ConfigError, DomainError
from relvac.harness import Config, SweepSpec, fit_rate, parse_config
from relvac.records import RunRecord

SMALL = Config(n_cells=32, t_end=0.02, output_every=0.01)


def test_parse_config_keys_and_comments():
    cfg = parse_config(
        """
        # demo run
        mode = relativistic
        c = 32      # light speed
        gamma = 2
        n_cells = 64
        output_every = none
        init = builtin:radial
        """
    )
    assert cfg.c == 32.0 and cfg.n_cells == 64 and cfg.output_every is None and cfg.init == "builtin:radial"


def test_parse_config_infinite_c_selects_classical():
    cfg = parse_config("c = inf")
    assert cfg.mode == "classical" and cfg.params().classical


def test_parse_config_overrides_win():
    assert parse_config("c = 8", c=64.0, mu=None).c == 64.0


@pytest.mark.parametrize("text", ["speed = 3", "c = fast", "c 3", "mode = quantum", "init = demo", "t_end = 0"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("mode = classical\nn_cells = 16\n")
    cfg = harness.load_config(path, t_end=0.5)
    assert cfg.mode == "classical" and cfg.n_cells == 16 and cfg.t_end == 0.5


def test_run_simulation_classical_axial_drift_zero(tmp_path):
    cfg = SMALL.with_(mode="classical")
    record = harness.run_simulation(cfg, tmp_path / "out")
    assert record.ok
    assert np.array_equal(record.final.w, record.init.w0)
    loaded = RunRecord.load(tmp_path / "out")
    assert np.array_equal(loaded.final.w, record.init.w0)


def test_run_simulation_c16_lorentz_and_geometry():
    from relvac.diagnostics import bounds_report

    record = harness.run_simulation(Config(c=16.0, n_cells=128, t_end=0.1))
    assert record.ok
    assert min(record.column("theta_sq_min")) >= 11.0 / 12.0
    for snap in record.snapshots:
        report = bounds_report(snap, record.init, record.params, record.grid)
        assert report.lorentz_ok and report.geometry_ok


def test_run_simulation_rejects_inadmissible_c(tmp_path):
    with pytest.raises(DomainError):
        harness.run_simulation(SMALL.with_(c=0.15), tmp_path / "never")
    assert not (tmp_path / "never").exists()


def test_fit_rate_synthetic_pairs():
    c = np.array([8, 16, 32, 64, 128], dtype=float)
    good = fit_rate(c, 5 * c**-2, harness.LIGHT_SPEED_WINDOW)
    assert good.slope == pytest.approx(-2.0, abs=1e-12) and good.passed
    assert good.intercept == pytest.approx(math.log(5), abs=1e-12)
    bad = fit_rate(c, 5 * c**-1, harness.LIGHT_SPEED_WINDOW)
    assert bad.slope == pytest.approx(-1.0, abs=1e-12) and not bad.passed
    mu = np.array([1e-2, 5e-3, 2.5e-3])
    lin = fit_rate(mu, 3 * mu, harness.VISCOSITY_WINDOW, require_monotone=True)
    assert lin.slope == pytest.approx(1.0, abs=1e-12) and lin.passed and lin.monotone


def test_three_grid_richardson_synthetic():
    h = np.array([1 / 64, 1 / 128, 1 / 256])
    f = 1.25 + 0.7 * h**2
    diffs = np.abs(f[:-1] - f[1:])
    report = fit_rate(h[:-1], diffs, harness.REFINEMENT_WINDOW)
    assert report.slope == pytest.approx(2.0, abs=1e-9) and report.passed  # differences lose digits


def test_fit_rate_flags_non_monotone():
    report = fit_rate([3.0, 2.0, 1.0], [3.0, 1.0, 2.0], (-10, 10), require_monotone=True)
    assert not report.monotone and not report.passed


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "light-speed", "values": (8, 16)},
        {"kind": "light-speed", "values": (8, 32, 16)},
        {"kind": "wavelength", "values": (1, 2, 3)},
        {"kind": "light-speed", "values": (8, 16, 32), "norm": "L7"},
        {"kind": "refinement", "values": (8, 16, 32), "quantity": "mass"},
    ],
)
def test_sweep_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        SweepSpec(**kwargs)


def test_refinement_grids_must_double():
    with pytest.raises(ConfigError):
        harness.refinement_study(SweepSpec("refinement", (32, 48, 64), SMALL))


def test_limit_sweep_members_are_order_independent():
    base = Config(n_cells=32, t_end=0.02)
    up = harness.limit_sweep(SweepSpec("light-speed", (8, 16, 32), base))
    down = harness.limit_sweep(SweepSpec("light-speed", (32, 16, 8), base))
    assert dict(up.pairs) == dict(down.pairs)
    assert up.slope == pytest.approx(down.slope, abs=1e-12)


def test_parallel_sweep_matches_serial():
    base = Config(n_cells=32, t_end=0.02)
    spec = SweepSpec("light-speed", (8, 16, 32), base)
    assert harness.limit_sweep(spec, workers=2).pairs == harness.limit_sweep(spec, workers=1).pairs


def test_weighted_norm_sweep_option():
    report = harness.limit_sweep(SweepSpec("light-speed", (8, 16, 32), Config(n_cells=32, t_end=0.02), norm="weighted-L2"))
    assert all(e > 0 for _, e in report.pairs)


def test_stability_zero_perturbation_guard():
    assert harness.stability_probe(SMALL, 0.0) == 0.0


def test_perturbation_distance_is_epsilon():
    cfg = SMALL
    init = cfg.initial_data()
    other = harness.perturb(init, 1e-6)
    dist = max(np.max(np.abs(a - b)) for a, b in zip((other.u0, other.v0, other.w0), (init.u0, init.v0, init.w0)))
    assert dist == pytest.approx(1e-6, rel=1e-9)


def test_report_round_trip_text(tmp_path):
    c = np.array([8.0, 16.0, 32.0])
    report = fit_rate(c, 5 * c**-2, harness.LIGHT_SPEED_WINDOW, kind="light-speed", parameter="c")
    path = harness.write_report(report, tmp_path / "r" / "limit.txt")
    text = path.read_text()
    assert "slope = " in text and "passed = true" in text
    rows = text.strip().splitlines()[-3:]
    assert [tuple(float(v) for v in row.split(",")) for row in rows] == report.pairs
