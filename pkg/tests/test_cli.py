import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tumorhopf.cli import (AnalysisSummary, RunConfig, fmt, main, parse_config_text,
                           svg_line_chart)
from tumorhopf.errors import ConfigError


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _quantities(out):
    data = json.loads((out / "summary.json").read_text())
    return {k: v["value"] for k, v in data["quantities"].items()}, data


# --- configuration -----------------------------------------------------------

def test_parse_config_types_and_comments():
    raw = parse_config_text("""
        # leading comment
        model.preset = stable   # trailing comment
        grid.n = 99
        analysis.dose = 0.5
        sweep.spectrum = yes
    """)
    assert raw == {"model.preset": "stable", "grid.n": 99, "analysis.dose": 0.5,
                   "sweep.spectrum": True}


@pytest.mark.parametrize("text", ["model.colour = red", "grid.n = many", "grid.n 10",
                                  "analysis.dose = 1\nanalysis.dose = 2",
                                  "model.d = inf", "sweep.spectrum = maybe"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("raw", [
    {"model.preset": "stable", "analysis.dose": 0.5, "analysis.beta": 1.2},
    {"model.preset": "stable", "analysis.beta": 1.0},
    {"model.preset": "stable", "analysis.dose": -1.0},
    {"model.preset": "nope"},
    {"model.a1": 0.0, "model.a2": 0.5},
    {"model.preset": "stable", "analysis.m": 4},
    {"model.preset": "stable", "simulation.history": "warm"},
    {"model.preset": "stable", "hopf.tau_lo": 2.0, "hopf.tau_hi": 1.0},
    {"model.preset": "stable", "model.bc": "robin"},
])
def test_run_config_validation(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(raw)


def test_run_config_overrides():
    cfg = RunConfig.from_mapping({"model.preset": "hopf", "model.d": 0.2,
                                  "simulation.tau": 0.5, "analysis.beta": 0.3})
    assert cfg.params.d == 0.2 and cfg.params.a1 == 2.0
    assert cfg.tau == 0.5
    beta, dose = cfg.resolve_beta()
    assert beta == 0.3 and dose > 0


def test_fmt():
    assert fmt(None) == "NaN"
    assert fmt(float("nan")) == "NaN"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true"
    assert fmt(np.int64(7)) == "7"


def test_svg_chart_is_well_formed():
    x = np.linspace(0, 1, 50)
    text = svg_line_chart([("a", x, x ** 2), ("b", x, np.ones_like(x))], title="t")
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


# --- subcommands ---------------------------------------------------------------

def test_analyze_stable(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\n")
    out = tmp_path / "out"
    assert main(["analyze", "--config", str(cfg), "--out", str(out)]) == 0
    q, data = _quantities(out)
    assert q["region"] == "I"
    assert q["region_verdict"] == "stable all tau"
    assert q["kappa_beta"] == pytest.approx(-0.46, abs=2e-3)
    assert q["tau_k"] == []
    assert q["spectral_abscissa"] < 0
    for entry in data["quantities"].values():
        assert entry["grid_n"] == 199 and entry["module"]
    rows = _rows(out / "analysis.csv")
    assert {r["quantity"] for r in rows} == set(q)
    assert next(r for r in rows if r["quantity"] == "tau_c")["value"] == "NaN"


def test_analyze_hopf(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 0.4\n")
    out = tmp_path / "out"
    assert main(["analyze", "--config", str(cfg), "--out", str(out), "--grid-n", "99"]) == 0
    q, _ = _quantities(out)
    assert q["region"] == "II"
    assert len(q["tau_k"]) == 6
    assert 0 < q["tau_c"] < 1.75 and q["slope_sign"] == 1


def test_analyze_rejects_beta_and_dose(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\nanalysis.beta = 1.2\n")
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "none.cfg")]) == 2


def test_outputs_deterministic_and_round_trip(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 1.0\n")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["analyze", "--config", str(cfg), "--out", str(out), "--grid-n", "99"]) == 0
    for name in ("summary.json", "analysis.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    data = json.loads((outs[0] / "summary.json").read_text())
    summary = AnalysisSummary.from_dict(data)
    assert summary.to_dict() == data


def test_steady(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\n")
    out = tmp_path / "out"
    assert main(["steady", "--config", str(cfg), "--out", str(out), "--svg"]) == 0
    rows = _rows(out / "steady.csv")
    assert len(rows) == 199
    assert max(float(r["u_newton"]) for r in rows) == pytest.approx(0.4817, abs=1e-3)
    assert (out / "steady.svg").exists()


def test_steady_with_continuation(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 1.2\n"
                           "analysis.continue_from = 0.12\n")
    assert main(["steady", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--grid-n", "99"]) == 0
    bad = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 1.2\n", "bad.cfg")
    assert main(["steady", "--config", str(bad), "--out", str(tmp_path / "p"),
                 "--grid-n", "99"]) == 3


def test_simulate_periodic(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 0.4\n"
                           "simulation.tau = 1.75\nsimulation.T = 300\nsimulation.stride = 500\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--svg"]) == 0
    behavior = json.loads((out / "behavior.json").read_text())
    assert behavior["verdict"] == "Periodic"
    probe = _rows(out / "trace_probe.csv")
    assert list(probe[0]) == ["t", "u_probe"]
    snaps = _rows(out / "snapshots.csv")
    assert list(snaps[0]) == ["t", "x", "u"]
    for name in ("probe.svg", "profile.svg"):
        ET.parse(out / name)


def test_simulate_converged_without_snapshots(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\n"
                           "simulation.tau = 0.1\nsimulation.dt = 0.01\n"
                           "simulation.stride = 0\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads((out / "behavior.json").read_text())["verdict"] == "Converged"
    assert (out / "trace_probe.csv").exists()
    assert not (out / "snapshots.csv").exists()


def test_simulate_from_steady_seed(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\n"
                           "simulation.tau = 0.1\nsimulation.dt = 0.01\nsimulation.T = 20\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--grid-n", "49",
                 "--seed-history", "steady", "--svg"]) == 0
    probe = _rows(out / "trace_probe.csv")
    assert float(probe[-1]["u_probe"]) == pytest.approx(float(probe[0]["u_probe"]), abs=1e-8)


def test_simulate_blowup_exit_code(tmp_path):
    cfg = _write(tmp_path, "model.d = 0.1\nmodel.a1 = 3\nmodel.a2 = 0\nanalysis.beta = 0\n"
                           "simulation.tau = 0.5\nsimulation.dt = 0.5\nsimulation.T = 200\n"
                           "simulation.history = 50\n")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--grid-n", "20"]) == 4
    behavior = json.loads((out / "behavior.json").read_text())
    assert behavior["verdict"] == "Blowup" and behavior["blowup_time"] > 0


def test_simulate_short_horizon_is_config_error(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 0.4\nsimulation.T = 5\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_hopf_command(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 0.4\nhopf.tau_hi = 1.75\n")
    out = tmp_path / "out"
    assert main(["hopf", "--config", str(cfg), "--out", str(out), "--grid-n", "99"]) == 0
    data = json.loads((out / "hopf.json").read_text())
    assert 0 < data["tau_c"] < 1.75 and data["slope_sign"] == 1
    assert abs(data["eigenvalue_re"]) <= 1e-6


def test_hopf_without_crossing_is_numerical_error(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\nhopf.tau_hi = 2\n")
    assert main(["hopf", "--config", str(cfg), "--out", str(tmp_path / "o"),
                 "--grid-n", "39"]) == 3


def test_sweep_dose_kappa_affine_and_negative(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nsweep.parameter = dose\n"
                           "sweep.lo = 0\nsweep.hi = 1.013\nsweep.steps = 9\n")
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--grid-n", "99",
                 "--jobs", "2"]) == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 9
    beta = np.array([float(r["beta"]) for r in rows])
    kappa = np.array([float(r["kappa"]) for r in rows])
    assert np.all(np.diff([float(r["value"]) for r in rows]) > 0)
    assert np.all(kappa < 0)
    slope = np.polyfit(beta, kappa, 1)
    assert np.max(np.abs(np.polyval(slope, beta) - kappa)) < 1e-10
    assert all(r["max_re_lambda"] == "NaN" for r in rows)


def test_sweep_beta_peak_changes_sign_at_beta_star(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nsweep.parameter = beta\n"
                           "sweep.lo = 0.38\nsweep.hi = 0.42\nsweep.steps = 21\n")
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--grid-n", "99"]) == 0
    rows = _rows(out / "sweep.csv")
    beta = np.array([float(r["beta"]) for r in rows])
    peak = np.array([float(r["steady_peak"]) for r in rows])
    below = beta < 0.4
    assert np.all(peak[below] > 0)
    first_nonpositive = beta[~below & ~(peak > 0)][0]
    last_positive = beta[peak > 0][-1]
    step = beta[1] - beta[0]
    assert first_nonpositive - last_positive <= step + 1e-12
    assert abs(last_positive - 0.4) <= step + 1e-12


def test_sweep_single_step_and_tau(tmp_path):
    cfg = _write(tmp_path, "model.preset = hopf\nanalysis.dose = 0.4\nsweep.parameter = tau\n"
                           "sweep.lo = 0.5\nsweep.hi = 0.5\nsweep.steps = 1\n")
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--grid-n", "49"]) == 0
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 1
    assert float(rows[0]["max_re_lambda"]) < 0


@pytest.mark.parametrize("extra", ["sweep.lo = 1\nsweep.hi = 0\nsweep.steps = 3\n",
                                   "sweep.lo = 0\nsweep.hi = 1\nsweep.steps = 0\n",
                                   "sweep.lo = 0\nsweep.hi = 1\n"])
def test_sweep_empty_range(tmp_path, extra):
    cfg = _write(tmp_path, "model.preset = stable\nsweep.parameter = dose\n" + extra)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_bad_jobs_flag(tmp_path):
    cfg = _write(tmp_path, "model.preset = stable\nanalysis.dose = 0.5\n")
    assert main(["analyze", "--config", str(cfg), "--jobs", "0"]) == 2
