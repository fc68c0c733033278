"""Command-line front end.

Configuration is flat ``section.key = value`` text (``#`` starts a comment)::

    model.preset = hopf
    analysis.dose = 0.4
    simulation.tau = 1.75
    simulation.T = 300

Subcommands ``analyze``, ``steady``, ``simulate``, ``hopf`` and ``sweep`` write
CSV/JSON artifacts (and SVG line plots with ``--svg``) into the output
directory. Exit codes: 0 success, 2 configuration error, 3 numerical
failure, 4 blowup during simulation.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bifurcation as bif
from .char_spectrum import hopf_crossing, linearize, rightmost_eigenvalues
from .dde_sim import History, default_dt, detect_behavior, simulate
from .errors import (BlowupError, ConfigError, DegenerateCase, DomainError, HopfNotApplicable,
                     InsufficientData, NoCrossing, NumericalError, TumorModelError,
                     WrongSideOfBetaStar)
from .model import BOUNDARY_CONDITIONS, PRESETS, ModelParams, beta_to_dose, dose_to_beta
from .steady_state import TRIVIAL_LEVEL, SteadyStateResult, continue_branch, newton_solve
from .system import ModelOps, build_ops

log = logging.getLogger("tumorhopf")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BLOWUP = 0, 2, 3, 4
SIG_DIGITS = 12

# ---------------------------------------------------------------------------
# configuration

_MODEL_FLOATS = ("d", "a1", "a2", "u_max", "r0", "alpha1", "alpha2", "tau")
_SCHEMA = {
    "model.preset": str, "model.bc": str,
    **{f"model.{k}": float for k in _MODEL_FLOATS},
    "grid.n": int,
    "analysis.beta": float, "analysis.dose": float, "analysis.k_max": int,
    "analysis.m": int, "analysis.continue_from": float,
    "simulation.tau": float, "simulation.T": float, "simulation.dt": float,
    "simulation.history": str, "simulation.stride": int,
    "hopf.tau_lo": float, "hopf.tau_hi": float,
    "sweep.parameter": str, "sweep.lo": float, "sweep.hi": float, "sweep.steps": int,
    "sweep.spectrum": bool,
    "output.dir": str,
}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config_text(text: str) -> dict:
    """Parse flat dotted key-value text into a typed dict."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        kind = _SCHEMA[key]
        try:
            if kind is bool:
                out[key] = _parse_bool(value)
            elif kind is int:
                out[key] = int(value)
            elif kind is float:
                out[key] = float(value)
                if not math.isfinite(out[key]):
                    raise ConfigError(f"line {lineno}: {key} must be finite")
            else:
                out[key] = value
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return out


@dataclass
class RunConfig:
    params: ModelParams
    n: int = 199
    beta: Optional[float] = None
    dose: Optional[float] = None
    k_max: int = 5
    m: int = 16
    continue_from: Optional[float] = None
    tau: float = 0.0
    T: float = 300.0
    dt: Optional[float] = None
    history: str = "0.1"
    stride: int = 100
    tau_lo: float = 0.0
    tau_hi: Optional[float] = None
    sweep: dict = field(default_factory=dict)
    out: Path = Path("out")

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        preset = raw.get("model.preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            base = PRESETS[preset]()
            kw = {k: getattr(base, k) for k in _MODEL_FLOATS}
            kw["bc"] = base.bc
        else:
            missing = [k for k in ("d", "a1", "a2") if f"model.{k}" not in raw]
            if missing:
                raise ConfigError(f"model.{missing[0]} required when no preset is given")
            kw = {}
        for k in _MODEL_FLOATS:
            if f"model.{k}" in raw:
                kw[k] = raw[f"model.{k}"]
        if "model.bc" in raw:
            if raw["model.bc"] not in BOUNDARY_CONDITIONS:
                raise ConfigError(f"model.bc must be one of {BOUNDARY_CONDITIONS}")
            kw["bc"] = raw["model.bc"]
        if "simulation.tau" in raw:
            kw["tau"] = raw["simulation.tau"]
        params = ModelParams(**kw)

        beta, dose = raw.get("analysis.beta"), raw.get("analysis.dose")
        if beta is not None and dose is not None:
            raise ConfigError("give exactly one of analysis.beta and analysis.dose")
        if beta is not None and not 0 <= beta < 1:
            raise ConfigError("analysis.beta must lie in [0, 1)")
        if dose is not None and dose < 0:
            raise ConfigError("analysis.dose must be nonnegative")

        cfg = cls(params=params, beta=beta, dose=dose, tau=params.tau)
        cfg.n = raw.get("grid.n", cfg.n)
        cfg.k_max = raw.get("analysis.k_max", cfg.k_max)
        cfg.m = raw.get("analysis.m", cfg.m)
        cfg.continue_from = raw.get("analysis.continue_from")
        cfg.T = raw.get("simulation.T", cfg.T)
        cfg.dt = raw.get("simulation.dt")
        cfg.history = raw.get("simulation.history", cfg.history)
        cfg.stride = raw.get("simulation.stride", cfg.stride)
        cfg.tau_lo = raw.get("hopf.tau_lo", cfg.tau_lo)
        cfg.tau_hi = raw.get("hopf.tau_hi")
        cfg.sweep = {k.split(".", 1)[1]: v for k, v in raw.items() if k.startswith("sweep.")}
        cfg.out = Path(raw.get("output.dir", "out"))
        cfg.validate()
        return cfg

    def validate(self):
        if self.k_max < 0:
            raise ConfigError("analysis.k_max must be nonnegative")
        if self.m < 8:
            raise ConfigError("analysis.m must be at least 8")
        if self.T <= 0:
            raise ConfigError("simulation.T must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("simulation.dt must be positive")
        if self.stride < 0:
            raise ConfigError("simulation.stride must be nonnegative")
        if self.tau_hi is not None and self.tau_hi <= self.tau_lo:
            raise ConfigError("hopf.tau_hi must exceed hopf.tau_lo")
        if self.tau_lo < 0:
            raise ConfigError("hopf.tau_lo must be nonnegative")
        _history_value(self.history)

    def resolve_beta(self) -> tuple[float, float]:
        """(beta, dose) pair; raises if neither was configured."""
        if self.beta is None and self.dose is None:
            raise ConfigError("analysis.beta or analysis.dose is required")
        try:
            if self.dose is not None:
                return dose_to_beta(self.dose, self.params), self.dose
            return self.beta, beta_to_dose(self.beta, self.params)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def _history_value(spec: str):
    spec = spec.strip()
    if spec == "steady":
        return "steady"
    try:
        value = float(spec)
    except ValueError:
        raise ConfigError(f"history must be a number or 'steady', got {spec!r}") from None
    if not math.isfinite(value):
        raise ConfigError("history value must be finite")
    return value


# ---------------------------------------------------------------------------
# formatting

def fmt(value) -> str:
    """CSV cell text: 12 significant digits, ``NaN`` for undefined."""
    if value is None:
        return "NaN"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "NaN" if math.isnan(v) else format(v, f".{SIG_DIGITS}g")
    return str(value)


def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if not math.isfinite(v) else float(format(v, f".{SIG_DIGITS}g"))
    return value


def write_json(path: Path, payload: dict):
    text = json.dumps(_json_ready(payload), indent=2, allow_nan=True)
    path.write_text(text + "\n", newline="\n")


def write_csv(path: Path, header: Sequence[str], rows):
    lines = [",".join(header)]
    lines += [",".join(fmt(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="\n")


def svg_line_chart(series, title: str = "", xlabel: str = "", ylabel: str = "",
                   width: int = 640, height: int = 360) -> str:
    """Minimal SVG line chart; ``series`` is a list of ``(label, x, y)``."""
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 40
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + (1 - (y - y0) / (y1 - y0)) * ph

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
             f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
             f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
             f'transform="rotate(-90 14 {height / 2:.1f})">{ylabel}</text>',
             f'<text x="{pad_l - 4}" y="{pad_t + 4}" text-anchor="end" font-size="10">{y1:.4g}</text>',
             f'<text x="{pad_l - 4}" y="{pad_t + ph}" text-anchor="end" font-size="10">{y0:.4g}</text>',
             f'<text x="{pad_l}" y="{pad_t + ph + 14}" text-anchor="middle" font-size="10">{x0:.4g}</text>',
             f'<text x="{pad_l + pw}" y="{pad_t + ph + 14}" text-anchor="middle" font-size="10">{x1:.4g}</text>']
    for i, (label, x, y) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        # thin very long series; the chart is a preview, not data
        step = max(1, x.size // 2000)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[::step], y[::step]))
        color = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{pad_l + 8}" y="{pad_t + 14 + 14 * i}" font-size="11" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# analysis summary

SUMMARY_FIELDS = (
    ("beta", "model"), ("dose", "model"),
    ("beta_star", "spectral"), ("phi_star_sup", "spectral"), ("phi_star_l2", "spectral"),
    ("spectral_residual", "spectral"),
    ("theta1", "bifurcation"), ("theta2", "bifurcation"),
    ("theta3", "bifurcation"), ("theta4", "bifurcation"),
    ("kappa_beta", "bifurcation"), ("kappa_star", "bifurcation"),
    ("kappa_tilde_star", "bifurcation"), ("region", "bifurcation"),
    ("region_verdict", "bifurcation"),
    ("approx_peak", "bifurcation"), ("newton_peak", "steady_state"),
    ("newton_residual", "steady_state"), ("newton_positive", "steady_state"),
    ("hopf_angle", "bifurcation"), ("l_star", "bifurcation"), ("omega", "bifurcation"),
    ("tau_k", "bifurcation"),
    ("tau_c", "char_spectrum"), ("omega_c", "char_spectrum"), ("slope_sign", "char_spectrum"),
    ("spectrum_tau", "char_spectrum"), ("spectral_abscissa", "char_spectrum"),
    ("simulation_verdict", "dde_sim"),
)
_MODULE_OF = dict(SUMMARY_FIELDS)


@dataclass
class AnalysisSummary:
    """Pipeline results; each entry carries its producing module and grid size."""

    grid_n: int
    bc: str
    values: dict = field(default_factory=dict)

    def set(self, name: str, value):
        if name not in _MODULE_OF:
            raise KeyError(name)
        self.values[name] = value

    def get(self, name: str, default=None):
        return self.values.get(name, default)

    def to_dict(self) -> dict:
        entries = {}
        for name, module in SUMMARY_FIELDS:
            value = self.values.get(name)
            if isinstance(value, float) and math.isnan(value):
                value = None
            entries[name] = {"value": value, "module": module, "grid_n": self.grid_n}
        return {"grid": {"n": self.grid_n, "bc": self.bc}, "quantities": entries}

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisSummary":
        out = cls(grid_n=data["grid"]["n"], bc=data["grid"]["bc"])
        for name, entry in data["quantities"].items():
            if entry["value"] is not None:
                out.set(name, entry["value"])
        return out

    def rows(self):
        for name, module in SUMMARY_FIELDS:
            value = self.values.get(name)
            if isinstance(value, (list, tuple, np.ndarray)):
                value = ";".join(fmt(v) for v in value) if len(value) else None
            yield name, value, module, self.grid_n


class StageError(Exception):
    """A module failure annotated with the pipeline stage."""

    def __init__(self, module: str, exc: TumorModelError):
        super().__init__(f"[{module}] {exc}")
        self.module = module
        self.original = exc


class _stage:
    def __init__(self, module: str):
        self.module = module

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if exc is not None and isinstance(exc, TumorModelError):
            raise StageError(self.module, exc) from exc
        return False


def signed_peak(u) -> float:
    """Entry of largest magnitude, keeping its sign."""
    u = np.asarray(u)
    return float(u[np.argmax(np.abs(u))])


def solve_steady(cfg: RunConfig, ops: ModelOps, beta: float) -> SteadyStateResult:
    if cfg.continue_from is not None:
        return continue_branch(beta, ops, cfg.continue_from)
    return newton_solve(beta, ops)


def _default_tau_hi(cfg: RunConfig, taus: Optional[np.ndarray]) -> float:
    if cfg.tau_hi is not None:
        return cfg.tau_hi
    guess = 2.0 * float(taus[0]) if taus is not None and len(taus) else 0.0
    return max(guess, cfg.tau, 1.0)


def run_analyze(cfg: RunConfig, *, crossing: bool = True) -> AnalysisSummary:
    beta, dose = cfg.resolve_beta()
    with _stage("spectral"):
        ops = build_ops(cfg.params, cfg.n)
        setup = ops.bifurcation
    s = AnalysisSummary(grid_n=cfg.n, bc=cfg.params.bc)
    s.set("beta", beta)
    s.set("dose", dose)
    pp = setup.pp
    s.set("beta_star", pp.beta_star)
    s.set("phi_star_sup", float(np.max(np.abs(pp.phi_star))))
    s.set("phi_star_l2", float(math.sqrt(ops.weights @ pp.phi_star ** 2)))
    s.set("spectral_residual", pp.residual)
    for k, v in setup.thetas.as_dict().items():
        s.set(k, v)
    s.set("kappa_beta", setup.kappa(beta))
    s.set("kappa_star", setup.kappa_star)
    s.set("kappa_tilde_star", setup.kappa_tilde_star)
    if setup.report is None:
        with _stage("bifurcation"):
            bif.classify(setup.kappa_star, setup.kappa_tilde_star)
    region = setup.report.region
    s.set("region", region.value)
    s.set("region_verdict", region.description)
    with _stage("bifurcation"):
        s.set("approx_peak", signed_peak(setup.first_order(beta).u))
    with _stage("steady_state"):
        ss = solve_steady(cfg, ops, beta)
    s.set("newton_peak", ss.peak)
    s.set("newton_residual", ss.residual_norm)
    s.set("newton_positive", ss.positive)

    taus = None
    if region.has_hopf:
        try:
            hd = bif.hopf_data(beta, setup.thetas, pp.beta_star, setup.qprime0, cfg.k_max)
        except (WrongSideOfBetaStar, HopfNotApplicable) as exc:
            log.warning("no Hopf data: %s", exc)
        else:
            taus = hd.tau_k
            s.set("hopf_angle", hd.theta_angle)
            s.set("l_star", hd.l_star)
            s.set("omega", hd.omega)
            s.set("tau_k", list(hd.tau_k))
    if s.get("tau_k") is None:
        s.set("tau_k", [])

    with _stage("char_spectrum"):
        lp = linearize(ss.u, beta, ops)
        spec = rightmost_eigenvalues(lp, cfg.tau, cfg.m)
        s.set("spectrum_tau", cfg.tau)
        s.set("spectral_abscissa", spec.abscissa)
        if crossing and taus is not None:
            try:
                hc = hopf_crossing(lp, cfg.tau_lo, _default_tau_hi(cfg, taus), m=cfg.m)
            except NoCrossing as exc:
                log.warning("no numerical crossing: %s", exc)
            else:
                s.set("tau_c", hc.tau_c)
                s.set("omega_c", hc.omega_c)
                s.set("slope_sign", hc.slope_sign)
    return s


def write_summary(s: AnalysisSummary, out: Path):
    write_json(out / "summary.json", s.to_dict())
    write_csv(out / "analysis.csv", ("quantity", "value", "module", "grid_n"), s.rows())


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(cfg: RunConfig, args) -> int:
    s = run_analyze(cfg)
    write_summary(s, cfg.out)
    print(f"region {s.get('region')} ({s.get('region_verdict')}); "
          f"beta*={fmt(s.get('beta_star'))}, kappa(beta)={fmt(s.get('kappa_beta'))}")
    return EXIT_OK


def cmd_steady(cfg: RunConfig, args) -> int:
    beta, dose = cfg.resolve_beta()
    with _stage("spectral"):
        ops = build_ops(cfg.params, cfg.n)
        setup = ops.bifurcation
    with _stage("bifurcation"):
        approx = setup.first_order(beta)
    with _stage("steady_state"):
        ss = solve_steady(cfg, ops, beta)
    s = AnalysisSummary(grid_n=cfg.n, bc=cfg.params.bc)
    s.set("beta", beta)
    s.set("dose", dose)
    s.set("beta_star", setup.beta_star)
    s.set("kappa_beta", setup.kappa(beta))
    s.set("newton_peak", ss.peak)
    s.set("newton_residual", ss.residual_norm)
    s.set("newton_positive", ss.positive)
    write_summary(s, cfg.out)
    x = ops.grid.nodes
    write_csv(cfg.out / "steady.csv", ("x", "u_newton", "u_first_order"),
              zip(x, ss.u, approx.u))
    if args.svg:
        (cfg.out / "steady.svg").write_text(svg_line_chart(
            [("Newton", x, ss.u), ("first order", x, approx.u)],
            title=f"steady state, beta={beta:.4g}", xlabel="x", ylabel="u"))
    print(f"Newton peak {fmt(ss.peak)} after {ss.iterations} iterations, "
          f"residual {ss.residual_norm:.2e}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    beta, dose = cfg.resolve_beta()
    ops = build_ops(cfg.params, cfg.n)
    hist_spec = _history_value(cfg.history)
    steady_u = None
    if hist_spec == "steady":
        with _stage("steady_state"):
            steady_u = solve_steady(cfg, ops, beta).u
        history = History(steady_u)
    else:
        history = History(hist_spec)
    dt = cfg.dt if cfg.dt is not None else default_dt(cfg.tau)
    try:
        with _stage("dde_sim"):
            trace = simulate(ops, beta, cfg.tau, history, cfg.T, dt=dt, stride=cfg.stride)
    except StageError as err:
        if isinstance(err.original, BlowupError):
            write_json(cfg.out / "behavior.json",
                       {"verdict": "Blowup", "blowup_time": err.original.time,
                        "beta": beta, "dose": dose, "tau": cfg.tau})
        raise
    write_csv(cfg.out / "trace_probe.csv", ("t", "u_probe"), zip(trace.times, trace.probe))
    if cfg.stride > 0:
        x = trace.x
        rows = ((t, xi, ui) for t, snap in zip(trace.snapshot_times, trace.snapshots)
                for xi, ui in zip(x, snap))
        write_csv(cfg.out / "snapshots.csv", ("t", "x", "u"), rows)
    with _stage("dde_sim"):
        behavior = detect_behavior(trace)
    payload = behavior.as_dict()
    payload.update(beta=beta, dose=dose, tau=cfg.tau, dt=trace.dt, T=cfg.T,
                   probe_x=trace.probe_x, min_value=trace.min_value,
                   warnings=list(trace.warnings))
    write_json(cfg.out / "behavior.json", payload)
    if args.svg:
        (cfg.out / "probe.svg").write_text(svg_line_chart(
            [("u(pi/2, t)", trace.times, trace.probe)],
            title=f"probe, tau={cfg.tau:g}, beta={beta:.4g}", xlabel="t", ylabel="u"))
        if trace.final is not None:
            curves = [("final", trace.x, trace.final)]
            if steady_u is not None:
                curves.append(("steady", trace.x, steady_u))
            (cfg.out / "profile.svg").write_text(svg_line_chart(
                curves, title="final profile", xlabel="x", ylabel="u"))
    print(f"verdict {behavior.verdict.value}")
    return EXIT_OK


def cmd_hopf(cfg: RunConfig, args) -> int:
    beta, dose = cfg.resolve_beta()
    with _stage("spectral"):
        ops = build_ops(cfg.params, cfg.n)
        setup = ops.bifurcation
    taus = None
    leading = {}
    try:
        hd = bif.hopf_data(beta, setup.thetas, setup.beta_star, setup.qprime0, cfg.k_max)
        taus = hd.tau_k
        leading = {"hopf_angle": hd.theta_angle, "l_star": hd.l_star,
                   "omega": hd.omega, "tau_k": list(hd.tau_k)}
    except (WrongSideOfBetaStar, HopfNotApplicable, DegenerateCase) as exc:
        log.warning("leading-order Hopf data unavailable: %s", exc)
    with _stage("steady_state"):
        ss = solve_steady(cfg, ops, beta)
    with _stage("char_spectrum"):
        lp = linearize(ss.u, beta, ops)
        hc = hopf_crossing(lp, cfg.tau_lo, _default_tau_hi(cfg, taus), m=cfg.m)
    payload = {"beta": beta, "dose": dose, "grid_n": cfg.n, "tau_c": hc.tau_c,
               "omega_c": hc.omega_c, "slope_sign": hc.slope_sign, "slope": hc.slope,
               "eigenvalue_re": hc.eigenvalue.real, "eigenvalue_im": hc.eigenvalue.imag,
               "leading_order": leading}
    write_json(cfg.out / "hopf.json", payload)
    print(f"tau_c={fmt(hc.tau_c)}, omega_c={fmt(hc.omega_c)}, slope sign {hc.slope_sign:+d}")
    return EXIT_OK


SWEEP_PARAMETERS = ("dose", "beta", "tau")
SWEEP_HEADER = ("parameter", "value", "beta", "dose", "kappa", "region",
                "steady_peak", "max_re_lambda")


def _sweep_point(params: ModelParams, n: int, parameter: str, value: float,
                 m: int, spectrum: bool, base_beta: Optional[float]):
    """One row of the sweep table; numerical failures become NaN cells."""
    tau = params.tau
    if parameter == "dose":
        beta, dose = dose_to_beta(value, params), value
    elif parameter == "beta":
        beta, dose = value, beta_to_dose(value, params)
    else:
        beta, tau = base_beta, value
        dose = beta_to_dose(beta, params)
    ops = build_ops(params, n)
    setup = ops.bifurcation
    region = setup.report.region.value if setup.report else None
    peak = abscissa = None
    try:
        ss = newton_solve(beta, ops)
        # a converged trivial state reports peak 0 so rounding noise carries no sign
        peak = ss.peak if np.max(np.abs(ss.u)) >= TRIVIAL_LEVEL else 0.0
        if spectrum:
            abscissa = rightmost_eigenvalues(linearize(ss.u, beta, ops), tau, m).abscissa
    except NumericalError as exc:
        log.warning("sweep point %s=%g: %s", parameter, value, exc)
    return (parameter, value, beta, dose, setup.kappa(beta), region, peak, abscissa)


def run_sweep(cfg: RunConfig, jobs: int = 1) -> list:
    sw = cfg.sweep
    parameter = sw.get("parameter")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
    for key in ("lo", "hi", "steps"):
        if key not in sw:
            raise ConfigError(f"sweep.{key} is required")
    lo, hi, steps = sw["lo"], sw["hi"], sw["steps"]
    if steps < 1 or hi < lo or (steps > 1 and hi == lo):
        raise ConfigError(f"empty sweep range [{lo}, {hi}] with {steps} steps")
    values = np.linspace(lo, hi, steps)
    spectrum = bool(sw.get("spectrum", parameter == "tau"))
    base_beta = None
    if parameter == "tau":
        base_beta, _ = cfg.resolve_beta()
        if lo < 0:
            raise ConfigError("tau sweep must be nonnegative")
    elif parameter == "beta" and (lo < 0 or hi >= 1):
        raise ConfigError("beta sweep must lie in [0, 1)")
    elif parameter == "dose" and lo < 0:
        raise ConfigError("dose sweep must be nonnegative")
    args = [(cfg.params, cfg.n, parameter, float(v), cfg.m, spectrum, base_beta)
            for v in values]
    if jobs > 1 and len(args) > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, *zip(*args)))
    else:
        rows = [_sweep_point(*a) for a in args]
    # map() preserves input order, so rows are already sorted by parameter
    return rows


def cmd_sweep(cfg: RunConfig, args) -> int:
    rows = run_sweep(cfg, jobs=args.jobs)
    write_csv(cfg.out / "sweep.csv", SWEEP_HEADER, rows)
    print(f"{len(rows)} sweep points written")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "steady": cmd_steady, "simulate": cmd_simulate,
            "hopf": cmd_hopf, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tumorhopf", description="Bifurcation, delay stability and simulation "
                                      "of a nonlocal tumor-therapy model.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="flat key = value configuration file")
    parser.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    parser.add_argument("--svg", action="store_true", help="also write SVG line plots")
    parser.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    parser.add_argument("--grid-n", type=int, help="grid nodes (overrides grid.n)")
    parser.add_argument("--seed-history", help="history: a constant or 'steady'")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        raw = load_config(args.config)
        if args.grid_n is not None:
            raw["grid.n"] = args.grid_n
        if args.seed_history is not None:
            raw["simulation.history"] = args.seed_history
        cfg = RunConfig.from_mapping(raw)
        if args.out is not None:
            cfg.out = args.out
        cfg.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err.original)
    except TumorModelError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, BlowupError):
        return EXIT_BLOWUP
    if isinstance(exc, (ConfigError, DomainError, InsufficientData)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
