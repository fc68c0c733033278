"""Method-of-lines integration of the nonlocal delayed model.

Diffusion is advanced by Crank-Nicolson; reaction, therapy and the delayed
nonlocal term by second-order Adams-Bashforth. A couple of backward-Euler
steps start the run (``startup_steps=0`` gives the plain explicit-Euler start
instead). The delayed state is read from a ring buffer; with the default ``dt``
snapping the delay is an exact whole number of steps.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowupError, ConfigError, InsufficientData
from .model import eval_proliferation, therapy_factor
from .system import ModelOps


@dataclass(frozen=True)
class History:
    """Initial data on [-tau, 0].

    ``value`` is a scalar (constant field), an array (field constant in time)
    or a callable ``f(t, x) -> field`` evaluated at the step times.
    """

    value: Union[float, np.ndarray, Callable] = 0.1

    def sample(self, t: float, x: np.ndarray) -> np.ndarray:
        v = self.value
        if callable(v):
            out = np.asarray(v(t, x), dtype=float)
        else:
            out = np.asarray(v, dtype=float)
        out = np.broadcast_to(out, x.shape).astype(float)
        if not np.all(np.isfinite(out)):
            raise ConfigError("history contains non-finite values")
        return out


class _RingBuffer:
    """Fixed-depth store of past fields indexed by absolute step number."""

    def __init__(self, depth: int, n: int):
        self.depth = depth
        self.data = np.zeros((depth, n))
        self.latest = None

    def put(self, step: int, values: np.ndarray):
        self.data[step % self.depth] = values
        self.latest = step

    def get(self, step: int) -> np.ndarray:
        if step > self.latest or step <= self.latest - self.depth:
            raise IndexError(f"step {step} not buffered (latest {self.latest})")
        return self.data[step % self.depth]


@dataclass(frozen=True)
class Trace:
    times: np.ndarray
    probe: np.ndarray
    probe_x: float
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    x: np.ndarray
    dt: float
    tau: float
    beta: float
    min_value: float
    warnings: tuple = ()

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1] if len(self.snapshots) else None


class Verdict(str, enum.Enum):
    CONVERGED = "Converged"
    PERIODIC = "Periodic"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class BehaviorSummary:
    verdict: Verdict
    tail_start: float
    tail_end: float
    final: Optional[np.ndarray] = None
    amplitude: Optional[float] = None
    period: Optional[float] = None
    trough: Optional[float] = None
    peak_count: int = 0
    period_dispersion: Optional[float] = None
    amplitude_dispersion: Optional[float] = None

    def as_dict(self) -> dict:
        out = {"verdict": self.verdict.value, "tail_start": self.tail_start,
               "tail_end": self.tail_end, "amplitude": self.amplitude,
               "period": self.period, "trough": self.trough,
               "peak_count": self.peak_count,
               "period_dispersion": self.period_dispersion,
               "amplitude_dispersion": self.amplitude_dispersion}
        if self.final is not None:
            out["final_peak"] = float(np.max(self.final))
        return out


def default_dt(tau: float) -> float:
    return min(tau / 64, 0.01) if tau > 0 else 0.01


def simulate(ops: ModelOps, beta: float, tau: float, history: History, T: float,
             dt: Optional[float] = None, stride: int = 100, *, snap_dt: bool = True,
             probe_x: float = math.pi / 2, check_horizon: bool = True,
             startup_steps: int = 2) -> Trace:
    """Integrate the model on [0, T] from ``history``.

    The first ``startup_steps`` steps use backward Euler for diffusion so that
    a history incompatible with the boundary condition does not excite the
    undamped Crank-Nicolson modes.

    Raises
    ------
    BlowupError
        A non-finite value appears; carries the blowup time.
    """
    if tau < 0:
        raise ConfigError("tau must be nonnegative")
    if dt is None:
        dt = default_dt(tau)
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if check_horizon and T < 10 * max(tau, 1.0):
        raise ConfigError(f"horizon T={T} shorter than 10*max(tau, 1)")
    if stride < 0:
        raise ConfigError("stride must be nonnegative")
    notes = []
    if tau > 0 and snap_dt:
        lag_steps = max(1, round(tau / dt))
        dt = tau / lag_steps
        frac = 0.0
    elif tau > 0:
        lag_steps = int(math.floor(tau / dt))
        frac = tau / dt - lag_steps
    else:
        lag_steps, frac = 0, 0.0

    p = ops.params
    x = ops.grid.nodes
    n = x.size
    steps = int(round(T / dt))
    ab = ops.lap.banded(1.0, -0.5 * dt)
    ab_start = ops.lap.banded(1.0, -dt)
    lap = ops.lap
    K = ops.K
    r = ops.r

    def reaction(u, ud):
        return (eval_proliferation(u, K.apply(ud), p) - beta * therapy_factor(u, p) - r) * u

    # history covers steps -lag-1 .. 0; AB2 needs the delayed state one step back too
    depth = lag_steps + 3
    buf = _RingBuffer(depth, n)
    for k in range(-(lag_steps + 1), 1):
        buf.put(k, history.sample(k * dt, x))
    u = buf.get(0).copy()

    def delayed(step):
        if lag_steps == 0 and frac == 0.0:
            return buf.get(step)
        lo = buf.get(step - lag_steps)
        if frac == 0.0:
            return lo
        return (1.0 - frac) * lo + frac * buf.get(step - lag_steps - 1)

    probe_i = ops.grid.probe_index(probe_x)
    times = dt * np.arange(steps + 1)
    probe = np.empty(steps + 1)
    probe[0] = u[probe_i]
    snaps, snap_t = [], []
    if stride > 0:
        snaps.append(u.copy())
        snap_t.append(0.0)
    # explicit reaction stability estimate
    rate = np.max(np.abs(eval_proliferation(u, K.apply(u), p) - beta * therapy_factor(u, p) - r))
    if dt * max(rate, 1.0) > 1.0:
        notes.append(f"dt={dt:.3g} exceeds explicit reaction stability estimate")
    min_value = float(np.min(u))
    N_prev = reaction(u, delayed(0))
    # overflow on the way to a blowup is reported through BlowupError
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            if k == 0:
                N_now = N_prev
            else:
                N_now = reaction(u, delayed(k))
            if k < startup_steps:
                u = solve_banded((1, 1), ab_start, u + dt * N_now, check_finite=False)
            else:
                rhs = u + 0.5 * dt * lap.apply(u) + dt * (1.5 * N_now - 0.5 * N_prev)
                u = solve_banded((1, 1), ab, rhs, check_finite=False)
            if not np.all(np.isfinite(u)):
                raise BlowupError(f"non-finite solution at t={(k + 1) * dt:.6g}", (k + 1) * dt)
            N_prev = N_now
            buf.put(k + 1, u)
            probe[k + 1] = u[probe_i]
            umin = float(np.min(u))
            if umin < min_value:
                min_value = umin
            if stride > 0 and (k + 1) % stride == 0:
                snaps.append(u.copy())
                snap_t.append((k + 1) * dt)
    if min_value < -1e-8:
        notes.append(f"negative density {min_value:.3e} encountered")
    return Trace(times=times, probe=probe, probe_x=float(x[probe_i]),
                 snapshot_times=np.array(snap_t),
                 snapshots=np.array(snaps) if snaps else np.zeros((0, n)),
                 x=x.copy(), dt=dt, tau=tau, beta=beta, min_value=min_value,
                 warnings=tuple(notes))


def _local_maxima(y: np.ndarray, above: float) -> np.ndarray:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > above)
    return np.nonzero(inner)[0] + 1


def detect_behavior(trace: Trace, tail_fraction: float = 0.5,
                    dispersion: float = 0.05) -> BehaviorSummary:
    """Classify the long-time behaviour of the probe series.

    The tail window is the last ``tail_fraction`` of the run; it must span at
    least ``8*tau`` time units.
    """
    if not 0 < tail_fraction <= 1:
        raise ConfigError("tail_fraction must lie in (0, 1]")
    t = trace.times
    start = t[-1] - tail_fraction * (t[-1] - t[0])
    span = t[-1] - start
    if span < 8 * trace.tau or span <= 0 or t.size < 10:
        raise InsufficientData(f"tail window {span:.3g} shorter than 8*tau={8 * trace.tau:.3g}")
    mask = t >= start
    y = trace.probe[mask]
    ty = t[mask]
    mean = float(np.mean(y))
    base = dict(tail_start=float(start), tail_end=float(t[-1]))
    if np.max(y) - np.min(y) < 1e-5 * (1 + abs(mean)):
        return BehaviorSummary(Verdict.CONVERGED, final=trace.final, **base)
    # parabolic refinement of each peak location and height
    idx = _local_maxima(y, mean)
    if idx.size >= 4:
        y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
        denom = y0 - 2 * y1 + y2
        with np.errstate(divide="ignore", invalid="ignore"):
            off = np.where(denom != 0, 0.5 * (y0 - y2) / denom, 0.0)
        peak_t = ty[idx] + off * trace.dt
        peak_h = y1 - 0.25 * (y0 - y2) * off
        gaps = np.diff(peak_t)
        pd = float(np.std(gaps) / np.mean(gaps))
        ad = float(np.std(peak_h) / abs(np.mean(peak_h)))
        summary = dict(peak_count=int(idx.size), period_dispersion=pd, amplitude_dispersion=ad)
        if pd <= dispersion and ad <= dispersion:
            return BehaviorSummary(Verdict.PERIODIC, amplitude=float(np.mean(peak_h)),
                                   period=float(np.mean(gaps)), trough=float(np.min(y)),
                                   **summary, **base)
        return BehaviorSummary(Verdict.UNDETERMINED, **summary, **base)
    return BehaviorSummary(Verdict.UNDETERMINED, peak_count=int(idx.size), **base)
