"""Nonlinear ingredients of the tumor-therapy model.

Proliferation follows the quadratic law

    F(u, v) = 1 + a1*u - a2*u**2 - (1 + a1 - a2)*v,

where ``v`` is the (delayed) nonlocal average ``int S(x, y) u(y) dy``.
Therapy removes cells at rate ``beta*q(u) + r`` with ``q(u) = 1 - u/u_max``,
and the treatment rate is tied to the delivered dose through the
linear-quadratic survival fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
BOUNDARY_CONDITIONS = (DIRICHLET, NEUMANN)


@dataclass(frozen=True)
class KernelSpec:
    """Nonlocal kernel S(x, y) on [0, pi]^2.

    ``variant`` is either ``"separable"`` (S = sin x sin y) or ``"tabulated"``,
    in which case ``values[i, j] = S(nodes[i], nodes[j])``.
    """

    variant: str = "separable"
    values: Optional[np.ndarray] = field(default=None, compare=False)
    nodes: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in ("separable", "tabulated"):
            raise ConfigError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "tabulated":
            if self.values is None or self.nodes is None:
                raise ConfigError("tabulated kernel needs values and nodes")
            values = np.asarray(self.values, dtype=float)
            nodes = np.asarray(self.nodes, dtype=float)
            if values.shape != (nodes.size, nodes.size):
                raise ConfigError(
                    f"kernel table shape {values.shape} does not match {nodes.size} nodes")
            if np.any(values < 0) or not np.all(np.isfinite(values)):
                raise ConfigError("kernel values must be finite and nonnegative")
            if np.any(np.diff(nodes) <= 0):
                raise ConfigError("kernel nodes must be strictly increasing")
            object.__setattr__(self, "values", values)
            object.__setattr__(self, "nodes", nodes)

    @property
    def is_separable(self) -> bool:
        return self.variant == "separable"


@dataclass(frozen=True)
class ModelParams:
    d: float
    a1: float
    a2: float
    u_max: float = 1.0
    r0: float = 0.0
    alpha1: float = 0.2
    alpha2: float = 0.3
    tau: float = 0.0
    bc: str = DIRICHLET
    kernel: KernelSpec = field(default_factory=KernelSpec)
    # optional spatial efficacy profile; r0 is used when absent
    r_func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("d", "a1", "a2", "u_max", "r0", "alpha1", "alpha2", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.d <= 0:
            raise ConfigError("diffusion rate d must be positive")
        if self.a2 < 0:
            raise ConfigError("a2 must be nonnegative")
        if self.u_max <= 0:
            raise ConfigError("u_max must be positive")
        if self.tau < 0:
            raise ConfigError("tau must be nonnegative")
        if self.r0 < 0 or self.alpha1 < 0 or self.alpha2 < 0:
            raise ConfigError("r0, alpha1, alpha2 must be nonnegative")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"bc must be one of {BOUNDARY_CONDITIONS}")

    @property
    def nonlocal_coefficient(self) -> float:
        """1 + a1 - a2; either sign is allowed."""
        return 1.0 + self.a1 - self.a2

    @property
    def qprime0(self) -> float:
        return -1.0 / self.u_max

    def efficacy(self, x) -> np.ndarray:
        """Spatial efficacy r(x) sampled at ``x``."""
        x = np.asarray(x, dtype=float)
        if self.r_func is None:
            return np.full_like(x, self.r0)
        return np.broadcast_to(np.asarray(self.r_func(x), dtype=float), x.shape).copy()

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace
        return replace(self, **changes)


def eval_proliferation(u, v, p: ModelParams):
    """Proliferation rate F(u, v)."""
    return 1.0 + p.a1 * u - p.a2 * u * u - p.nonlocal_coefficient * v


def proliferation_partials(u, v, p: ModelParams):
    """Partial derivatives (dF/du, dF/dv) along (u, v)."""
    dfdu = p.a1 - 2.0 * p.a2 * np.asarray(u, dtype=float)
    dfdv = np.full_like(dfdu, -p.nonlocal_coefficient)
    if dfdu.ndim == 0:
        return float(dfdu), float(dfdv)
    return dfdu, dfdv


def proliferation_partials_at_zero(p: ModelParams) -> tuple[float, float]:
    return p.a1, -p.nonlocal_coefficient


def therapy_factor(u, p: ModelParams):
    """q(u) = 1 - u/u_max."""
    return 1.0 - u / p.u_max


def eval_therapy(u, beta: float, p: ModelParams, r=None):
    """Therapy-induced death rate beta*q(u) + r.

    ``r`` defaults to the constant efficacy ``p.r0``.
    """
    if r is None:
        r = p.r0
    return beta * therapy_factor(u, p) + r


def dose_to_beta(dose: float, p: ModelParams) -> float:
    if dose < 0:
        raise DomainError(f"dose must be nonnegative, got {dose}")
    return -math.expm1(-p.alpha1 * dose - p.alpha2 * dose * dose)


def beta_to_dose(beta: float, p: ModelParams) -> float:
    """Invert :func:`dose_to_beta` on the nonnegative branch."""
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"beta must lie in [0, 1), got {beta}")
    a, b = p.alpha2, p.alpha1
    if a + b <= 0:
        raise DomainError("alpha1 + alpha2 must be positive")
    c = math.log1p(-beta)  # <= 0
    if a == 0.0:
        return -c / b
    # positive root of a D^2 + b D + c = 0, written to avoid cancellation
    return -2.0 * c / (b + math.sqrt(b * b - 4.0 * a * c))


def eval_kernel(x, y, k: KernelSpec):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps = 1e-12
    if np.any((x < -eps) | (x > math.pi + eps) | (y < -eps) | (y > math.pi + eps)):
        raise DomainError("kernel coordinates must lie in [0, pi]")
    if k.is_separable:
        out = np.sin(x) * np.sin(y)
    else:
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator((k.nodes, k.nodes), k.values,
                                         bounds_error=False, fill_value=None)
        xb, yb = np.broadcast_arrays(x, y)
        out = interp(np.stack([xb.ravel(), yb.ravel()], axis=-1)).reshape(xb.shape)
    if np.ndim(out) == 0:
        return float(out)
    return out


def stable_preset(**overrides) -> ModelParams:
    """Preset whose positive steady state is stable for every delay."""
    base = dict(d=0.1, a1=-0.49, a2=0.5, u_max=1.0, r0=0.5,
                alpha1=0.2, alpha2=0.3, tau=0.1)
    base.update(overrides)
    return ModelParams(**base)


def hopf_preset(**overrides) -> ModelParams:
    """Preset with a delay-induced Hopf bifurcation below beta*."""
    base = dict(d=0.1, a1=2.0, a2=0.9, u_max=1.0, r0=0.1,
                alpha1=0.2, alpha2=0.3, tau=1.75)
    base.update(overrides)
    return ModelParams(**base)


PRESETS = {"stable": stable_preset, "hopf": hopf_preset}
