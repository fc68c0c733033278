"""Closed-form bifurcation quantities around the principal eigenvalue beta*.

Everything here is a quadrature of the principal eigenfunction followed by
scalar algebra: the coefficients theta1..theta4, the bifurcation slopes
kappa(beta) and kappa-tilde(beta*), the four-region classification, the
first-order steady state, and the leading-order Hopf frequency and critical
delays.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .discretization import Grid, KernelOp, quadrature_weights
from .errors import DegenerateCase, HopfNotApplicable, WrongSideOfBetaStar
from .spectral import PrincipalPair

log = logging.getLogger(__name__)

DEGENERACY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class ThetaCoefficients:
    theta1: float
    theta2: float
    theta3: float
    theta4: float

    def as_dict(self):
        return {"theta1": self.theta1, "theta2": self.theta2,
                "theta3": self.theta3, "theta4": self.theta4}


class Region(str, enum.Enum):
    I_STABLE_ALL_DELAYS = "I"
    II_HOPF_BELOW_BETA_STAR = "II"
    III_UNSTABLE = "III"
    IV_HOPF_ABOVE_BETA_STAR = "IV"

    @property
    def has_hopf(self) -> bool:
        return self in (Region.II_HOPF_BELOW_BETA_STAR, Region.IV_HOPF_ABOVE_BETA_STAR)

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    Region.I_STABLE_ALL_DELAYS: "stable all tau",
    Region.II_HOPF_BELOW_BETA_STAR: "Hopf bifurcation for beta < beta*",
    Region.III_UNSTABLE: "unstable all tau",
    Region.IV_HOPF_ABOVE_BETA_STAR: "Hopf bifurcation for beta > beta*",
}


@dataclass(frozen=True)
class StabilityReport:
    kappa_star: float
    kappa_tilde_star: float
    region: Region
    beta_side: str  # "below" or "above" beta*


@dataclass(frozen=True)
class FirstOrderState:
    u: np.ndarray
    positive: bool


@dataclass(frozen=True)
class HopfData:
    theta_angle: float
    l_star: float
    omega: float
    tau_k: np.ndarray

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


def compute_thetas(pp: PrincipalPair, K: KernelOp, partials, grid: Grid,
                   weights: Optional[np.ndarray] = None) -> ThetaCoefficients:
    if weights is None:
        weights = quadrature_weights(grid)
    F1, F2 = partials
    phi = pp.phi_star
    cube = float(weights @ phi ** 3)
    square = float(weights @ phi ** 2)
    nonlocal_ = float(weights @ (phi ** 2 * K.apply(phi)))
    return ThetaCoefficients(theta1=F1 * cube, theta2=F2 * nonlocal_,
                             theta3=cube, theta4=square)


def kappa(beta: float, th: ThetaCoefficients, qprime0: float) -> float:
    return th.theta1 + th.theta2 - beta * qprime0 * th.theta3


def kappa_tilde(beta_star: float, th: ThetaCoefficients, qprime0: float) -> float:
    return th.theta1 - th.theta2 - beta_star * qprime0 * th.theta3


def classify(kappa_star: float, kappa_tilde_star: float,
             threshold: float = DEGENERACY_THRESHOLD) -> StabilityReport:
    """Map the signs of (kappa(beta*), kappa-tilde(beta*)) to regions I-IV."""
    if abs(kappa_star) <= threshold or abs(kappa_tilde_star) <= threshold:
        raise DegenerateCase(
            f"kappa(beta*)={kappa_star:.3e}, kappa~(beta*)={kappa_tilde_star:.3e} "
            f"within {threshold:g} of zero")
    if kappa_star < 0:
        region = (Region.I_STABLE_ALL_DELAYS if kappa_tilde_star < 0
                  else Region.II_HOPF_BELOW_BETA_STAR)
        side = "below"
    else:
        region = (Region.III_UNSTABLE if kappa_tilde_star > 0
                  else Region.IV_HOPF_ABOVE_BETA_STAR)
        side = "above"
    return StabilityReport(kappa_star, kappa_tilde_star, region, side)


def _check_neighbourhood(beta, beta_star):
    if beta_star != 0 and abs(beta - beta_star) / abs(beta_star) > 0.5:
        log.warning("beta=%.4g is far from beta*=%.4g; first-order formulas may be inaccurate",
                    beta, beta_star)


def approx_steady_state(beta: float, pp: PrincipalPair, kappa_star: float,
                        th: ThetaCoefficients) -> FirstOrderState:
    """First-order bifurcating steady state theta4*phi*(beta - beta*)/kappa(beta*)."""
    if abs(kappa_star) <= DEGENERACY_THRESHOLD:
        raise DegenerateCase("kappa(beta*) vanishes; no first-order branch")
    _check_neighbourhood(beta, pp.beta_star)
    delta = beta - pp.beta_star
    u = th.theta4 * pp.phi_star * (delta / kappa_star)
    positive = (kappa_star < 0 and delta < 0) or (kappa_star > 0 and delta > 0)
    return FirstOrderState(u=u, positive=positive)


def hopf_constants(th: ThetaCoefficients, beta_star: float, qprime0: float):
    """Crossing angle theta_{beta*} in (0, pi) and frequency scale l_{beta*}."""
    ks = kappa(beta_star, th, qprime0)
    kts = kappa_tilde(beta_star, th, qprime0)
    report = classify(ks, kts)
    if not report.region.has_hopf:
        raise HopfNotApplicable(f"region {report.region.value} has no Hopf bifurcation")
    arg = (beta_star * qprime0 * th.theta3 - th.theta1) / th.theta2
    if abs(arg) > 1 + 1e-12:
        raise HopfNotApplicable(f"arccos argument {arg:.6g} outside [-1, 1]")
    theta_angle = math.acos(min(1.0, max(-1.0, arg)))
    l_star = math.sqrt(-ks * kts)
    return theta_angle, l_star


def hopf_frequency(beta: float, l_star: float, kappa_star: float, beta_star: float) -> float:
    return l_star * (beta - beta_star) / kappa_star


def critical_delays(beta: float, hc, kappa_star: float, beta_star: float,
                    k_max: int = 5) -> np.ndarray:
    """Leading-order critical delays tau_k = (theta + 2k pi)/omega, k = 0..k_max."""
    theta_angle, l_star = hc
    omega = hopf_frequency(beta, l_star, kappa_star, beta_star)
    if not omega > 0:
        raise WrongSideOfBetaStar(
            f"omega={omega:.4g} <= 0 at beta={beta:.4g} (beta*={beta_star:.4g})")
    _check_neighbourhood(beta, beta_star)
    k = np.arange(k_max + 1)
    return (theta_angle + 2 * math.pi * k) / omega


def hopf_data(beta: float, th: ThetaCoefficients, beta_star: float, qprime0: float,
              k_max: int = 5) -> HopfData:
    hc = hopf_constants(th, beta_star, qprime0)
    ks = kappa(beta_star, th, qprime0)
    taus = critical_delays(beta, hc, ks, beta_star, k_max)
    return HopfData(theta_angle=hc[0], l_star=hc[1],
                    omega=hopf_frequency(beta, hc[1], ks, beta_star), tau_k=taus)
