"""Discretized model: parameters plus the operators every solver shares."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import bifurcation as bif
from .discretization import Grid, KernelOp, LaplacianOp, build_grid, kernel_operator, \
    laplacian, quadrature_weights
from .errors import DegenerateCase
from .model import ModelParams, eval_proliferation, proliferation_partials_at_zero
from .spectral import PrincipalPair, principal_eigenpair


@dataclass(frozen=True)
class BifurcationSetup:
    pp: PrincipalPair
    thetas: bif.ThetaCoefficients
    qprime0: float
    kappa_star: float
    kappa_tilde_star: float
    report: Optional[bif.StabilityReport]

    @property
    def beta_star(self) -> float:
        return self.pp.beta_star

    def kappa(self, beta: float) -> float:
        return bif.kappa(beta, self.thetas, self.qprime0)

    def first_order(self, beta: float) -> bif.FirstOrderState:
        return bif.approx_steady_state(beta, self.pp, self.kappa_star, self.thetas)


class ModelOps:
    """Grid, Laplacian, quadrature and kernel operator for one parameter set."""

    def __init__(self, params: ModelParams, grid: Grid):
        self.params = params
        self.grid = grid
        self.lap: LaplacianOp = laplacian(grid, params.d)
        self.weights: np.ndarray = quadrature_weights(grid)
        self.K: KernelOp = kernel_operator(params.kernel, grid, self.weights)
        self.r: np.ndarray = params.efficacy(grid.nodes)

    @property
    def n(self) -> int:
        return self.grid.size

    @cached_property
    def bifurcation(self) -> BifurcationSetup:
        p = self.params
        F00 = float(eval_proliferation(0.0, 0.0, p))
        pp = principal_eigenpair(p.d, F00, self.r, self.grid)
        th = bif.compute_thetas(pp, self.K, proliferation_partials_at_zero(p),
                                self.grid, self.weights)
        ks = bif.kappa(pp.beta_star, th, p.qprime0)
        kts = bif.kappa_tilde(pp.beta_star, th, p.qprime0)
        try:
            report = bif.classify(ks, kts)
        except DegenerateCase:
            report = None
        return BifurcationSetup(pp, th, p.qprime0, ks, kts, report)


def build_ops(params: ModelParams, n: int = 199) -> ModelOps:
    return ModelOps(params, build_grid(n, params.bc))
