"""Finite-difference mesh, Laplacian, quadrature and nonlocal operator on [0, pi].

Dirichlet fields live on interior nodes only; the zero boundary values are
implicit in both the stencil and the quadrature. Neumann fields include the
two end nodes and use mirrored ghost points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from .errors import ConfigError
from .model import DIRICHLET, NEUMANN, BOUNDARY_CONDITIONS, KernelSpec, eval_kernel

MIN_NODES = 8


@dataclass(frozen=True)
class Grid:
    n: int
    bc: str
    h: float
    nodes: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def full_nodes(self) -> np.ndarray:
        """Nodes including the boundary points for either condition."""
        if self.bc == DIRICHLET:
            return np.linspace(0.0, math.pi, self.n + 2)
        return self.nodes

    def probe_index(self, x: float = math.pi / 2) -> int:
        return int(np.argmin(np.abs(self.nodes - x)))


def build_grid(n: int, bc: str = DIRICHLET, *, min_nodes: int = MIN_NODES) -> Grid:
    if bc not in BOUNDARY_CONDITIONS:
        raise ConfigError(f"unknown boundary condition {bc!r}")
    if int(n) != n or n < min_nodes:
        raise ConfigError(f"grid needs at least {min_nodes} nodes, got {n}")
    n = int(n)
    if bc == DIRICHLET:
        h = math.pi / (n + 1)
        nodes = h * np.arange(1, n + 1)
    else:
        h = math.pi / (n - 1)
        nodes = h * np.arange(n)
        nodes[-1] = math.pi
    nodes.setflags(write=False)
    return Grid(n=n, bc=bc, h=h, nodes=nodes)


@dataclass(frozen=True)
class LaplacianOp:
    """Tridiagonal ``d * Delta_h`` stored as (lower, diag, upper) bands."""

    lower: np.ndarray  # lower[i] multiplies v[i] in row i+1
    diag: np.ndarray
    upper: np.ndarray  # upper[i] multiplies v[i+1] in row i

    @property
    def size(self) -> int:
        return self.diag.size

    def apply(self, v):
        v = np.asarray(v)
        out = self.diag * v
        out[1:] += self.lower * v[:-1]
        out[:-1] += self.upper * v[1:]
        return out

    __call__ = apply

    def to_sparse(self, format: str = "csr"):
        return sp.diags([self.lower, self.diag, self.upper], [-1, 0, 1], format=format)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def banded(self, shift=0.0, scale=1.0) -> np.ndarray:
        """Band storage of ``shift*I + scale*L`` for :func:`scipy.linalg.solve_banded`."""
        ab = np.zeros((3, self.size), dtype=np.result_type(shift, scale, float))
        ab[0, 1:] = scale * self.upper
        ab[1] = shift + scale * self.diag
        ab[2, :-1] = scale * self.lower
        return ab

    def solve_shifted(self, shift, rhs, scale=1.0):
        """Solve ``(shift*I + scale*L) x = rhs``."""
        return solve_banded((1, 1), self.banded(shift, scale), rhs)


def laplacian(grid: Grid, d: float) -> LaplacianOp:
    n = grid.size
    c = d / grid.h ** 2
    lower = np.full(n - 1, c)
    upper = np.full(n - 1, c)
    diag = np.full(n, -2.0 * c)
    if grid.bc == NEUMANN:
        # ghost node u[-1] = u[1]
        upper[0] = 2.0 * c
        lower[-1] = 2.0 * c
    return LaplacianOp(lower=lower, diag=diag, upper=upper)


def _composite_weights(m: int, h: float) -> np.ndarray:
    """Weights on ``m + 1`` equispaced points, exact for cubics.

    Composite Simpson; an odd interval count closes with a Simpson 3/8 panel.
    """
    if m < 1:
        raise ConfigError("need at least one interval")
    w = np.zeros(m + 1)
    if m == 1:
        w[:] = h / 2
        return w
    simpson_intervals = m if m % 2 == 0 else m - 3
    if simpson_intervals > 0:
        w[0:simpson_intervals + 1:2] += 2 * h / 3
        w[1:simpson_intervals:2] += 4 * h / 3
        w[0] -= h / 3
        w[simpson_intervals] -= h / 3
    if m % 2 == 1:
        s = simpson_intervals
        w[s:s + 4] += 3 * h / 8 * np.array([1.0, 3.0, 3.0, 1.0])
    return w


def quadrature_weights(grid: Grid, *, include_boundary: bool = False) -> np.ndarray:
    """Quadrature weights for integrals over [0, pi] of grid fields.

    For Dirichlet grids the default drops the two boundary weights (their
    samples are zero); ``include_boundary=True`` returns the weights on the
    full mesh, which sum to pi.
    """
    if grid.bc == DIRICHLET:
        w = _composite_weights(grid.n + 1, grid.h)
        return w if include_boundary else w[1:-1].copy()
    return _composite_weights(grid.n - 1, grid.h)


def integrate(values, grid: Grid, weights: Optional[np.ndarray] = None):
    if weights is None:
        weights = quadrature_weights(grid)
    return np.dot(weights, values)


@dataclass(frozen=True)
class KernelOp:
    """Dense ``K[i, j] = w_j S(x_i, x_j)``.

    Separable kernels also keep the rank-one factors so that ``apply`` costs
    O(n) instead of O(n^2).
    """

    matrix: np.ndarray
    left: Optional[np.ndarray] = None
    right: Optional[np.ndarray] = None

    @property
    def is_rank_one(self) -> bool:
        return self.left is not None

    def apply(self, v):
        if self.left is not None:
            return self.left * np.dot(self.right, v)
        return self.matrix @ v

    __call__ = apply


def kernel_operator(k: KernelSpec, grid: Grid, weights: Optional[np.ndarray] = None) -> KernelOp:
    if weights is None:
        weights = quadrature_weights(grid)
    x = grid.nodes
    if k.is_separable:
        left = np.sin(x)
        right = weights * np.sin(x)
        return KernelOp(matrix=np.outer(left, right), left=left, right=right)
    if k.nodes.size != x.size:
        raise ConfigError(
            f"tabulated kernel has {k.nodes.size} nodes but grid has {x.size}")
    if not np.allclose(k.nodes, x, rtol=0, atol=1e-12):
        raise ConfigError("tabulated kernel nodes do not coincide with the grid")
    return KernelOp(matrix=k.values * weights[None, :])


def sample_kernel(k: KernelSpec, grid: Grid) -> np.ndarray:
    """Kernel samples S(x_i, x_j) on the grid (any variant)."""
    x = grid.nodes
    return eval_kernel(x[:, None], x[None, :], k)
