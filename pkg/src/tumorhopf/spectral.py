"""Principal eigenpair of ``d*Delta + F(0,0) - r`` on the grid."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .discretization import Grid, laplacian
from .errors import NonConvergence
from .model import NEUMANN


@dataclass(frozen=True)
class PrincipalPair:
    beta_star: float
    phi_star: np.ndarray
    residual: float
    iterations: int
    beta_second: Optional[float] = None

    @property
    def spectral_gap(self) -> Optional[float]:
        if self.beta_second is None:
            return None
        return self.beta_star - self.beta_second

    def rescaled(self, c: float) -> "PrincipalPair":
        """Same eigenvalue with ``phi_star`` multiplied by ``c``."""
        return PrincipalPair(self.beta_star, c * self.phi_star, self.residual,
                             self.iterations, self.beta_second)


def _operator_bands(d, F00, r, grid: Grid):
    lap = laplacian(grid, d)
    r = np.broadcast_to(np.asarray(r, dtype=float), (grid.size,))
    diag = lap.diag + F00 - r
    return lap.lower, diag, lap.upper


def _apply(lower, diag, upper, v):
    out = diag * v
    out[1:] += lower * v[:-1]
    out[:-1] += upper * v[1:]
    return out


def _shift_solve(lower, diag, upper, sigma, rhs):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper
    ab[1] = diag - sigma
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _symmetrized(lower, diag, upper, bc):
    """Symmetric tridiagonal similar to the operator (Neumann rows rescaled)."""
    if bc == NEUMANN:
        # D^{-1} M D with D = diag(sqrt2, 1, ..., 1, sqrt2)
        off = np.sqrt(lower * upper)
        return diag, off
    return diag, upper


def principal_eigenpair(d: float, F00: float, r, grid: Grid, *, tol: float = 1e-10,
                        max_iter: int = 500) -> PrincipalPair:
    """Largest eigenvalue of ``d*Delta_h + F00 - r`` and its positive eigenvector.

    A fixed shift above the Gershgorin bound makes inverse iteration converge
    to the top of the spectrum; Rayleigh-quotient steps then polish the pair
    until the sup-norm residual drops below ``tol``.

    Raises
    ------
    NonConvergence
        If the residual target is not met within ``max_iter`` iterations.
    """
    lower, diag, upper = _operator_bands(d, F00, r, grid)
    sigma = float(np.max(diag + np.abs(np.r_[0.0, lower]) + np.abs(np.r_[upper, 0.0]))) + d
    v = np.ones(grid.size)
    v /= np.linalg.norm(v)
    lam = float(v @ _apply(lower, diag, upper, v))
    residual = math.inf
    shift = sigma
    refine = False
    for it in range(1, max_iter + 1):
        try:
            w = _shift_solve(lower, diag, upper, shift, v)
        except np.linalg.LinAlgError:
            # shift landed on an eigenvalue: the current vector is converged
            w = v
        if not np.all(np.isfinite(w)):
            w = v
        v = w / np.linalg.norm(w)
        Mv = _apply(lower, diag, upper, v)
        lam = float(v @ Mv)
        residual = float(np.max(np.abs(Mv - lam * v)) / np.max(np.abs(v)))
        if residual <= tol:
            break
        if not refine and residual < 1e-4:
            refine = True
        if refine:
            shift = lam + 1e-14 * max(1.0, abs(lam))
    else:
        raise NonConvergence(
            f"principal eigenpair residual {residual:.3e} after {max_iter} iterations",
            iterations=max_iter, residual=residual)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    phi = v / np.max(v)
    Mphi = _apply(lower, diag, upper, phi)
    # eigenvalue from the sup-normalized residual-minimizing quotient
    lam = float(phi @ Mphi / (phi @ phi))
    residual = float(np.max(np.abs(Mphi - lam * phi)))

    sdiag, soff = _symmetrized(lower, diag, upper, grid.bc)
    second = None
    if grid.size >= 2:
        ev = eigh_tridiagonal(sdiag, soff, eigvals_only=True,
                              select="i", select_range=(grid.size - 2, grid.size - 2))
        second = float(ev[0])
    return PrincipalPair(beta_star=lam, phi_star=phi, residual=residual,
                         iterations=it, beta_second=second)
