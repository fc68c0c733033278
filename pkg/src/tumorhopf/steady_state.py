"""Exact discrete steady states by damped Newton iteration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import NonConvergence, SingularJacobian
from .model import eval_proliferation, proliferation_partials, therapy_factor
from .system import ModelOps

TRIVIAL_LEVEL = 1e-6


@dataclass(frozen=True)
class SteadyStateResult:
    u: np.ndarray
    residual_norm: float
    iterations: int
    positive: bool

    @property
    def peak(self) -> float:
        return float(np.max(self.u)) if np.max(self.u) >= -np.min(self.u) else float(np.min(self.u))


def residual(u, beta: float, ops: ModelOps) -> np.ndarray:
    """G(u) = L u + F(u, K u) u - (beta q(u) + r) u."""
    p = ops.params
    u = np.asarray(u, dtype=float)
    v = ops.K.apply(u)
    growth = eval_proliferation(u, v, p) - beta * therapy_factor(u, p) - ops.r
    return ops.lap.apply(u) + growth * u


def reaction_diagonal(u, beta: float, ops: ModelOps):
    """Diagonal of the instantaneous linearization and the delayed coupling weight.

    Returns ``(a0_diag, b_weight)`` with ``A0 = L + diag(a0_diag)`` and
    ``A1 = diag(b_weight) K``.
    """
    p = ops.params
    v = ops.K.apply(u)
    A, B = proliferation_partials(u, v, p)
    qprime = p.qprime0  # q is affine
    a0 = (eval_proliferation(u, v, p) + A * u - beta * therapy_factor(u, p)
          - beta * qprime * u - ops.r)
    return a0, B * u


def jacobian(u, beta: float, ops: ModelOps) -> np.ndarray:
    """Dense Jacobian of :func:`residual` at ``u``."""
    u = np.asarray(u, dtype=float)
    a0, bw = reaction_diagonal(u, beta, ops)
    J = ops.lap.to_dense()
    J[np.diag_indices_from(J)] += a0
    J += bw[:, None] * ops.K.matrix
    return J


def newton_solve(beta: float, ops: ModelOps, u0: Optional[np.ndarray] = None,
                 tol: float = 1e-10, max_iter: int = 50,
                 max_halvings: int = 30) -> SteadyStateResult:
    """Damped Newton on :func:`residual` with step halving.

    The default seed is the first-order bifurcating state at ``beta``.

    Raises
    ------
    NonConvergence
        ``max_iter`` steps without reaching ``tol`` (sup norm).
    SingularJacobian
        The Newton matrix cannot be factorized.
    """
    if u0 is None:
        u0 = ops.bifurcation.first_order(beta).u
    u = np.array(u0, dtype=float)
    G = residual(u, beta, ops)
    gnorm = float(np.max(np.abs(G)))
    merit = float(G @ G)
    it = 0
    while gnorm > tol:
        if it >= max_iter:
            raise NonConvergence(
                f"Newton stopped at residual {gnorm:.3e} after {it} iterations",
                iterations=it, residual=gnorm)
        it += 1
        J = jacobian(u, beta, ops)
        try:
            lu = sla.lu_factor(J, check_finite=False)
        except (ValueError, sla.LinAlgError) as exc:
            raise SingularJacobian(str(exc)) from exc
        if np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.max(np.abs(np.diag(lu[0]))):
            raise SingularJacobian(f"singular Jacobian at iteration {it}")
        step = sla.lu_solve(lu, -G, check_finite=False)
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = u + t * step
            Gt = residual(trial, beta, ops)
            mt = float(Gt @ Gt)
            if np.isfinite(mt) and mt < merit:
                break
            t *= 0.5
        else:
            raise NonConvergence(
                f"line search failed at residual {gnorm:.3e}", iterations=it, residual=gnorm)
        u, G, merit = trial, Gt, mt
        gnorm = float(np.max(np.abs(G)))
    return SteadyStateResult(u=u, residual_norm=gnorm, iterations=it,
                             positive=bool(np.min(u) > -1e-12))


def continue_branch(beta: float, ops: ModelOps, beta_start: float,
                    u_start: Optional[np.ndarray] = None, step: float = 0.02,
                    min_step: float = 1e-5, **newton_kw) -> SteadyStateResult:
    """Natural continuation in beta from a known solution at ``beta_start``.

    Useful when the first-order seed lies outside Newton's basin. Each
    step is seeded by the previous solution and halved on failure.

    Raises
    ------
    NonConvergence
        The step falls below ``min_step`` (typically a fold of the branch).
        A step landing on the zero solution counts as a failed step.
    """
    current = newton_solve(beta_start, ops, u0=u_start, **newton_kw)
    b = beta_start
    h = abs(step) * (1 if beta >= beta_start else -1)
    while b != beta:
        nxt = beta if abs(beta - b) <= abs(h) else b + h
        try:
            trial = newton_solve(nxt, ops, u0=current.u, **newton_kw)
            if np.max(np.abs(trial.u)) < TRIVIAL_LEVEL <= np.max(np.abs(current.u)):
                raise NonConvergence("collapsed onto the trivial branch",
                                     iterations=trial.iterations, residual=trial.residual_norm)
            current = trial
        except (NonConvergence, SingularJacobian):
            h *= 0.5
            if abs(h) < min_step:
                raise NonConvergence(
                    f"continuation stalled at beta={b:.6g} before reaching {beta:.6g}",
                    iterations=current.iterations, residual=current.residual_norm)
            continue
        b = nxt
    return current
