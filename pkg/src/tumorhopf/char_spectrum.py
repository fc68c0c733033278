"""Rightmost characteristic roots of the linearized delay system.

The linearization around a steady state reads

    phi'(t) = A0 phi(t) + A1 phi(t - tau),

with ``A0`` the instantaneous (tridiagonal plus diagonal) part and
``A1 = diag(B u) K`` the delayed nonlocal coupling. Its spectrum is
approximated by Chebyshev collocation of the solution-operator generator on
[-tau, 0]; each candidate root is then polished by Newton's method on the
nonlinear eigenproblem ``(A0 + exp(-lambda tau) A1 - lambda) phi = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from .errors import ConfigError, NoCrossing, NumericalError
from .steady_state import reaction_diagonal
from .system import ModelOps

DEFAULT_ORDER = 16


@dataclass(frozen=True)
class LinearizedPair:
    A0: np.ndarray
    A1: np.ndarray
    beta: float

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    def jacobian(self) -> np.ndarray:
        return self.A0 + self.A1

    def residual(self, lam: complex, tau: float, phi: np.ndarray) -> np.ndarray:
        return self.A0 @ phi + np.exp(-lam * tau) * (self.A1 @ phi) - lam * phi


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    tau: float
    beta: float
    collocation_order: int
    residuals: np.ndarray
    refined: np.ndarray
    vectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def abscissa(self) -> float:
        """Largest real part among refined roots (all roots if none refined)."""
        ev = self.eigenvalues[self.refined] if np.any(self.refined) else self.eigenvalues
        return float(np.max(ev.real))

    @property
    def rightmost(self) -> complex:
        ev = self.eigenvalues[self.refined] if np.any(self.refined) else self.eigenvalues
        return complex(ev[0])


@dataclass(frozen=True)
class HopfCrossing:
    tau_c: float
    omega_c: float
    slope_sign: int
    slope: float
    eigenvalue: complex
    spectrum: SpectrumResult


def linearize(u_ss, beta: float, ops: ModelOps) -> LinearizedPair:
    u = np.asarray(u_ss, dtype=float)
    a0, bw = reaction_diagonal(u, beta, ops)
    A0 = ops.lap.to_dense()
    A0[np.diag_indices_from(A0)] += a0
    A1 = bw[:, None] * ops.K.matrix
    return LinearizedPair(A0=A0, A1=A1, beta=beta)


def cheb(m: int):
    """Chebyshev points cos(j pi/m) and the differentiation matrix on them."""
    j = np.arange(m + 1)
    t = np.cos(np.pi * j / m)
    c = np.ones(m + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    X = t[:, None] - t[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(m + 1))
    D -= np.diag(D.sum(axis=1))
    return t, D


def collocation_matrix(lp: LinearizedPair, tau: float, m: int) -> sp.csc_matrix:
    """Sparse generator discretization of size n(m+1).

    Block 0 holds the value at theta = 0 (the splicing condition); blocks
    1..m carry the derivative along [-tau, 0] at the remaining nodes.
    """
    if tau <= 0:
        raise ConfigError("collocation needs tau > 0")
    n = lp.n
    _, D = cheb(m)
    D = (2.0 / tau) * D
    eye = sp.identity(n, format="csr")
    top = sp.hstack([sp.csr_matrix(lp.A0)]
                    + [sp.csr_matrix((n, n))] * (m - 1)
                    + [sp.csr_matrix(lp.A1)], format="csr")
    body = sp.kron(sp.csr_matrix(D[1:, :]), eye, format="csr")
    return sp.vstack([top, body], format="csc")


def refine_root(lp: LinearizedPair, tau: float, lam: complex, phi: np.ndarray,
                max_iter: int = 25, tol: float = 1e-13):
    """Newton on the nonlinear eigenproblem; returns (lambda, phi, residual, ok).

    Candidates far in the left half plane can overflow ``exp(-lambda tau)``;
    they come back with ``ok=False`` instead of raising.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _refine(lp, tau, complex(lam), np.asarray(phi, dtype=complex), max_iter, tol)


def _refine(lp, tau, lam, phi, max_iter, tol):
    n = lp.n
    phi = phi / np.linalg.norm(phi)
    c = phi.conj()
    start = lam
    I = np.eye(n)
    for _ in range(max_iter):
        e = np.exp(-lam * tau)
        if not np.isfinite(e):
            return start, phi, math.inf, False
        T = lp.A0 + e * lp.A1 - lam * I
        r = T @ phi
        res = np.linalg.norm(r) / np.linalg.norm(phi)
        if res <= tol * max(1.0, abs(lam)):
            break
        dT = -tau * e * (lp.A1 @ phi) - phi
        M = np.zeros((n + 1, n + 1), dtype=complex)
        M[:n, :n] = T
        M[:n, n] = dT
        M[n, :n] = c
        rhs = np.concatenate([-r, [1.0 - c @ phi]])
        try:
            delta = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            break
        phi = phi + delta[:n]
        lam = lam + delta[n]
        if not (np.isfinite(lam) and np.all(np.isfinite(phi))):
            return start, phi, math.inf, False
    res = float(np.linalg.norm(lp.residual(lam, tau, phi)) / np.linalg.norm(phi))
    ok = bool(np.isfinite(res)) and res <= 1e-6 and abs(lam - start) <= 0.1 * (1.0 + abs(start))
    return lam, phi, res, ok


def _candidates_delay(lp: LinearizedPair, tau: float, m: int, count: int,
                      shifts: Sequence[complex]):
    M = collocation_matrix(lp, tau, m)
    N = M.shape[0]
    vals, vecs = [], []
    for sigma in shifts:
        k = min(count, N - 2)
        # a roomy Krylov space avoids stalls on the clustered collocation spectrum
        ncv = min(N - 1, max(3 * k, 20))
        Mc = M if np.isreal(sigma) else M.astype(complex)
        # a fixed start vector keeps repeated runs bit-for-bit identical
        v0 = np.ones(N, dtype=Mc.dtype)
        try:
            w, V = eigs(Mc, k=k, sigma=sigma, which="LM", tol=1e-10,
                        ncv=ncv, maxiter=300, v0=v0)
        except ArpackNoConvergence as exc:
            w, V = exc.eigenvalues, exc.eigenvectors
        vals.append(w)
        vecs.append(V[:lp.n])
    if not vals:
        raise NumericalError("eigen-solver returned no eigenvalues")
    return np.concatenate(vals), np.concatenate(vecs, axis=1)


def rightmost_eigenvalues(lp: LinearizedPair, tau: float, m: int = DEFAULT_ORDER,
                          n_eigs: int = 10, *, candidates: int = 30,
                          shifts: Sequence[complex] = (0.05, 0.05 + 2.5j),
                          dense: Optional[bool] = None) -> SpectrumResult:
    """Rightmost ``n_eigs`` characteristic roots at delay ``tau``.

    For ``tau > 0`` the ``candidates`` collocation eigenvalues nearest each
    shift are found by sparse shift-invert (``dense=True`` forces a full dense
    eigendecomposition instead). Candidates whose Newton polish fails are
    collocation artifacts at the unresolved end of the spectrum; they stay in
    the list flagged ``refined=False`` and do not count towards the
    abscissa. The list is closed under complex conjugation, so it may hold
    one root more than ``n_eigs``.
    """
    if tau < 0:
        raise ConfigError("tau must be nonnegative")
    if m < 8:
        raise ConfigError("collocation order must be at least 8")
    n = lp.n
    try:
        if tau == 0:
            w, V = sla.eig(lp.jacobian())
        else:
            if dense is None:
                dense = n * (m + 1) <= 600
            if dense:
                w, V = sla.eig(collocation_matrix(lp, tau, m).toarray())
                V = V[:n]
            else:
                w, V = _candidates_delay(lp, tau, m, candidates, shifts)
    except NumericalError:
        raise
    except (sla.LinAlgError, RuntimeError) as exc:
        raise NumericalError(f"eigen-solver failed at tau={tau}: {exc}") from exc
    order = np.argsort(-w.real)
    roots, vecs, residuals, flags = [], [], [], []

    def known(lam):
        return any(abs(lam - z) <= 1e-8 * (1 + abs(z)) for z in roots)

    # unrefined candidates are kept (flagged) but do not use up the n_eigs budget
    for i in order:
        if sum(flags) >= n_eigs:
            break
        lam0 = w[i]
        if lam0.imag < -1e-10 * (1 + abs(lam0)):
            continue
        phi0 = V[:, i]
        if np.linalg.norm(phi0) == 0:
            continue
        if tau == 0:
            lam, phi = complex(lam0), phi0 / np.linalg.norm(phi0)
            res = float(np.linalg.norm(lp.residual(lam, 0.0, phi)))
            ok = True
        else:
            lam, phi, res, ok = refine_root(lp, tau, lam0, phi0)
            if not ok:
                lam, phi = complex(lam0), phi0 / np.linalg.norm(phi0)
                with np.errstate(over="ignore", invalid="ignore"):
                    res = float(np.linalg.norm(lp.residual(lam, tau, phi)))
        if abs(lam.imag) <= 1e-10 * (1 + abs(lam)):
            lam = complex(lam.real, 0.0)
        if known(lam):
            continue
        roots.append(lam)
        vecs.append(phi)
        residuals.append(res)
        flags.append(ok)
        if lam.imag != 0.0:
            roots.append(lam.conjugate())
            vecs.append(phi.conj())
            residuals.append(res)
            flags.append(ok)
    idx = np.argsort(-np.real(roots), kind="stable")
    return SpectrumResult(
        eigenvalues=np.asarray(roots, dtype=complex)[idx], tau=tau, beta=lp.beta,
        collocation_order=m, residuals=np.asarray(residuals)[idx],
        refined=np.asarray(flags, dtype=bool)[idx],
        vectors=np.asarray(vecs).T[:, idx] if vecs else None)


def _track(lp: LinearizedPair, tau: float, lam: complex, phi: np.ndarray) -> complex:
    lam2, _, _, ok = refine_root(lp, tau, lam, phi)
    if not ok:
        raise NumericalError(f"lost track of root {lam} at tau={tau}")
    return lam2


def hopf_crossing(lp: LinearizedPair, tau_lo: float, tau_hi: float, tol: float = 1e-10,
                  m: int = DEFAULT_ORDER, scan_points: int = 8, **spectrum_kw) -> HopfCrossing:
    """First delay in [tau_lo, tau_hi] at which the spectral abscissa crosses zero.

    A coarse scan localizes the first sign change. The rightmost root at the
    upper end of that bracket is then followed by a secant iteration on
    ``Re lambda(tau) = 0``; if it leaves the bracket or is not rightmost at the
    result, Brent bisection on the abscissa takes over. The transversality
    sign comes from a centred difference of the real part of the crossing
    root.

    Raises
    ------
    NoCrossing
        The abscissa keeps one sign on the bracket.
    """
    def abscissa(tau):
        return rightmost_eigenvalues(lp, tau, m, **spectrum_kw).abscissa

    grid = np.linspace(tau_lo, tau_hi, max(2, scan_points + 1))
    values = [abscissa(grid[0])]
    bracket = None
    for a, b in zip(grid[:-1], grid[1:]):
        fb = abscissa(b)
        if np.sign(values[-1]) != np.sign(fb):
            bracket = (a, b, values[-1], fb)
            break
        values.append(fb)
    if bracket is None:
        raise NoCrossing(f"spectral abscissa keeps sign {np.sign(values[-1]):+.0f} "
                         f"on [{tau_lo}, {tau_hi}]")
    a, b, fa, fb = bracket
    found = _crossing_by_tracking(lp, a, b, tol, m, spectrum_kw)
    if found is None:
        if fa == 0.0:
            tau_c = a
        else:
            # a loose Brent solve is enough to pick the crossing root; the secant
            # polish on that single root then drives |Re lambda| below tol cheaply
            tau_c = brentq(abscissa, a, b, xtol=1e-6 * max(1.0, b), maxiter=100)
        spec = rightmost_eigenvalues(lp, tau_c, m, **spectrum_kw)
        lam, phi = _upper_rightmost(spec)
        if abs(lam.real) > tol:
            tau_c, lam, phi = _polish_crossing(lp, tau_c, lam, phi, tol)
            if abs(lam.real) > tol:
                raise NumericalError(f"crossing polish stalled at Re lambda={lam.real:.3e}")
            spec = rightmost_eigenvalues(lp, tau_c, m, **spectrum_kw)
            if spec.abscissa > abs(lam.real) + 1e-6:
                raise NumericalError("polished root is not the rightmost one at tau_c")
    else:
        tau_c, lam, phi, spec = found
    h = 1e-3 * max(1.0, tau_c)
    up = _track(lp, tau_c + h, lam, phi)
    down = _track(lp, max(tau_c - h, 0.0), lam, phi)
    slope = (up.real - down.real) / (tau_c + h - max(tau_c - h, 0.0))
    return HopfCrossing(tau_c=float(tau_c), omega_c=float(abs(lam.imag)),
                        slope_sign=int(np.sign(slope)), slope=float(slope),
                        eigenvalue=complex(lam), spectrum=spec)


def _crossing_by_tracking(lp, a, b, tol, m, spectrum_kw):
    """Follow the rightmost root at ``b`` back to Re lambda = 0 by secant in tau.

    Returns ``(tau_c, lam, phi, spectrum)`` when the root lands inside the
    bracket and is still rightmost there, else ``None`` (caller bisects).
    """
    spec_b = rightmost_eigenvalues(lp, b, m, **spectrum_kw)
    lam, phi = _upper_rightmost(spec_b)
    try:
        tau_c, lam, phi = _polish_crossing(lp, b, lam, phi, tol)
    except (NumericalError, FloatingPointError, ZeroDivisionError):
        return None
    if not (a <= tau_c <= b) or abs(lam.real) > tol:
        return None
    spec = rightmost_eigenvalues(lp, tau_c, m, **spectrum_kw)
    if spec.abscissa > abs(lam.real) + 1e-6:
        return None
    return tau_c, lam, phi, spec


def _upper_rightmost(spec: SpectrumResult):
    """Rightmost refined root with nonnegative imaginary part, and its vector."""
    idx = np.flatnonzero(spec.refined) if np.any(spec.refined) else np.arange(spec.eigenvalues.size)
    ev = spec.eigenvalues[idx]
    best = idx[int(np.argmax(ev.real + 1e-12 * np.sign(ev.imag)))]
    lam = spec.eigenvalues[best]
    phi = spec.vectors[:, best]
    if lam.imag < 0:
        lam, phi = lam.conjugate(), phi.conj()
    return complex(lam), phi


def _polish_crossing(lp, tau, lam, phi, tol, max_iter=30):
    t0, t1 = tau, tau * (1 + 1e-6) + 1e-9
    l0, p0, _, _ = refine_root(lp, t0, lam, phi)
    l1, p1, _, _ = refine_root(lp, t1, l0, p0)
    for _ in range(max_iter):
        if abs(l1.real) <= tol or l1.real == l0.real:
            break
        t2 = t1 - l1.real * (t1 - t0) / (l1.real - l0.real)
        t0, l0, p0 = t1, l1, p1
        t1 = t2
        l1, p1, _, _ = refine_root(lp, t1, l0, p0)
    return t1, l1, p1
