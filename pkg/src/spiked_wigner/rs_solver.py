"""Replica-symmetric variational problem.

``F(lam, q) = psi(lam q) - lam q^2 / 4`` is maximized over ``q in [0, E X^2]``
by a uniform scan followed by golden-section refinement of every local
maximum and a Newton polish of the stationarity equation
``2 psi'(lam q) = q``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .prior import Prior, moments
from .scalar_channel import (QuadratureRule, gauss_hermite, psi, psi_derivatives,
                             psi_grid, psi_prime)

Q_ZERO_TOL = 1e-8
DEGENERACY_TOL = 1e-7
STATIONARY_TOL = 1e-7
_TIE_TOL = 1e-15
_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class RsSolution:
    lam: float
    qstar: float
    phi_rs: float
    local_maxima: list = field(default_factory=list)
    near_degenerate: bool = False
    stationarity_residual: float = 0.0


@dataclass(frozen=True)
class ThresholdReport:
    lambda_c: float
    spectral_threshold: float
    gap_flag: bool
    bracket_width: float
    centered: bool = True


def rs_potential(lam: float, q: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    if lam < 0 or q < 0:
        raise ValueError("lambda and q must be nonnegative")
    return psi(lam * q, prior, quad) - lam * q * q / 4


def _golden_max(f, a: float, b: float, tol: float, maxiter: int = 200) -> float:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _newton_stationary(lam: float, q: float, lo: float, hi: float, prior: Prior,
                       quad: QuadratureRule, steps: int = 20) -> float:
    """Polish ``2 psi'(lam q) - q = 0`` starting from ``q`` inside ``[lo, hi]``."""
    best = q
    best_res = abs(2 * psi_prime(lam * q, prior, quad) - q)
    for _ in range(steps):
        d1, d2 = psi_derivatives(lam * q, prior, quad, order=2)
        g = 2 * d1 - q
        dg = 2 * lam * d2 - 1
        if dg == 0 or not math.isfinite(g / dg):
            break
        q_new = min(max(q - g / dg, lo), hi)
        res = abs(2 * psi_prime(lam * q_new, prior, quad) - q_new)
        if res < best_res:
            best, best_res = q_new, res
        if abs(q_new - q) <= 1e-16 or res == 0.0:
            break
        q = q_new
    return best


def solve_qstar(lam: float, prior: Prior, quad: QuadratureRule | None = None,
                grid_size: int = 2000, tol: float = 1e-12) -> RsSolution:
    """Global maximizer of ``F(lam, .)`` on ``[0, E X^2]``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    quad = gauss_hermite() if quad is None else quad
    mom = moments(prior)
    if lam == 0.0:
        # F(0, .) vanishes identically; use the small-lambda limit (E X)^2
        q0 = mom.m1 ** 2
        return RsSolution(0.0, q0, 0.0, [(q0, 0.0)], False, 0.0)

    qmax = mom.m2
    qs = np.linspace(0.0, qmax, grid_size)
    F = psi_grid(lam * qs, prior, quad) - lam * qs * qs / 4

    def f(q):
        return psi(lam * q, prior, quad) - lam * q * q / 4

    candidates = []
    if F[0] >= F[1]:
        candidates.append(0)
    for i in range(1, grid_size - 1):
        if F[i] > F[i - 1] and F[i] >= F[i + 1]:
            candidates.append(i)
    if F[-1] > F[-2]:
        candidates.append(grid_size - 1)

    def g(q):
        return 2 * psi_prime(lam * q, prior, quad) - q

    maxima = []
    for i in candidates:
        if i == 0:
            curvature = 2 * lam * psi_derivatives(0.0, prior, quad, order=2)[1] - 1
            if g(0.0) > STATIONARY_TOL:
                continue
            if curvature <= 0:
                maxima.append((0.0, 0.0))
            elif g(qs[1]) < 0:
                # branch leaving q = 0 below the first grid point; F is too flat there
                hi_q = qs[1]
                lo_q = hi_q / 10
                while g(lo_q) <= 0 and lo_q > 1e-30:
                    hi_q, lo_q = lo_q, lo_q / 10
                if g(lo_q) > 0:
                    q = brentq(g, lo_q, hi_q, xtol=1e-300, rtol=4 * np.finfo(float).eps)
                    maxima.append((float(q), float(f(q))))
                else:
                    maxima.append((0.0, 0.0))
            continue
        lo = qs[i - 1]
        hi = qs[min(i + 1, grid_size - 1)]
        q = _golden_max(f, lo, hi, tol) if i < grid_size - 1 else qs[i]
        q = _newton_stationary(lam, q, lo, hi, prior, quad)
        # at tiny lam the grid values are rounding noise; keep true critical points only
        res = g(q)
        if (res >= -STATIONARY_TOL) if i == grid_size - 1 else (abs(res) <= STATIONARY_TOL):
            maxima.append((float(q), float(f(q))))
    if not any(q == 0.0 for q, _ in maxima) and g(0.0) <= STATIONARY_TOL:
        if 2 * lam * psi_derivatives(0.0, prior, quad, order=2)[1] - 1 <= 0:
            maxima.append((0.0, 0.0))
    if not maxima:
        # grid fully flat; polish from the small-lambda limit
        q = _newton_stationary(lam, mom.m1 ** 2, 0.0, qmax, prior, quad)
        maxima.append((float(q), float(f(q))))

    top_val = max(v for _, v in maxima)
    tie = _TIE_TOL * max(1.0, abs(top_val))
    qstar, phi = max((m for m in maxima if m[1] >= top_val - tie), key=lambda m: m[0])
    # q = 0 is always admissible and F(lam, 0) = 0
    phi = max(phi, 0.0)
    values = sorted((v for _, v in maxima), reverse=True)
    near = len(values) > 1 and values[0] - values[1] < DEGENERACY_TOL
    resid = abs(2 * psi_prime(lam * qstar, prior, quad) - qstar) if qstar > 0 else 0.0
    return RsSolution(float(lam), float(qstar), float(phi), sorted(maxima), bool(near), float(resid))


def fixed_point_qstar(lam: float, prior: Prior, quad: QuadratureRule | None = None,
                      q0: float | None = None, iters: int = 10_000, tol: float = 1e-14) -> float:
    """Iterate ``q <- 2 psi'(lam q)`` from ``q0`` (default ``E X^2``)."""
    q = moments(prior).m2 if q0 is None else q0
    for _ in range(iters):
        q_new = 2 * psi_prime(lam * q, prior, quad)
        if abs(q_new - q) < tol:
            return q_new
        q = q_new
    return q


def phi_rs(lam: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    return solve_qstar(lam, prior, quad).phi_rs


def mmse(lam: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    return moments(prior).m2 - solve_qstar(lam, prior, quad).qstar


def lambda_c(prior: Prior, quad: QuadratureRule | None = None, bracket_tol: float = 1e-6,
             grid_size: int = 2000) -> ThresholdReport:
    """Reconstruction threshold by bisection on ``q*(lam) > Q_ZERO_TOL``."""
    mom = moments(prior)
    spectral = 1.0 / mom.m2 ** 2
    if abs(mom.m1) > 1e-12:
        return ThresholdReport(0.0, spectral, True, 0.0, centered=False)

    def positive(lam):
        return solve_qstar(lam, prior, quad, grid_size=grid_size).qstar > Q_ZERO_TOL

    lo, hi = 0.0, spectral * 1.05
    if not positive(hi):
        raise RuntimeError("q* vanishes above the spectral threshold; solver failure")
    while hi - lo > bracket_tol:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    lc = 0.5 * (lo + hi)
    return ThresholdReport(lc, spectral, lc < spectral - 10 * bracket_tol, hi - lo)


def _sup_positive_branch(lam: float, prior: Prior, quad: QuadratureRule, grid_size: int) -> float:
    return solve_qstar(lam, prior, quad, grid_size=grid_size).phi_rs


def rho_star(quad: QuadratureRule | None = None, tol: float = 1e-4, criterion: str = "threshold",
             bracket: tuple[float, float] = (0.01, 0.5), grid_size: int = 2000) -> float:
    """Critical sparsity of the sparse Rademacher family.

    ``criterion="threshold"`` (default) bisects on whether the
    reconstruction threshold sits strictly below the spectral one, i.e.
    whether ``sup_q F(1, q) > 0``. ``criterion="cusp"`` bisects on
    whether ``F(lam, .)`` can have two local maxima for some ``lam``,
    detected through ``min_{r>0} psi'(r) - r psi''(r) < 0``.
    ``criterion="psi3_origin"`` bisects on the sign of the third derivative
    of ``psi`` at 0; for centered unit-variance priors it equals -1 at every
    ``rho``, so no sign change is ever bracketed and the call raises.
    """
    quad = gauss_hermite() if quad is None else quad
    if criterion == "threshold":
        def below(rho):
            return _sup_positive_branch(1.0, Prior.sparse_rademacher(rho), quad, grid_size) > 1e-10
    elif criterion == "psi3_origin":
        def below(rho):
            return psi_derivatives(0.0, Prior.sparse_rademacher(rho), quad, order=3)[2] > 0.0
    elif criterion == "cusp":
        def below(rho):
            p = Prior.sparse_rademacher(rho)
            rs = np.linspace(0.02, 3.0, 150)
            vals = []
            for r in rs:
                d1, d2 = psi_derivatives(r, p, quad, order=2)
                vals.append(d1 - r * d2)
            return min(vals) < 0.0
    else:
        raise ValueError(f"unknown criterion {criterion!r}")

    lo, hi = bracket
    if not (below(lo) and not below(hi)):
        raise RuntimeError(f"no sign change bracketed in {bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if below(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rs_curve(lams, prior: Prior, quad: QuadratureRule | None = None) -> list[RsSolution]:
    return [solve_qstar(float(lam), prior, quad) for lam in lams]
