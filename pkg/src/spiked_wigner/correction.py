"""Finite-size correction, cavity system and detection formulas.

The cavity matrix ``A`` and the coefficients ``a = (a0, a1, a2)`` define the
linear system ``(I - t A) c = a`` whose first coordinate is the asymptotic
overlap variance ``delta_rs(lam; t)``. Integrating it over ``t`` gives the
order-one correction ``psi_rs`` to the KL divergence.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.special import erfc

from .prior import Prior, symmetry_defect
from .rs_solver import Q_ZERO_TOL, RsSolution, solve_qstar
from .scalar_channel import QuadratureRule, ReplicaCoefficients, replica_coefficients

VALID_MARGIN = 1e-9
LEFT_EIGENVECTOR_MU1 = np.array([1.0, -2.0, 1.0])
# left eigenvector of A for mu2; (2, -3, 2) as sometimes quoted is not one
LEFT_EIGENVECTOR_MU2 = np.array([1.0, -3.0, 2.0])

_FAULTS: set[str] = set()


@contextmanager
def inject_fault(name: str):
    """Test hook that corrupts a formula; only ``"mu2_sign"`` is known."""
    if name not in {"mu2_sign"}:
        raise ValueError(f"unknown fault {name!r}")
    _FAULTS.add(name)
    try:
        yield
    finally:
        _FAULTS.discard(name)


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CltParams:
    mu: float
    sigma2: float


@dataclass(frozen=True)
class CorrectionBundle:
    lam: float
    coeffs: ReplicaCoefficients
    mu1: float
    mu2: float
    cavity_matrix: np.ndarray
    psi_rs: float | None
    c_vector: tuple | None
    valid: bool
    covered: bool
    near_degenerate: bool

    @property
    def a(self) -> np.ndarray:
        return self.coeffs.as_array()


def cavity_matrix(lam: float, a0: float, a1: float, a2: float) -> np.ndarray:
    return lam * np.array([
        [a0, -2 * a1, a2],
        [a1, a0 - a1 - 2 * a2, -2 * a1 + 3 * a2],
        [a2, 4 * a1 - 6 * a2, a0 - 6 * a1 + 6 * a2],
    ])


def eigenvalue_slopes(a0: float, a1: float, a2: float) -> tuple[float, float]:
    """``(mu1 / lam, mu2 / lam)``."""
    b2 = a0 - 3 * a1 + 2 * a2
    if "mu2_sign" in _FAULTS:
        b2 = -b2
    return a0 - 2 * a1 + a2, b2


def psi_rs_closed_form(lam: float, a0: float, a1: float, a2: float) -> float:
    b1, b2 = eigenvalue_slopes(a0, a1, a2)
    mu1, mu2 = lam * b1, lam * b2
    return 0.25 * (math.log1p(-mu1) - 2 * math.log1p(-mu2)
                   + lam * (4 * a1 - 3 * a2) / (1 - mu1) - lam * a0)


def correction_bundle(lam: float, prior: Prior, quad: QuadratureRule | None = None,
                      solution: RsSolution | None = None) -> CorrectionBundle:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    sol = solve_qstar(lam, prior, quad) if solution is None else solution
    if sol.near_degenerate:
        warnings.warn(f"lambda={lam} is close to a first-order transition; "
                      "the correction formula may not apply", RuntimeWarning, stacklevel=2)
    co = replica_coefficients(lam, sol.qstar, prior, quad)
    b1, b2 = eigenvalue_slopes(co.a0, co.a1, co.a2)
    mu1, mu2 = lam * b1, lam * b2
    A = cavity_matrix(lam, co.a0, co.a1, co.a2)
    valid = mu1 < 1 - VALID_MARGIN
    covered = sol.qstar <= Q_ZERO_TOL or symmetry_defect(prior) > 0
    psi_c = psi_rs_closed_form(lam, co.a0, co.a1, co.a2) if valid else None
    bundle = CorrectionBundle(lam, co, mu1, mu2, A, psi_c, None, valid, covered,
                              sol.near_degenerate)
    if valid and 1 - mu2 > 0:
        c = solve_cavity_system(lam, 1.0, bundle)["elimination"]
        object.__setattr__(bundle, "c_vector", tuple(float(v) for v in c))
    return bundle


def _integrand_over_lambda(t: float, b: CorrectionBundle) -> float:
    """``delta_rs`` written with ``mu_i / lam`` so that ``lam = 0`` is regular."""
    a0, a1, a2 = b.a
    b1, b2 = eigenvalue_slopes(a0, a1, a2)
    d1 = 1 - t * b.mu1
    d2 = 1 - t * b.mu2
    return -b1 / d1 + 2 * b2 / d2 + (4 * a1 - 3 * a2) / d1 ** 2


def delta_rs(lam: float, t: float, bundle: CorrectionBundle) -> float:
    """Limit of ``N E<(R_{1,*} - q*)^2>_t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if lam != bundle.lam:
        raise ValueError("bundle was built for a different lambda")
    if not bundle.valid or t * bundle.mu1 >= 1 or t * bundle.mu2 >= 1:
        raise DomainError("t * mu1 >= 1: overlap variance diverges")
    return float(_integrand_over_lambda(t, bundle))


def psi_rs_via_integral(lam: float, bundle: CorrectionBundle, integration_steps: int = 64) -> float:
    """Gauss-Legendre integral of ``lam delta_rs / 4`` over ``t``, minus ``lam a0 / 4``."""
    if not bundle.valid:
        raise DomainError("mu1 >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(integration_steps)
    ts = 0.5 * (nodes + 1)
    total = 0.5 * sum(w * delta_rs(lam, float(t), bundle) for t, w in zip(ts, weights))
    return 0.25 * lam * total - 0.25 * lam * bundle.coeffs.a0


def cavity_closed_forms(lam: float, t: float, a0: float, a1: float, a2: float) -> np.ndarray:
    """Explicit solution of ``(I - t A) c = a``; falls back to ``a`` at ``lam t = 0``."""
    lt = lam * t
    if lt == 0.0:
        return np.array([a0, a1, a2])
    b1, b2 = eigenvalue_slopes(a0, a1, a2)
    d1 = 1 - t * lam * b1
    d2 = 1 - t * lam * b2
    shared = (-3 + 3 * lt * a0 - 2 * lt * a1) / d1 ** 2
    c0 = (-1 + 2 / d2 + 2 / d1 + shared) / lt
    c1 = (shared + 3 / d2) / lt
    c2 = (4 * lt * a1 ** 2 + (1 - lt * a0 - 5 * lt * a1) * a2 + 2 * lt * a2 ** 2) / (d1 ** 2 * d2)
    return np.array([c0, c1, c2])


def solve_cavity_system(lam: float, t: float, bundle: CorrectionBundle) -> dict:
    """Solve ``(I - t A) c = a`` by elimination and by the explicit formulas.

    Returns a dict with keys ``elimination``, ``closed_form`` and
    ``discrepancy`` (max abs difference). Elimination is the reference.
    """
    if t * bundle.mu1 >= 1:
        raise DomainError("t * mu1 >= 1")
    M = np.eye(3) - t * bundle.cavity_matrix
    if abs(np.linalg.det(M)) < 1e-12:
        raise DomainError("singular cavity system")
    elim = np.linalg.solve(M, bundle.a)
    closed = cavity_closed_forms(lam, t, *bundle.a)
    return {"elimination": elim, "closed_form": closed,
            "discrepancy": float(np.max(np.abs(elim - closed)))}


def eigen_residuals(bundle: CorrectionBundle, v2=LEFT_EIGENVECTOR_MU2) -> tuple[float, float]:
    """Max-norm residuals of ``A^T v = mu v`` for the two eigenpairs."""
    At = bundle.cavity_matrix.T
    v1 = LEFT_EIGENVECTOR_MU1
    v2 = np.asarray(v2, dtype=float)
    r1 = float(np.max(np.abs(At @ v1 - bundle.mu1 * v1)))
    r2 = float(np.max(np.abs(At @ v2 - bundle.mu2 * v2)))
    return r1, r2


def clt_params(lam: float) -> CltParams:
    """Mean and variance of the limiting Gaussian of ``log L`` below threshold."""
    if not 0.0 <= lam < 1.0:
        raise DomainError("lambda must lie in [0, 1)")
    mu = 0.25 * (-math.log1p(-lam) - lam)
    return CltParams(mu, 2 * mu)


@dataclass(frozen=True)
class DetectionFormulas:
    kl: float
    type2: float
    type1: float
    err_star: float
    tv: float
    conjectural_type1: bool = False


def detection_formulas(lam: float, prior: Prior | None = None) -> DetectionFormulas:
    """Limiting KL, test errors and total variation below threshold.

    The Type-I and TV formulas are proved only for the Rademacher prior;
    they are flagged as conjectural otherwise.
    """
    mu = clt_params(lam).mu
    half = 0.5 * float(erfc(math.sqrt(mu) / 2))
    err = 2 * half
    conj = prior is not None and prior.kind != "rademacher"
    return DetectionFormulas(mu, half, half, err, 1 - err, conj)
