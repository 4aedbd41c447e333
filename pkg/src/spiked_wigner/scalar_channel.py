"""Scalar Gaussian channel ``y = sqrt(r) x* + z``.

Free energies ``psi(r)`` and ``psi_bar(r, s)``, their derivatives, the
scalar posterior averages and the replica coefficients ``a0, a1, a2``.
Expectations over ``x*`` are exact atom sums; expectations over ``z`` use a
Gauss-Hermite rule normalized to the standard normal.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm

from .prior import Prior, moments

DEFAULT_ORDER = 100


@dataclass(frozen=True)
class QuadratureRule:
    z_nodes: np.ndarray
    z_weights: np.ndarray
    order: int


@lru_cache(maxsize=16)
def gauss_hermite(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Unit-mass Gauss-Hermite rule for ``E f(z)``, ``z ~ N(0, 1)``."""
    if order < 1:
        raise ValueError("order must be positive")
    # scipy switches to an asymptotic rule at high order where numpy overflows
    nodes, weights = roots_hermitenorm(order)
    weights = weights / weights.sum()
    # symmetrize exactly; hermegauss is symmetric only to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, order)


def _rule(quad: QuadratureRule | None) -> QuadratureRule:
    return gauss_hermite() if quad is None else quad


def _check_r(r: float) -> float:
    r = float(r)
    if not r >= 0.0:
        raise ValueError(f"r must be nonnegative, got {r}")
    return r


def _lse_last(expo: np.ndarray) -> np.ndarray:
    # plain max-shift; scipy's logsumexp spends most of its time on edge cases
    top = expo.max(axis=-1)
    return top + np.log(np.exp(expo - top[..., None]).sum(axis=-1))


def _log_partition(r, s, prior: Prior, quad: QuadratureRule,
                   outer: Prior | None = None):
    """Log normalizer and exponent tensor on the ``(z, x*, x)`` grid.

    ``outer`` is the law of ``x*`` (defaults to ``prior``). Returned arrays
    have shapes ``(Z, S*)`` and ``(Z, S*, S)``.
    """
    outer = prior if outer is None else outer
    z = quad.z_nodes[:, None, None]
    xs = outer.values[None, :, None]
    x = prior.values[None, None, :]
    expo = np.sqrt(r) * z * x + s * x * xs - 0.5 * r * x * x + prior.log_weights[None, None, :]
    return _lse_last(expo), expo


def psi_bar(r: float, s: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    """Two-argument free energy ``E log int exp(sqrt(r) z x + s x x* - r x^2 / 2) dP(x)``."""
    r = _check_r(r)
    s = float(s)
    quad = _rule(quad)
    if r == 0.0 and s == 0.0:
        return 0.0
    log_z, _ = _log_partition(r, s, prior, quad)
    return float(quad.z_weights @ log_z @ prior.weights)


def psi(r: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    """Mutual-information-type free energy of the scalar channel; ``psi(0) = 0``."""
    return psi_bar(r, r, prior, quad)


def psi_grid(rs, prior: Prior, quad: QuadratureRule | None = None) -> np.ndarray:
    """Vectorized ``psi`` over an array of nonnegative ``r``."""
    quad = _rule(quad)
    rs = np.asarray(rs, dtype=float)
    if np.any(rs < 0):
        raise ValueError("r must be nonnegative")
    flat = rs.ravel()
    r = flat[:, None, None, None]
    z = quad.z_nodes[None, :, None, None]
    xs = prior.values[None, None, :, None]
    x = prior.values[None, None, None, :]
    expo = np.sqrt(r) * z * x + r * x * xs - 0.5 * r * x * x + prior.log_weights
    log_z = _lse_last(expo)
    out = np.einsum("z,rzs,s->r", quad.z_weights, log_z, prior.weights)
    out[flat == 0.0] = 0.0
    return out.reshape(rs.shape)


@dataclass(frozen=True)
class ScalarGibbs:
    """Posterior of ``x*`` given ``y = sqrt(r) x* + z`` on the quadrature grid.

    ``weights[k, i, j]`` is the posterior mass of atom ``j`` at noise node
    ``k`` when the true value is atom ``i``.
    """

    r: float
    weights: np.ndarray
    prior: Prior
    outer: Prior
    quad: QuadratureRule

    def average(self, values) -> np.ndarray:
        """``<f(x)>`` on the ``(z, x*)`` grid for atomwise values of ``f``."""
        return self.weights @ np.asarray(values, dtype=float)

    def expect(self, table: np.ndarray) -> float:
        """``E_{x*, z}`` of a ``(Z, S*)`` table."""
        return float(self.quad.z_weights @ table @ self.outer.weights)

    @property
    def xstar(self) -> np.ndarray:
        return self.outer.values[None, :]


def scalar_gibbs(r: float, prior: Prior, quad: QuadratureRule | None = None,
                 s: float | None = None, outer: Prior | None = None) -> ScalarGibbs:
    r = _check_r(r)
    quad = _rule(quad)
    s = r if s is None else float(s)
    log_z, expo = _log_partition(r, s, prior, quad, outer)
    w = np.exp(expo - log_z[..., None])
    return ScalarGibbs(r, w, prior, prior if outer is None else outer, quad)


def _first_two(r: float, prior: Prior, quad: QuadratureRule) -> tuple[float, float]:
    g = scalar_gibbs(r, prior, quad)
    x = prior.values
    m = g.average(x)
    m2 = g.average(x * x)
    xs = g.xstar
    d1 = 0.5 * g.expect(xs * m)
    d2 = 0.5 * g.expect(xs * xs * m2 - 2 * xs * m2 * m + xs * m ** 3)
    return d1, d2


def psi_prime(r: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    return _first_two(_check_r(r), prior, _rule(quad))[0]


def psi_second(r: float, prior: Prior, quad: QuadratureRule | None = None) -> float:
    return _first_two(_check_r(r), prior, _rule(quad))[1]


def _third_by_differences(r: float, prior: Prior, quad: QuadratureRule) -> float:
    h = max(1e-4, 1e-3 * r)
    f = lambda u: _first_two(u, prior, quad)[1]  # noqa: E731
    if r >= 2 * h:
        def diff(step):
            return (f(r + step) - f(r - step)) / (2 * step)
    else:
        # one-sided: psi'' is not defined for negative r by the quadrature formula
        f0 = f(r)

        def diff(step):
            return (-3 * f0 + 4 * f(r + step) - f(r + 2 * step)) / (2 * step)
    return (4 * diff(h / 2) - diff(h)) / 3


def psi_derivatives(r: float, prior: Prior, quad: QuadratureRule | None = None,
                    order: int = 3) -> list[float]:
    """``[psi', psi'', psi''']`` truncated to ``order`` entries.

    The first two come from their posterior-average expressions, the third
    from Richardson-extrapolated differences of the analytic second
    derivative.
    """
    if not 0 <= order <= 3:
        raise ValueError("order must be at most 3")
    r = _check_r(r)
    quad = _rule(quad)
    if order == 0:
        return []
    d1, d2 = _first_two(r, prior, quad)
    out = [d1, d2]
    if order == 3:
        out.append(_third_by_differences(r, prior, quad))
    return out[:order]


@dataclass(frozen=True)
class ReplicaCoefficients:
    a0: float
    a1: float
    a2: float
    r: float
    qstar: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2])


def replica_coefficients(lam: float, qstar: float, prior: Prior,
                         quad: QuadratureRule | None = None) -> ReplicaCoefficients:
    """Fourth-order replica overlaps of the scalar channel at ``r = lam * qstar``."""
    if lam < 0 or qstar < 0:
        raise ValueError("lambda and qstar must be nonnegative")
    r = float(lam) * float(qstar)
    g = scalar_gibbs(r, prior, _rule(quad))
    x = prior.values
    m = g.average(x)
    m2 = g.average(x * x)
    q2 = float(qstar) ** 2
    return ReplicaCoefficients(
        a0=g.expect(m2 * m2) - q2,
        a1=g.expect(m2 * m * m) - q2,
        a2=g.expect(m ** 4) - q2,
        r=r,
        qstar=float(qstar),
    )


def asymmetry_gap(r: float, prior: Prior, quad: QuadratureRule | None = None) -> tuple[float, float]:
    """Return ``(psi_bar(r, r) - psi_bar(r, -r), lower_bound)``.

    The lower bound is ``2 E <dnu/dmu(x) - 1>^2`` under the channel whose
    prior and signal law are both the symmetrized prior ``mu``.
    """
    r = _check_r(r)
    quad = _rule(quad)
    if r == 0.0:
        return 0.0, 0.0
    gap = psi_bar(r, r, prior, quad) - psi_bar(r, -r, prior, quad)
    mu = prior.symmetrized()
    ratio = np.array([prior.weight_at(v) for v in mu.values]) / mu.weights
    g = scalar_gibbs(r, mu, quad)
    dev = g.average(ratio - 1.0)
    return gap, 2.0 * g.expect(dev * dev)


def centered_unit_variance(prior: Prior, tol: float = 1e-12) -> bool:
    m = moments(prior)
    return abs(m.m1) <= tol and abs(m.m2 - 1.0) <= tol
