"""Exact log-likelihood ratio and posterior averages by full enumeration.

Three evaluators of the same sum over spike configurations are provided:

``naive``
    chunked numpy re-evaluation of every configuration (the oracle);
``gray_code``
    mixed-radix reflected Gray enumeration with running fields, ``O(n)`` per
    configuration;
``sk_reduction``
    Rademacher only: the ratio equals ``Z_n(beta) / 2^n`` times a
    deterministic factor, where ``Z_n`` is an SK partition function at
    ``beta = sqrt(lam)``. ``Z_n`` is split over two halves of the spins so the
    cross term is a single matrix product.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numba
import numpy as np
from scipy.special import logsumexp

from ..prior import Prior
from .instance import Instance

DEFAULT_CAP = 2 ** 26
PAIR_CAP = 2 ** 20
_CHUNK = 2 ** 16
METHODS = ("auto", "naive", "gray_code", "sk_reduction")


class EnumerationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class LlrResult:
    log_l: float
    method: str
    n: int
    lam: float
    config_count: int


@dataclass(frozen=True)
class _Hamiltonian:
    """Posterior log-weight ``sum log w + c sum_{i<j} Y x x - pen sum_{i<j} x^2 x^2 + sum (hs x - gs x^2)``."""

    Y: np.ndarray
    c: float
    pen: float
    hs: np.ndarray
    gs: float
    values: np.ndarray
    logw: np.ndarray

    @property
    def trivial(self) -> bool:
        return self.c == 0.0 and self.pen == 0.0 and self.gs == 0.0 and not np.any(self.hs)


def _hamiltonian(instance: Instance, prior: Prior) -> _Hamiltonian:
    n = instance.n
    lt = instance.t * instance.lam
    side = (1 - instance.t) * instance.side_r
    if instance.y_side is not None and side > 0:
        hs = math.sqrt(side) * np.asarray(instance.y_side, dtype=float)
    else:
        hs, side = np.zeros(n), 0.0
    return _Hamiltonian(instance.matrix(), math.sqrt(lt / n), lt / (2 * n), hs, side / 2,
                        np.ascontiguousarray(prior.values), np.ascontiguousarray(prior.log_weights))


def _check_cap(s: int, n: int, cap: int) -> int:
    count = s ** n
    if count > cap:
        raise EnumerationCapError(
            f"{s}^{n} = {count} configurations exceeds the enumeration cap {cap}; "
            "use mcmc_posterior for overlap statistics at this size")
    return count


def _configs(s: int, n: int, start: int, stop: int) -> np.ndarray:
    """Digit matrix of configurations ``start..stop-1`` (site 0 least significant)."""
    k = np.arange(start, stop, dtype=np.int64)[:, None]
    return (k // (s ** np.arange(n, dtype=np.int64))[None, :]) % s


def _chunk_energies(H: _Hamiltonian, digits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = H.values[digits]
    X2 = X * X
    e = H.logw[digits].sum(axis=1)
    e += 0.5 * H.c * np.einsum("ki,ki->k", X @ H.Y, X)
    s2 = X2.sum(axis=1)
    e -= 0.5 * H.pen * (s2 * s2 - (X2 * X2).sum(axis=1))
    e += X @ H.hs - H.gs * s2
    return e, X


def _naive(H: _Hamiltonian, n: int) -> float:
    s = H.values.size
    total = -np.inf
    count = s ** n
    for start in range(0, count, _CHUNK):
        e, _ = _chunk_energies(H, _configs(s, n, start, min(count, start + _CHUNK)))
        total = np.logaddexp(total, logsumexp(e))
    return float(total)


@numba.njit(cache=True)
def _gray_kernel(Y, values, logw, c, pen, hs, gs):
    n = Y.shape[0]
    s = values.size
    a = np.zeros(n, np.int64)
    o = np.ones(n, np.int64)
    f = np.arange(n + 1)
    x = np.empty(n)
    for i in range(n):
        x[i] = values[0]
    h = np.zeros(n)
    comp = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for j in range(n):
            acc += Y[k, j] * x[j]
        h[k] = acc
    run_max = -np.inf
    run_sum = 0.0
    while True:
        quad = 0.0
        s2 = 0.0
        s4 = 0.0
        lin = 0.0
        for i in range(n):
            xi = x[i]
            x2 = xi * xi
            quad += xi * h[i]
            s2 += x2
            s4 += x2 * x2
            lin += logw[a[i]] + hs[i] * xi
        e = 0.5 * c * quad - 0.5 * pen * (s2 * s2 - s4) + lin - gs * s2
        if e > run_max:
            run_sum = run_sum * np.exp(run_max - e) + 1.0
            run_max = e
        else:
            run_sum += np.exp(e - run_max)
        # loopless reflected mixed-radix Gray step
        j = f[0]
        f[0] = 0
        if j == n:
            break
        a[j] += o[j]
        d = values[a[j]] - x[j]
        x[j] = values[a[j]]
        for k in range(n):
            # compensated update of the local field
            yk = Y[k, j] * d - comp[k]
            tk = h[k] + yk
            comp[k] = (tk - h[k]) - yk
            h[k] = tk
        if a[j] == 0 or a[j] == s - 1:
            o[j] = -o[j]
            f[j] = f[j + 1]
            f[j + 1] = j + 1
    return run_max + np.log(run_sum)


def _gray(H: _Hamiltonian) -> float:
    if H.values.size < 2:
        return _naive(H, H.Y.shape[0])
    return float(_gray_kernel(H.Y, H.values, H.logw, H.c, H.pen, H.hs, H.gs))


def _spin_table(k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0))
    bits = (np.arange(2 ** k)[:, None] >> np.arange(k)[None, :]) & 1
    return 1.0 - 2.0 * bits


def sk_log_partition(Y: np.ndarray, beta: float) -> float:
    """``log sum_sigma exp(beta / sqrt(n) sum_{i<j} Y_ij s_i s_j)`` over ``{-1, 1}^n``."""
    n = Y.shape[0]
    g = beta / math.sqrt(n)
    n_b = (n - 1) // 2
    n_a = n - n_b
    # spin 0 is fixed to +1; the global flip doubles the sum
    S_a = np.hstack([np.ones((2 ** (n_a - 1), 1)), _spin_table(n_a - 1)])
    S_b = _spin_table(n_b)
    Yaa, Ybb, Yab = Y[:n_a, :n_a], Y[n_a:, n_a:], Y[:n_a, n_a:]
    e_a = 0.5 * g * np.einsum("ki,ki->k", S_a @ Yaa, S_a)
    e_b = 0.5 * g * np.einsum("ki,ki->k", S_b @ Ybb, S_b) if n_b else np.zeros(1)
    right = g * (Yab @ S_b.T) if n_b else np.zeros((n_a, 1))
    total = -np.inf
    rows = max(1, _CHUNK * 64 // max(1, S_b.shape[0]))
    for start in range(0, S_a.shape[0], rows):
        M = S_a[start:start + rows] @ right
        M += e_a[start:start + rows, None]
        M += e_b[None, :]
        top = M.max()
        M -= top
        np.exp(M, out=M)
        total = np.logaddexp(total, top + math.log(M.sum()))
    return float(total + math.log(2.0))


def _is_rademacher(prior: Prior) -> bool:
    return (prior.size == 2 and np.allclose(prior.values, [-1.0, 1.0], rtol=0, atol=1e-15)
            and np.allclose(prior.weights, 0.5, rtol=0, atol=1e-15))


def exact_llr(instance: Instance, prior: Prior, method: str = "auto",
              cap: int = DEFAULT_CAP) -> LlrResult:
    """``log L(Y; lam)``: the log of the average over the prior of the likelihood ratio.

    ``method="auto"`` uses the SK reduction for the Rademacher prior without
    side information and Gray-code enumeration otherwise.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n = instance.n
    count = _check_cap(prior.size, n, cap)
    H = _hamiltonian(instance, prior)
    plain = instance.t == 1.0 or not np.any(H.hs)
    if method == "auto":
        method = "sk_reduction" if (_is_rademacher(prior) and plain and H.gs == 0) else "gray_code"
    if H.trivial:
        return LlrResult(0.0, method, n, instance.lam, count)
    if method == "sk_reduction":
        if not _is_rademacher(prior):
            raise ValueError("sk_reduction requires the Rademacher prior")
        if np.any(H.hs) or H.gs:
            raise ValueError("sk_reduction does not support side information")
        lt = instance.t * instance.lam
        val = sk_log_partition(H.Y, math.sqrt(lt)) - n * math.log(2.0) - lt * (n - 1) / 4
    elif method == "gray_code":
        val = _gray(H)
    else:
        val = _naive(H, n)
    return LlrResult(float(val), method, n, instance.lam, count)


@dataclass(frozen=True)
class PosteriorMoments:
    """Exact posterior averages for one instance."""

    mean: np.ndarray
    pair: np.ndarray
    r1s: float
    r1s_sq: float
    abs_r1s: float
    r12: float
    r12_sq: float
    log_l: float


def posterior_moments(instance: Instance, prior: Prior, cap: int = PAIR_CAP) -> PosteriorMoments:
    """Single-site means, pair correlations and overlap averages by enumeration."""
    n = instance.n
    count = _check_cap(prior.size, n, cap)
    H = _hamiltonian(instance, prior)
    e, X = _chunk_energies(H, _configs(prior.size, n, 0, count))
    log_l = float(logsumexp(e))
    p = np.exp(e - log_l)
    mean = p @ X
    pair = X.T @ (p[:, None] * X)
    r12 = float(mean @ mean) / n
    r12_sq = float(np.sum(pair * pair)) / n ** 2
    if instance.spike is not None:
        xs = instance.spike
        per = X @ xs / n
        r1s = float(p @ per)
        r1s_sq = float(xs @ pair @ xs) / n ** 2
        abs_r1s = float(p @ np.abs(per))
    else:
        r1s = r1s_sq = abs_r1s = float("nan")
    return PosteriorMoments(mean, pair, r1s, r1s_sq, abs_r1s, r12, r12_sq,
                            0.0 if H.trivial else log_l)
