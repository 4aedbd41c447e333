"""Heat-bath Gibbs sampler for the posterior of the spike."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numba
import numpy as np

from ..prior import Prior
from .enumeration import _hamiltonian
from .instance import Instance, draw_spike
from .overlaps import FIELDS, OverlapStats
from .rng import stream

MIN_BATCHES = 20
_BLOCK = 64


@dataclass(frozen=True)
class McmcConfig:
    """Sampler settings. ``sweeps`` counts all sweeps including ``burn_in``;
    ``thinning`` is measured in single-site updates.

    ``t`` and ``side_info_r`` default to the values stored on the instance.
    """

    sweeps: int
    burn_in: int
    thinning: int
    chains: int = 4
    t: float | None = None
    side_info_r: float | None = None

    def __post_init__(self):
        if self.burn_in < 0 or self.burn_in >= self.sweeps:
            raise ValueError("need 0 <= burn_in < sweeps")
        if self.thinning < 1 or self.chains < 1:
            raise ValueError("thinning and chains must be positive")

    @classmethod
    def default(cls, n: int, **kw) -> "McmcConfig":
        return cls(sweeps=100 * n, burn_in=10 * n, thinning=n, **kw)


@numba.njit(cache=True)
def _sweeps(X, F, S2, Y, values, logw, c, pen, hs, gs, U, spike, thin, record,
            counter, rec_r1s, rec_r12, rec_mag, pos):
    """Run ``U.shape[0]`` sweeps of sequential heat-bath updates on all chains.

    ``F[ch, i] = sum_j Y_ij X[ch, j]``. Only sweeps flagged in ``record``
    advance the thinning counter. Records are written from row ``pos`` on;
    the new row count and counter are returned.
    """
    n_ch, n = X.shape
    s = values.size
    lp = np.empty(s)
    for sw in range(U.shape[0]):
        for i in range(n):
            for ch in range(n_ch):
                xi = X[ch, i]
                quad_pen = pen * (S2[ch] - xi * xi) + gs
                field = c * F[ch, i] + hs[i]
                top = -np.inf
                for k in range(s):
                    v = values[k]
                    lp[k] = logw[k] + v * field - v * v * quad_pen
                    if lp[k] > top:
                        top = lp[k]
                tot = 0.0
                for k in range(s):
                    lp[k] = np.exp(lp[k] - top)
                    tot += lp[k]
                u = U[sw, i, ch] * tot
                k = 0
                acc = lp[0]
                while acc < u and k < s - 1:
                    k += 1
                    acc += lp[k]
                v = values[k]
                if v != xi:
                    d = v - xi
                    for j in range(n):
                        F[ch, j] += Y[j, i] * d
                    S2[ch] += v * v - xi * xi
                    X[ch, i] = v
            if not record[sw]:
                continue
            counter += 1
            if counter % thin == 0:
                m = 0
                for ch in range(n_ch):
                    acc1 = 0.0
                    accm = 0.0
                    for j in range(n):
                        acc1 += X[ch, j] * spike[j]
                        accm += X[ch, j]
                    rec_r1s[pos, ch] = acc1 / n
                    rec_mag[pos, ch] = accm / n
                for a in range(n_ch):
                    for b in range(a + 1, n_ch):
                        acc2 = 0.0
                        for j in range(n):
                            acc2 += X[a, j] * X[b, j]
                        rec_r12[pos, m] = acc2 / n
                        m += 1
                pos += 1
    return pos, counter


def _batch_se(series: np.ndarray, batches: int) -> float:
    """Standard error of the mean of ``series`` from non-overlapping batch means."""
    usable = (series.size // batches) * batches
    if usable < batches:
        return float("nan")
    means = series[:usable].reshape(batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def mcmc_posterior(instance: Instance, prior: Prior, cfg: McmcConfig,
                   want_r12: bool = True) -> OverlapStats:
    """Overlap averages from independent heat-bath chains.

    Chains start from independent prior draws. Errors are batch-mean
    standard errors over at least ``MIN_BATCHES`` batches.
    """
    if instance.spike is None:
        raise ValueError("mcmc_posterior needs a planted instance")
    if want_r12 and cfg.chains < 2:
        raise ValueError("R_{1,2} requires at least two chains")
    if cfg.t is not None and cfg.t != instance.t:
        raise ValueError(f"config t={cfg.t} differs from the instance's t={instance.t}")
    if cfg.side_info_r is not None and cfg.side_info_r != instance.side_r:
        raise ValueError("config side_info_r differs from the instance's side channel")
    n = instance.n
    H = _hamiltonian(instance, prior)
    X = np.stack([draw_spike(prior, n, stream(instance.master_seed, instance.sample_index, "mcmc", 1 + ch))
                  for ch in range(cfg.chains)])
    F = X @ H.Y
    S2 = (X * X).sum(axis=1)
    total_updates = (cfg.sweeps - cfg.burn_in) * n
    n_rec = total_updates // cfg.thinning + 1
    if n_rec - 1 < MIN_BATCHES:
        raise ValueError(f"only {n_rec - 1} recorded samples; need at least {MIN_BATCHES}")
    n_pairs = cfg.chains * (cfg.chains - 1) // 2
    rec_r1s = np.zeros((n_rec, cfg.chains))
    rec_mag = np.zeros((n_rec, cfg.chains))
    rec_r12 = np.zeros((n_rec, max(n_pairs, 1)))
    rng = stream(instance.master_seed, instance.sample_index, "mcmc", 0)
    spike = np.ascontiguousarray(instance.spike, dtype=float)
    pos, counter = 0, 0
    done = 0
    while done < cfg.sweeps:
        k = min(_BLOCK, cfg.sweeps - done)
        U = rng.random((k, n, cfg.chains))
        record = np.arange(done, done + k) >= cfg.burn_in
        pos, counter = _sweeps(X, F, S2, H.Y, H.values, H.logw, H.c, H.pen, H.hs, H.gs, U,
                               spike, cfg.thinning, record, counter,
                               rec_r1s, rec_r12, rec_mag, pos)
        done += k
    r1s = rec_r1s[:pos].mean(axis=1)
    r1s_sq = (rec_r1s[:pos] ** 2).mean(axis=1)
    abs_r1s = np.abs(rec_r1s[:pos]).mean(axis=1)
    mag = rec_mag[:pos].mean(axis=1)
    if n_pairs:
        r12 = rec_r12[:pos, :n_pairs].mean(axis=1)
        r12_sq = (rec_r12[:pos, :n_pairs] ** 2).mean(axis=1)
    else:
        r12 = r12_sq = np.full(pos, np.nan)
    series = dict(zip(FIELDS, (r1s, r1s_sq, abs_r1s, r12, r12_sq)))
    batches = max(MIN_BATCHES, min(50, pos // 10))
    err = {k: _batch_se(v, batches) for k, v in series.items()}
    err["mean_magnetization"] = _batch_se(mag, batches)
    return OverlapStats(*(float(np.mean(series[k])) for k in FIELDS), "mcmc", n, 1, err,
                        float(mag.mean()))
