"""Overlap statistics shared by the exact and Monte Carlo estimators."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..prior import Prior
from .enumeration import PAIR_CAP, posterior_moments
from .instance import Instance

FIELDS = ("mean_r1s", "mean_r1s_sq", "mean_abs_r1s", "mean_r12", "mean_r12_sq")


@dataclass(frozen=True)
class OverlapStats:
    """Gibbs averages of the overlaps ``R_{1,*}`` and ``R_{1,2}``.

    For a single instance the values are ``<.>`` at fixed data and the error
    bars are Monte Carlo errors (zero for exact enumeration). After
    :func:`aggregate_overlaps` they are averages over instances with
    standard errors across instances.
    """

    mean_r1s: float
    mean_r1s_sq: float
    mean_abs_r1s: float
    mean_r12: float
    mean_r12_sq: float
    estimator: str
    n: int
    count: int = 1
    error_bars: dict = field(default_factory=dict)
    mean_magnetization: float = float("nan")

    def scaled_r1s_sq(self) -> tuple[float, float]:
        """``n <R_{1,*}^2>`` and its error bar."""
        return self.n * self.mean_r1s_sq, self.n * self.error_bars.get("mean_r1s_sq", 0.0)


def posterior_pair_correlations(instance: Instance, prior: Prior, cap: int = PAIR_CAP) -> OverlapStats:
    """Exact overlap averages from enumerated single-site and pair correlations."""
    pm = posterior_moments(instance, prior, cap)
    return OverlapStats(pm.r1s, pm.r1s_sq, pm.abs_r1s, pm.r12, pm.r12_sq,
                        "exact_pair_correlations", instance.n, 1,
                        {k: 0.0 for k in FIELDS}, float(np.mean(pm.mean)))


def aggregate_overlaps(stats: list[OverlapStats]) -> OverlapStats:
    """Average over instances; error bars are standard errors across instances."""
    if not stats:
        raise ValueError("no statistics to aggregate")
    ns = {s.n for s in stats}
    if len(ns) != 1:
        raise ValueError("instances of different sizes")
    k = len(stats)
    out = {}
    err = {}
    for name in FIELDS + ("mean_magnetization",):
        vals = np.array([getattr(s, name) for s in stats], dtype=float)
        out[name] = float(vals.mean())
        err[name] = float(vals.std(ddof=1) / np.sqrt(k)) if k > 1 else float("nan")
    return replace(stats[0], count=k, error_bars=err, **out)
