"""Exact log-likelihood ratios over many independent instances."""
from __future__ import annotations

import numpy as np

from ..prior import Prior
from .enumeration import DEFAULT_CAP, exact_llr
from .instance import sample_instance


def llr_samples(n: int, lam: float, prior: Prior, planted: bool, master_seed: int,
                count: int, start: int = 0, method: str = "auto", cap: int = DEFAULT_CAP) -> np.ndarray:
    """``log L`` for sample indices ``start, ..., start + count - 1``."""
    out = np.empty(count)
    for k in range(count):
        inst = sample_instance(n, lam, prior, planted, master_seed, start + k)
        out[k] = exact_llr(inst, prior, method=method, cap=cap).log_l
    return out
