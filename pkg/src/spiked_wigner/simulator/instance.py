"""Sampled observations of the spiked Wigner model."""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..prior import Prior
from .rng import stream


@dataclass(frozen=True)
class Instance:
    """One observation ``Y`` (strict upper triangle, row-major ``i < j``).

    ``t``, ``side_r`` and ``y_side`` describe the interpolated model in which
    ``Y`` carries signal strength ``t * lam`` and every coordinate is also
    observed through ``y_i = sqrt((1 - t) side_r) x*_i + z_i``. The plain model
    has ``t = 1`` and no side observations.
    """

    n: int
    lam: float
    y_upper: np.ndarray
    spike: np.ndarray | None
    master_seed: int
    sample_index: int
    t: float = 1.0
    side_r: float = 0.0
    y_side: np.ndarray | None = None

    @property
    def planted(self) -> bool:
        return self.spike is not None

    def matrix(self) -> np.ndarray:
        """Symmetric ``n x n`` matrix with zero diagonal."""
        Y = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        Y[iu] = self.y_upper
        return Y + Y.T

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        same_arr = (lambda a, b: (a is None and b is None)
                    or (a is not None and b is not None and np.array_equal(a, b)))
        return (self.n == other.n and self.lam == other.lam
                and self.master_seed == other.master_seed
                and self.sample_index == other.sample_index
                and self.t == other.t and self.side_r == other.side_r
                and np.array_equal(self.y_upper, other.y_upper)
                and same_arr(self.spike, other.spike) and same_arr(self.y_side, other.y_side))

    __hash__ = None


def draw_spike(prior: Prior, n: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(prior.size, size=n, p=prior.weights)
    return prior.values[idx].copy()


def sample_instance(n: int, lam: float, prior: Prior, planted: bool, master_seed: int,
                    sample_index: int, t: float = 1.0, side_r: float | None = None,
                    noise: bool = True) -> Instance:
    """Draw ``Y = sqrt(t lam / n) x* x*^T + W`` above the diagonal.

    ``noise=False`` zeroes ``W`` (test hook). For ``t < 1`` the side channel
    strength defaults to ``lam * q*(lam)``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    m = n * (n - 1) // 2
    role = "noise_planted" if planted else "noise_null"
    w = stream(master_seed, sample_index, role).standard_normal(m) if noise else np.zeros(m)
    spike = None
    y = w
    if planted:
        spike = draw_spike(prior, n, stream(master_seed, sample_index, "spike"))
        iu = np.triu_indices(n, 1)
        y = math.sqrt(t * lam / n) * spike[iu[0]] * spike[iu[1]] + w
    y_side = None
    r = 0.0
    if t < 1.0:
        if side_r is None:
            from ..rs_solver import solve_qstar
            side_r = lam * solve_qstar(lam, prior).qstar
        r = float(side_r)
        z = stream(master_seed, sample_index, "side").standard_normal(n) if noise else np.zeros(n)
        signal = spike if planted else np.zeros(n)
        y_side = math.sqrt((1 - t) * r) * signal + z
    y.setflags(write=False)
    return Instance(int(n), float(lam), y, spike, int(master_seed), int(sample_index),
                    float(t), r, y_side)
