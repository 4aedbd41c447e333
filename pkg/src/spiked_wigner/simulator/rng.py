"""Counter-based random streams.

Each sample owns a Philox key ``(master_seed, sample_index)``; independent
roles (spike, planted noise, null noise, side information, MCMC chains) are
separated through the high word of the counter. Results therefore depend
only on ``(master_seed, sample_index, role)`` and not on scheduling.
"""
from __future__ import annotations

import numpy as np

STREAMS = {
    "spike": 1,
    "noise_planted": 2,
    "noise_null": 3,
    "side": 4,
    "mcmc": 5,
}
_MASK64 = (1 << 64) - 1


def stream(master_seed: int, sample_index: int, role: str, sub: int = 0) -> np.random.Generator:
    """Generator for one ``(seed, index, role, sub)`` substream."""
    if role not in STREAMS:
        raise ValueError(f"unknown stream role {role!r}")
    key = np.array([int(master_seed) & _MASK64, int(sample_index) & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, int(sub) & _MASK64, STREAMS[role]], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
