"""Population expectations at ``n <= 3`` by tensor Gauss-Hermite quadrature.

Every noise entry gets its own quadrature axis and every spike
configuration is summed exactly, so the only error is the quadrature error.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import logsumexp

from ..prior import Prior
from ..scalar_channel import gauss_hermite

OBSERVABLES = ("E_gibbs_R12", "E_gibbs_R1s", "E_gibbs_R12_sq", "E_gibbs_R1s_sq",
               "E_logL_planted", "E_logL_null")


def tiny_n_expectation_oracle(n: int, lam: float, prior: Prior, observable: str,
                              order: int = 60) -> float:
    return tiny_n_expectations(n, lam, prior, (observable,), order)[observable]


def tiny_n_expectations(n: int, lam: float, prior: Prior, observables=OBSERVABLES,
                        order: int = 60) -> dict[str, float]:
    """Several oracle observables from one pass over the quadrature nodes."""
    if n not in (2, 3):
        raise ValueError("the quadrature oracle supports n in {2, 3} only")
    for name in observables:
        if name not in OBSERVABLES:
            raise ValueError(f"unknown observable {name!r}")
    out = {name: 0.0 for name in observables}
    if lam == 0.0:
        observables = [o for o in observables if not o.startswith("E_logL")]
    quad = gauss_hermite(order)
    iu = np.triu_indices(n, 1)
    m = iu[0].size
    grids = np.meshgrid(*([quad.z_nodes] * m), indexing="ij")
    W = np.stack([g.ravel() for g in grids], axis=1)  # (G, m)
    wq = np.ones(W.shape[0])
    for g in np.meshgrid(*([quad.z_weights] * m), indexing="ij"):
        wq = wq * g.ravel()
    idx = np.array(list(itertools.product(range(prior.size), repeat=n)))
    X = prior.values[idx]  # (C, n)
    logp = prior.log_weights[idx].sum(axis=1)
    pair = X[:, iu[0]] * X[:, iu[1]]  # (C, m)
    c = math.sqrt(lam / n)
    pen = lam / (2 * n) * (pair * pair).sum(axis=1)
    outer = (X[:, :, None] * X[:, None, :]).reshape(X.shape[0], n * n)

    def log_weights(Ymat):
        # posterior log-weights (G, C) for observations (G, m)
        return c * Ymat @ pair.T - pen[None, :] + logp[None, :]

    if "E_logL_null" in observables:
        out["E_logL_null"] = float(wq @ logsumexp(log_weights(W), axis=1))
    planted = [o for o in observables if o != "E_logL_null"]
    if not planted:
        return out

    for cstar in range(idx.shape[0]):
        pstar = math.exp(logp[cstar])
        E = log_weights(W + c * pair[cstar][None, :])
        top = E.max(axis=1)
        post = np.exp(E - top[:, None])
        z = post.sum(axis=1)
        post /= z[:, None]
        mean = post @ X if ("E_gibbs_R12" in planted or "E_gibbs_R1s" in planted) else None
        for name in planted:
            if name == "E_logL_planted":
                val = top + np.log(z)
            elif name == "E_gibbs_R1s":
                val = mean @ X[cstar] / n
            elif name == "E_gibbs_R12":
                val = (mean * mean).sum(axis=1) / n
            elif name == "E_gibbs_R1s_sq":
                val = post @ (X @ X[cstar]) ** 2 / n ** 2
            else:
                # <x_i x_j> on every node, shape (G, n * n)
                corr = post @ outer
                val = (corr * corr).sum(axis=1) / n ** 2
            out[name] += pstar * float(wq @ val)
    return out
