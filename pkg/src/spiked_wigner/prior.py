"""Bounded-support spike priors.

Every prior is a finite list of atoms ``(value, weight)``. Continuous priors
enter only through caller-supplied discretization nodes (``Prior.custom``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

WEIGHT_TOL = 1e-12
MATCH_TOL = 1e-12


@dataclass(frozen=True)
class PriorMoments:
    m1: float
    m2: float
    m3: float
    m4: float


@dataclass(frozen=True)
class Prior:
    """Finite-atom prior on the spike entries.

    ``values`` and ``weights`` are stored as read-only float arrays; zero-weight
    atoms are dropped at construction.
    """

    values: np.ndarray
    weights: np.ndarray
    kind: str = "custom"
    params: tuple = field(default=())

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape or v.size == 0:
            raise ValueError("values and weights must be nonempty and of equal length")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        keep = w > 0
        v, w = v[keep], w[keep]
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        if np.any(np.diff(v) <= MATCH_TOL):
            raise ValueError("duplicate atom values")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    # constructors -----------------------------------------------------------

    @classmethod
    def rademacher(cls) -> "Prior":
        return cls(np.array([-1.0, 1.0]), np.array([0.5, 0.5]), "rademacher")

    @classmethod
    def sparse_rademacher(cls, rho: float) -> "Prior":
        if not 0.0 < rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        a = 1.0 / math.sqrt(rho)
        if rho == 1.0:
            return cls(np.array([-1.0, 1.0]), np.array([0.5, 0.5]), "sparse_rademacher", (rho,))
        return cls(
            np.array([-a, 0.0, a]),
            np.array([rho / 2, 1.0 - rho, rho / 2]),
            "sparse_rademacher",
            (rho,),
        )

    @classmethod
    def two_point(cls, p: float, v_plus: float, v_minus: float) -> "Prior":
        """Mass ``p`` at ``v_plus`` and ``1 - p`` at ``v_minus``."""
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        return cls(np.array([v_plus, v_minus]), np.array([p, 1.0 - p]),
                   "two_point_asymmetric", (p, v_plus, v_minus))

    @classmethod
    def centered_two_point(cls, p: float) -> "Prior":
        """Zero-mean, unit-variance two-point prior with mass ``p`` on the positive atom."""
        return cls.two_point(p, math.sqrt((1 - p) / p), -math.sqrt(p / (1 - p)))

    @classmethod
    def point_mass(cls, v: float) -> "Prior":
        return cls(np.array([v]), np.array([1.0]), "point_mass", (v,))

    @classmethod
    def custom(cls, values, weights, normalize: bool = False) -> "Prior":
        w = np.asarray(weights, dtype=float)
        if normalize:
            w = w / w.sum()
        return cls(np.asarray(values, dtype=float), w, "custom")

    # derived quantities -----------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.values.size)

    @property
    def support_bound(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def moments(self) -> PriorMoments:
        return moments(self)

    def symmetrized(self) -> "Prior":
        """The symmetric part ``(P(A) + P(-A)) / 2``."""
        vals = np.concatenate([self.values, -self.values])
        wts = np.concatenate([self.weights, self.weights]) / 2
        merged: dict[float, float] = {}
        keys: list[float] = []
        for v, w in zip(vals, wts):
            for k in keys:
                if abs(k - v) <= MATCH_TOL:
                    merged[k] += w
                    break
            else:
                keys.append(float(v))
                merged[float(v)] = float(w)
        keys.sort()
        return Prior(np.array(keys), np.array([merged[k] for k in keys]), "custom")

    def weight_at(self, v: float) -> float:
        hit = np.abs(self.values - v) <= MATCH_TOL
        return float(self.weights[hit].sum())

    def is_centered(self, tol: float = 1e-12) -> bool:
        return abs(moments(self).m1) <= tol

    @property
    def tag(self) -> str:
        return format_prior(self)


def moments(prior: Prior) -> PriorMoments:
    v, w = prior.values, prior.weights
    return PriorMoments(*(float(np.dot(w, v ** k)) for k in (1, 2, 3, 4)))


def symmetry_defect(prior: Prior) -> float:
    """Sum over pairs ``{v, -v}`` of ``|P(v) - P(-v)|``; zero iff symmetric."""
    seen: list[float] = []
    total = 0.0
    for v in np.abs(prior.values):
        if any(abs(v - s) <= MATCH_TOL for s in seen):
            continue
        seen.append(float(v))
        total += abs(prior.weight_at(v) - prior.weight_at(-v)) if v > MATCH_TOL else 0.0
    return total


def parse_prior(spec: str) -> Prior:
    """Parse a CLI prior string.

    Accepted forms: ``rademacher``, ``sparse:<rho>``, ``point:<v>``,
    ``twopoint:<p>,<v+>,<v->``, ``custom:<v1>:<w1>,<v2>:<w2>,...``.

    >>> parse_prior("sparse:0.25").moments().m4
    4.0
    """
    spec = spec.strip()
    head, _, rest = spec.partition(":")
    head = head.lower()
    try:
        if head == "rademacher" and not rest:
            return Prior.rademacher()
        if head == "sparse":
            return Prior.sparse_rademacher(float(rest))
        if head == "point":
            return Prior.point_mass(float(rest))
        if head == "twopoint":
            p, vp, vm = (float(s) for s in rest.split(","))
            return Prior.two_point(p, vp, vm)
        if head == "custom":
            pairs = [item.split(":") for item in rest.split(",")]
            values = [float(a) for a, _ in pairs]
            weights = [float(b) for _, b in pairs]
            return Prior.custom(values, weights)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed prior spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown prior spec {spec!r}")


def format_prior(prior: Prior) -> str:
    if prior.kind == "rademacher":
        return "rademacher"
    if prior.kind == "sparse_rademacher":
        return f"sparse:{prior.params[0]:g}"
    if prior.kind == "point_mass":
        return f"point:{prior.params[0]:g}"
    if prior.kind == "two_point_asymmetric":
        return "twopoint:" + ",".join(f"{x:.17g}" for x in prior.params)
    return "custom:" + ",".join(f"{v:.17g}:{w:.17g}" for v, w in zip(prior.values, prior.weights))
