"""Empirical verdicts on the LLR limit theorems from exact samples."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np
from scipy import stats

from .correction import CltParams, clt_params, detection_formulas

MODELS = ("planted", "null")


class ModelMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LlrSample:
    values: np.ndarray
    model: str
    n: int
    lam: float
    prior_tag: str
    master_seed: int = 0
    start_index: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if v.size < 2 or not np.all(np.isfinite(v)):
            raise ValueError("need at least two finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return int(self.values.size)


def _require(samples: LlrSample, model: str) -> None:
    if samples.model != model:
        raise ModelMismatch(f"expected {model} samples, got {samples.model}")


def estimate_kl(samples: LlrSample, model: str = "planted") -> tuple[float, float]:
    """Sample mean of ``log L`` and its standard error.

    On planted samples this estimates the KL divergence of the planted law
    from the null; pass ``model="null"`` to estimate minus the reverse
    divergence from null samples.
    """
    _require(samples, model)
    v = samples.values
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


@dataclass(frozen=True)
class GaussianFit:
    mean_hat: float
    var_hat: float
    ks_distance: float
    ks_pvalue: float
    target_mean: float
    target_var: float
    conjectural: bool


def _ks_degenerate(v: np.ndarray, loc: float) -> float:
    """KS distance to the point mass at ``loc``."""
    below = float(np.mean(v < loc))
    at_or_below = float(np.mean(v <= loc))
    return max(below, 1.0 - at_or_below)


def ks_distance(values, loc: float, var: float) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value against ``N(loc, var)``."""
    v = np.asarray(values, dtype=float)
    if var <= 0:
        return _ks_degenerate(v, loc), float("nan")
    res = stats.kstest(v, "norm", args=(loc, math.sqrt(var)))
    return float(res.statistic), float(res.pvalue)


def ks_critical(count: int, alpha: float = 0.01) -> float:
    """``1 - alpha`` quantile of the KS statistic for ``count`` samples."""
    return float(stats.kstwo.ppf(1 - alpha, count))


def gaussian_fit(samples: LlrSample, lambda_c: float = 1.0, prior_kind: str = "rademacher") -> GaussianFit:
    """Compare samples with ``N(+-mu, 2 mu)``; the sign follows the model."""
    lam = samples.lam
    if lam >= lambda_c or lam >= 1.0:
        raise ValueError(f"lambda={lam} is not below the reconstruction threshold {lambda_c}")
    p = clt_params(lam)
    loc = p.mu if samples.model == "planted" else -p.mu
    v = samples.values
    d, pv = ks_distance(v, loc, p.sigma2)
    conj = samples.model == "null" and prior_kind != "rademacher"
    return GaussianFit(float(v.mean()), float(v.var(ddof=1)), d, pv, loc, p.sigma2, conj)


@dataclass(frozen=True)
class ErrorRates:
    type1_hat: float
    type2_hat: float
    err_hat: float
    tv_hat: float
    type1_stderr: float
    type2_stderr: float
    err_stderr: float


def _binom_se(p: float, k: int) -> float:
    return math.sqrt(p * (1 - p) / k)


def error_rates(planted: LlrSample, null: LlrSample) -> ErrorRates:
    """Errors of the likelihood-ratio test that rejects the null when ``log L > 0``."""
    _require(planted, "planted")
    _require(null, "null")
    if (planted.n, planted.lam, planted.prior_tag) != (null.n, null.lam, null.prior_tag):
        raise ModelMismatch("planted and null samples have different (n, lambda, prior)")
    type2 = float(np.mean(planted.values <= 0.0))
    type1 = float(np.mean(null.values > 0.0))
    err = type1 + type2
    s1 = _binom_se(type1, null.count)
    s2 = _binom_se(type2, planted.count)
    return ErrorRates(type1, type2, err, 1.0 - err, s1, s2, math.hypot(s1, s2))


def gaussian_moment(k: int) -> float:
    """``E g^k`` for a standard normal ``g``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k % 2:
        return 0.0
    return float(np.prod(np.arange(k - 1, 0, -2))) if k else 1.0


@dataclass(frozen=True)
class MomentRow:
    k: int
    empirical: float
    target: float
    gap: float
    boot_se: float


def moment_comparison(samples: LlrSample, k_max: int = 4, n_boot: int = 1000,
                      seed: int = 0) -> list[MomentRow]:
    """Centered moments of ``log L - mu`` against ``m(k) (2 mu)^{k/2}``.

    ``boot_se`` is the bootstrap standard error of ``|empirical - target|``.
    """
    _require(samples, "planted")
    if not 1 <= k_max <= 6:
        raise ValueError("k_max must lie in 1..6")
    mu = clt_params(samples.lam).mu
    x = samples.values - mu
    rng = np.random.default_rng(seed)
    boot_idx = rng.integers(0, x.size, size=(n_boot, x.size))
    rows = []
    for k in range(1, k_max + 1):
        target = gaussian_moment(k) * (2 * mu) ** (k / 2)
        emp = float(np.mean(x ** k))
        boot = np.abs(np.mean(x[boot_idx] ** k, axis=1) - target)
        rows.append(MomentRow(k, emp, target, abs(emp - target), float(boot.std(ddof=1))))
    return rows


@dataclass
class DetectionReport:
    n: int
    lam: float
    prior_tag: str
    samples_planted: int
    samples_null: int
    kl_hat: float
    kl_stderr: float
    mean_hat: float
    var_hat: float
    ks_distance: float
    null_mean_hat: float
    null_var_hat: float
    null_ks_distance: float
    predicted: CltParams | None
    type1_hat: float
    type2_hat: float
    err_hat: float
    tv_hat: float
    type1_stderr: float
    type2_stderr: float
    err_stderr: float
    predicted_err_star: float | None
    moment_table: list = field(default_factory=list)
    conjecture_flag: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["moment_table"] = [asdict(r) if not isinstance(r, dict) else r for r in self.moment_table]
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def build_report(planted: LlrSample, null: LlrSample, prior_kind: str = "rademacher",
                 lambda_c: float = 1.0, k_max: int = 4, seed: int = 0) -> DetectionReport:
    """Assemble every statistic; Gaussian targets are filled in only below threshold."""
    kl, kl_se = estimate_kl(planted)
    er = error_rates(planted, null)
    below = planted.lam < min(lambda_c, 1.0)
    conj = prior_kind != "rademacher"
    if below:
        fit_p = gaussian_fit(planted, lambda_c, prior_kind)
        fit_n = gaussian_fit(null, lambda_c, prior_kind)
        pred = clt_params(planted.lam)
        err_star = detection_formulas(planted.lam).err_star
        table = moment_comparison(planted, k_max=k_max, seed=seed)
        ksp, ksn = fit_p.ks_distance, fit_n.ks_distance
    else:
        pred, err_star, table = None, None, []
        ksp = ksn = float("nan")
    vp = planted.values
    vn = null.values
    return DetectionReport(
        planted.n, planted.lam, planted.prior_tag, planted.count, null.count,
        kl, kl_se, float(vp.mean()), float(vp.var(ddof=1)), ksp,
        float(vn.mean()), float(vn.var(ddof=1)), ksn, pred,
        er.type1_hat, er.type2_hat, er.err_hat, er.tv_hat,
        er.type1_stderr, er.type2_stderr, er.err_stderr, err_star, table, conj)
