"""Acceptance criteria as callable checks, shared by ``verify`` and the test suite.

Each check returns a :class:`CheckResult` whose ``passed`` flag includes the
runtime budget. Sub-results are kept in ``parts`` so a failure can be traced
to the specific clause that missed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
import time
import warnings

import numpy as np

from .correction import (correction_bundle, delta_rs, eigen_residuals,
                         psi_rs_via_integral, solve_cavity_system)
from .detection import LlrSample, error_rates, gaussian_fit, moment_comparison
from .prior import Prior
from .rs_solver import lambda_c, rho_star
from .scalar_channel import asymmetry_gap
from .simulator import (OBSERVABLES, McmcConfig, aggregate_overlaps, exact_llr, llr_samples,
                        mcmc_posterior, posterior_pair_correlations, sample_instance,
                        tiny_n_expectations)

KL_HALF = 0.0483
VAR_HALF = 0.0966
TYPE2_HALF = 0.438
ERR_NINE = 0.675


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    parts: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        bits = []
        for k, (ok, detail) in self.parts.items():
            bits.append(f"{k}={'ok' if ok else 'MISS'}({detail})")
        return (f"[{flag}] criterion {self.number:>2} {self.name}: "
                f"{'; '.join(bits)}; {self.seconds:.1f}s/{self.budget:.0f}s")


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _finish(number, name, budget, parts, timer) -> CheckResult:
    ok = all(p[0] for p in parts.values()) and timer.seconds < budget
    return CheckResult(number, name, ok, timer.seconds, budget, parts)


@lru_cache(maxsize=32)
def _cached_llr(n: int, lam: float, planted: bool, seed: int, count: int) -> np.ndarray:
    v = llr_samples(n, lam, Prior.rademacher(), planted, seed, count)
    v.setflags(write=False)
    return v


def _sample(n, lam, planted, seed, count) -> LlrSample:
    return LlrSample(_cached_llr(n, lam, planted, seed, count), "planted" if planted else "null",
                     n, lam, "rademacher", seed)


def check_thresholds(quick: bool = False) -> CheckResult:
    parts = {}
    with _Timer() as tm:
        r = lambda_c(Prior.rademacher())
        parts["rademacher"] = (abs(r.lambda_c - 1) <= 1e-6, f"{r.lambda_c:.8f}")
        s3 = lambda_c(Prior.sparse_rademacher(0.3))
        parts["sparse0.3"] = (abs(s3.lambda_c - 1) <= 1e-6, f"{s3.lambda_c:.8f}")
        s05 = lambda_c(Prior.sparse_rademacher(0.05))
        parts["sparse0.05"] = (s05.lambda_c < 1, f"{s05.lambda_c:.6f}")
        rs = rho_star()
        parts["rho_star"] = (abs(rs - 0.092) <= 0.002, f"{rs:.4f} vs 0.092+-0.002")
    return _finish(1, "thresholds", 30, parts, tm)


def check_correction_closed_form(quick: bool = False) -> CheckResult:
    # centered unit-variance priors whose reconstruction threshold is 1
    priors = [Prior.rademacher(), Prior.sparse_rademacher(0.3), Prior.sparse_rademacher(0.5)]
    worst_kl = worst_int = 0.0
    with _Timer() as tm:
        for p in priors:
            for lam in np.round(np.arange(0.1, 0.95, 0.1), 10):
                lam = float(lam)
                target = 0.25 * (-math.log1p(-lam) - lam)
                b = correction_bundle(lam, p)
                worst_kl = max(worst_kl, abs(b.psi_rs - target))
                worst_int = max(worst_int, abs(psi_rs_via_integral(lam, b) - b.psi_rs))
    parts = {"closed_form": (worst_kl <= 1e-9, f"max {worst_kl:.1e}"),
             "integral": (worst_int <= 1e-10, f"max {worst_int:.1e}")}
    return _finish(2, "correction closed form", 5, parts, tm)


CAVITY_GRID = (
    (Prior.rademacher(), (0.5, 1.5, 3.0)),
    (Prior.sparse_rademacher(0.3), (0.5, 1.5)),
    (Prior.centered_two_point(0.3), (0.3, 1.5, 3.0)),
    (Prior.two_point(0.6, 1.0, -0.5), (0.5, 2.0)),
)


def check_cavity_structure(quick: bool = False) -> CheckResult:
    r1 = r2 = r2c = dmax = 0.0
    with _Timer() as tm, warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for prior, lams in CAVITY_GRID:
            for lam in lams:
                b = correction_bundle(lam, prior)
                a, c = eigen_residuals(b, (2.0, -3.0, 2.0))
                r1, r2 = max(r1, a), max(r2, c)
                r2c = max(r2c, eigen_residuals(b)[1])
                for t in (0.0, 0.5, 1.0):
                    if b.valid and t * b.mu1 < 1 and t * b.mu2 < 1:
                        s = solve_cavity_system(lam, t, b)
                        dmax = max(dmax, abs(delta_rs(lam, t, b) - s["elimination"][0]),
                                   abs(delta_rs(lam, t, b) - s["closed_form"][0]))
    parts = {"v1=(1,-2,1)": (r1 < 1e-10, f"{r1:.1e}"),
             "v2=(2,-3,2)": (r2 < 1e-10, f"{r2:.1e}"),
             "v2=(1,-3,2)": (r2c < 1e-10, f"{r2c:.1e}"),
             "delta=c0": (dmax <= 1e-9, f"{dmax:.1e}")}
    return _finish(3, "cavity structure", 10, parts, tm)


def check_cavity_corrected() -> tuple[bool, float]:
    """Eigen-pair check with the corrected ``mu2`` left eigenvector only."""
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for prior, lams in CAVITY_GRID:
            for lam in lams:
                b = correction_bundle(lam, prior)
                worst = max(worst, *eigen_residuals(b))
    return worst < 1e-10, worst


def check_exact_llr(quick: bool = False) -> CheckResult:
    priors = [Prior.rademacher(), Prior.sparse_rademacher(0.3), Prior.centered_two_point(0.3)]
    sizes = (8, 12) if quick else (8, 12, 14)
    count = 30 if quick else 100
    rng = np.random.default_rng(2024)
    gray = sk = 0.0
    with _Timer() as tm:
        for k in range(count):
            prior = priors[k % 3]
            n = sizes[(k // 3) % len(sizes)]
            lam = float(rng.uniform(0.1, 2.0))
            inst = sample_instance(n, lam, prior, bool(k % 2 == 0), 99, k)
            g = exact_llr(inst, prior, "gray_code").log_l
            gray = max(gray, abs(g - exact_llr(inst, prior, "naive").log_l))
            if prior.kind == "rademacher":
                sk = max(sk, abs(g - exact_llr(inst, prior, "sk_reduction").log_l))
        two = 0.0
        for k in range(50):
            lam = float(rng.uniform(0.0, 3.0))
            inst = sample_instance(2, lam, Prior.rademacher(), True, 98, k)
            y = float(inst.y_upper[0])
            ref = -lam / 4 + math.log(math.cosh(math.sqrt(lam / 2) * y))
            for m in ("naive", "gray_code", "sk_reduction"):
                two = max(two, abs(exact_llr(inst, Prior.rademacher(), m).log_l - ref))
    parts = {"gray_vs_naive": (gray < 1e-10, f"{gray:.1e} over {count}"),
             "sk_vs_gray": (sk < 1e-10, f"{sk:.1e}"),
             "n2_closed_form": (two < 1e-12, f"{two:.1e}")}
    return _finish(4, "exact LLR", 120, parts, tm)


def check_kl(quick: bool = False) -> CheckResult:
    count = 2000 if quick else 20000
    with _Timer() as tm:
        s = _sample(16, 0.5, True, 501, count)
        m = float(s.values.mean())
        se = float(s.values.std(ddof=1) / math.sqrt(s.count))
        tol = 3 * se + 0.02
    parts = {"mean_logL": (abs(m - KL_HALF) <= tol, f"{m:.4f} vs {KL_HALF}+-{tol:.4f}")}
    return _finish(5, "KL at finite N", 300, parts, tm)


def check_clt(quick: bool = False) -> CheckResult:
    count = 1000 if quick else 10000
    with _Timer() as tm:
        fp = gaussian_fit(_sample(20, 0.5, True, 601, count))
        fn = gaussian_fit(_sample(20, 0.5, False, 601, count))
    parts = {
        "planted_mean": (abs(fp.mean_hat - KL_HALF) <= 0.02, f"{fp.mean_hat:.4f}"),
        "planted_var": (abs(fp.var_hat - VAR_HALF) <= 0.04, f"{fp.var_hat:.4f}"),
        "planted_ks": (fp.ks_distance <= 0.05, f"{fp.ks_distance:.4f}"),
        "null_mean": (abs(fn.mean_hat + KL_HALF) <= 0.02, f"{fn.mean_hat:.4f}"),
        "null_var": (abs(fn.var_hat - VAR_HALF) <= 0.04, f"{fn.var_hat:.4f}"),
        "null_ks": (fn.ks_distance <= 0.05, f"{fn.ks_distance:.4f}"),
    }
    return _finish(6, "CLT both models", 600, parts, tm)


def check_detection_errors(quick: bool = False) -> CheckResult:
    count = 1000 if quick else 10000
    with _Timer() as tm:
        half = error_rates(_sample(20, 0.5, True, 601, count), _sample(20, 0.5, False, 601, count))
        nine = error_rates(_sample(20, 0.9, True, 701, count), _sample(20, 0.9, False, 701, count))
    parts = {"type2@0.5": (abs(half.type2_hat - TYPE2_HALF) <= 0.02, f"{half.type2_hat:.4f}"),
             "err@0.9": (abs(nine.err_hat - ERR_NINE) <= 0.03, f"{nine.err_hat:.4f}")}
    return _finish(7, "detection errors", 600, parts, tm)


def check_overlap_variance(quick: bool = False) -> CheckResult:
    prior = Prior.rademacher()
    n_exact = 100 if quick else 1000
    n_mcmc = 40 if quick else 600
    with _Timer() as tm:
        ex = aggregate_overlaps([posterior_pair_correlations(sample_instance(16, 0.5, prior, True, 801, k), prior)
                                 for k in range(n_exact)])
        cfg = McmcConfig(sweeps=250, burn_in=50, thinning=300, chains=2)
        mc = aggregate_overlaps([mcmc_posterior(sample_instance(300, 0.5, prior, True, 802, k), prior, cfg)
                                 for k in range(n_mcmc)])
        e_val, e_err = ex.scaled_r1s_sq()
        m_val, m_err = mc.scaled_r1s_sq()
    parts = {"exact_n16": (abs(e_val - 2.0) <= 0.5, f"{e_val:.3f}+-{e_err:.3f}"),
             "mcmc_n300": (abs(m_val - 2.0) <= 0.2, f"{m_val:.3f}+-{m_err:.3f}")}
    return _finish(8, "overlap variance", 900, parts, tm)


def check_nishimori(quick: bool = False) -> CheckResult:
    worst = worst_sq = 0.0
    with _Timer() as tm:
        for prior in (Prior.centered_two_point(0.3), Prior.sparse_rademacher(0.3)):
            for lam in (0.7, 2.0):
                names = ("E_gibbs_R12", "E_gibbs_R1s") if quick else OBSERVABLES[:4]
                e = tiny_n_expectations(3, lam, prior, names)
                worst = max(worst, abs(e["E_gibbs_R12"] - e["E_gibbs_R1s"]))
                if not quick:
                    worst_sq = max(worst_sq, abs(e["E_gibbs_R12_sq"] - e["E_gibbs_R1s_sq"]))
    parts = {"first_moment": (worst <= 1e-6, f"{worst:.1e}"),
             "second_moment": (worst_sq <= 1e-6, f"{worst_sq:.1e}")}
    return _finish(9, "Nishimori exactness", 60, parts, tm)


def check_asymmetry_gap(quick: bool = False) -> CheckResult:
    asym = Prior.centered_two_point(0.3)
    with _Timer() as tm:
        g5, lb5 = asymmetry_gap(0.5, asym)
        g1, lb1 = asymmetry_gap(1.0, asym)
        gr, lbr = asymmetry_gap(1.0, Prior.rademacher())
        gr5, lbr5 = asymmetry_gap(0.5, Prior.rademacher())
    parts = {
        "gap>=bound": (g5 >= lb5 - 1e-9 and g1 >= lb1 - 1e-9, f"{g5:.3e}>={lb5:.3e}, {g1:.3e}>={lb1:.3e}"),
        "strict": (lb5 > 0 and lb1 > 0 and g5 > 0 and g1 > 0, "asymmetric prior"),
        "rademacher_zero": (max(abs(gr), abs(lbr), abs(gr5), abs(lbr5)) <= 1e-10,
                            f"{max(abs(gr), abs(gr5)):.1e}"),
        "increasing": (lb1 > lb5, f"{lb5:.3e}<{lb1:.3e}"),
    }
    return _finish(10, "appendix gap", 10, parts, tm)


MOMENT_SIGMAS = 2.0


def check_moments(quick: bool = False) -> CheckResult:
    count = 500 if quick else 5000
    parts = {}
    with _Timer() as tm:
        small = moment_comparison(_sample(12, 0.5, True, 1101, count), k_max=4, seed=1)
        large = moment_comparison(_sample(24, 0.5, True, 1102, count), k_max=4, seed=2)
        for rs, rl in zip(small[1:], large[1:]):
            margin = MOMENT_SIGMAS * math.hypot(rs.boot_se, rl.boot_se)
            ok = rs.gap - rl.gap > margin
            parts[f"k={rs.k}"] = (ok, f"{rs.gap:.4f}->{rl.gap:.4f} (need drop>{margin:.4f})")
    return _finish(11, "moment convergence", 900, parts, tm)


CHECKS = {
    1: check_thresholds,
    2: check_correction_closed_form,
    3: check_cavity_structure,
    4: check_exact_llr,
    5: check_kl,
    6: check_clt,
    7: check_detection_errors,
    8: check_overlap_variance,
    9: check_nishimori,
    10: check_asymmetry_gap,
    11: check_moments,
}
QUICK = (1, 2, 3, 4, 9, 10)


def run_checks(numbers=None, quick: bool = False) -> list[CheckResult]:
    numbers = (QUICK if quick else tuple(CHECKS)) if numbers is None else tuple(numbers)
    return [CHECKS[k](quick=quick) for k in numbers]
