import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from spiked_wigner.correction import clt_params, detection_formulas
from spiked_wigner.detection import (LlrSample, ModelMismatch, build_report, error_rates,
                                     estimate_kl, gaussian_fit, gaussian_moment, ks_critical,
                                     ks_distance, moment_comparison)
from spiked_wigner.io import report_schema
from spiked_wigner.prior import Prior
from spiked_wigner.simulator import llr_samples


def sample(values, model="planted", n=10, lam=0.5, tag="rademacher"):
    return LlrSample(np.asarray(values, dtype=float), model, n, lam, tag)


@pytest.fixture(scope="module")
def small_runs():
    p = Prior.rademacher()
    planted = sample(llr_samples(10, 0.5, p, True, 77, 1500), "planted")
    null = sample(llr_samples(10, 0.5, p, False, 77, 1500), "null")
    return planted, null


def test_sample_validation():
    with pytest.raises(ValueError):
        sample([1.0, np.nan])
    with pytest.raises(ValueError):
        sample([1.0])
    with pytest.raises(ValueError):
        sample([1.0, 2.0], model="other")
    s = sample([1.0, 2.0])
    assert s.count == 2
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_kl_lambda_zero_exact():
    p = Prior.sparse_rademacher(0.3)
    s = sample(llr_samples(8, 0.0, p, True, 1, 50), lam=0.0)
    kl, se = estimate_kl(s)
    assert kl == 0.0 and se == 0.0


def test_kl_model_mismatch():
    with pytest.raises(ModelMismatch):
        estimate_kl(sample([0.1, 0.2], "null"))
    assert estimate_kl(sample([0.1, 0.3], "null"), model="null")[0] == pytest.approx(0.2)


def test_kl_signs(small_runs):
    planted, null = small_runs
    assert estimate_kl(planted)[0] > 0
    assert estimate_kl(null, model="null")[0] < 0


def test_kl_matches_mean_and_stderr():
    v = np.array([0.1, 0.5, -0.2, 0.3])
    kl, se = estimate_kl(sample(v))
    assert kl == pytest.approx(v.mean())
    assert se == pytest.approx(stats.sem(v))


def test_ks_point_mass():
    d, _ = ks_distance(np.zeros(100), 0.0, 0.0966)
    assert d >= 0.5
    d, _ = ks_distance(np.zeros(100), 0.0, 0.0)
    assert d == 0.0
    d, _ = ks_distance(np.full(10, 1.0), 0.0, 0.0)
    assert d == 1.0


def test_ks_matches_scipy():
    rng = np.random.default_rng(0)
    v = rng.normal(0.1, 0.4, 500)
    d, p = ks_distance(v, 0.1, 0.16)
    ref = stats.kstest(v, "norm", args=(0.1, 0.4))
    assert (d, p) == pytest.approx((ref.statistic, ref.pvalue))


def test_ks_self_calibration():
    # exact Gaussian draws must land below the 1% critical value almost always
    rng = np.random.default_rng(3)
    c = clt_params(0.5)
    crit = ks_critical(10000)
    hits = sum(ks_distance(rng.normal(c.mu, math.sqrt(c.sigma2), 10000), c.mu, c.sigma2)[0] > crit
               for _ in range(50))
    assert hits <= 3
    assert 0.015 < crit < 0.017


def test_gaussian_fit_refuses_above_threshold():
    with pytest.raises(ValueError):
        gaussian_fit(sample([0.1, 0.2], lam=1.2))
    with pytest.raises(ValueError):
        gaussian_fit(sample([0.1, 0.2], lam=0.6), lambda_c=0.5)


def test_gaussian_fit_targets(small_runs):
    planted, null = small_runs
    fp = gaussian_fit(planted)
    fn = gaussian_fit(null, prior_kind="sparse_rademacher")
    c = clt_params(0.5)
    assert fp.target_mean == c.mu and fn.target_mean == -c.mu
    assert fp.target_var == fn.target_var == c.sigma2
    assert not fp.conjectural and fn.conjectural
    assert fp.mean_hat == pytest.approx(c.mu, abs=0.03)


def test_error_rates_lambda_zero():
    z = np.zeros(20)
    er = error_rates(sample(z, lam=0.0), sample(z, "null", lam=0.0))
    assert er.type2_hat == 1.0 and er.type1_hat == 0.0
    assert er.err_hat == 1.0 and er.tv_hat == 0.0


def test_error_rates_counting():
    er = error_rates(sample([-1.0, 0.0, 1.0, 2.0]), sample([-1.0, 0.5, -2.0, -3.0], "null"))
    assert er.type2_hat == 0.5
    assert er.type1_hat == 0.25
    assert er.err_stderr == pytest.approx(math.hypot(math.sqrt(0.25 * 0.75 / 4), 0.25))


def test_error_rates_mismatch():
    with pytest.raises(ModelMismatch):
        error_rates(sample([0.1, 0.2]), sample([0.1, 0.2], "null", n=11))
    with pytest.raises(ModelMismatch):
        error_rates(sample([0.1, 0.2], "null"), sample([0.1, 0.2], "null"))


@pytest.mark.slow
def test_err_hat_monotone_in_lambda():
    p = Prior.rademacher()
    errs = []
    for lam in (0.0, 0.1, 0.2):
        pl = sample(llr_samples(12, lam, p, True, 91, 4000), lam=lam, n=12)
        nu = sample(llr_samples(12, lam, p, False, 91, 4000), "null", lam=lam, n=12)
        errs.append(error_rates(pl, nu))
    for a, b in zip(errs, errs[1:]):
        assert b.err_hat <= a.err_hat + 2 * math.hypot(a.err_stderr, b.err_stderr)


def test_gaussian_moments():
    assert [gaussian_moment(k) for k in range(7)] == [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]
    with pytest.raises(ValueError):
        gaussian_moment(-1)


def test_moment_targets():
    rows = moment_comparison(sample(np.linspace(-1, 1, 50)), k_max=4, n_boot=50)
    assert rows[0].target == 0.0
    assert rows[1].target == pytest.approx(0.0965736, abs=1e-7)
    assert rows[2].target == 0.0
    assert rows[3].target == pytest.approx(3 * 0.0965736 ** 2, abs=1e-7)
    with pytest.raises(ValueError):
        moment_comparison(sample([0.0, 1.0]), k_max=7)
    with pytest.raises(ModelMismatch):
        moment_comparison(sample([0.0, 1.0], "null"))


def test_moments_of_exact_gaussian_are_close():
    rng = np.random.default_rng(5)
    c = clt_params(0.5)
    rows = moment_comparison(sample(rng.normal(c.mu, math.sqrt(c.sigma2), 20000)), n_boot=200)
    for r in rows:
        assert r.gap < 4 * r.boot_se + 1e-3


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=40))
def test_error_rates_in_unit_interval(vals):
    er = error_rates(sample(vals), sample(vals, "null"))
    assert 0 <= er.type1_hat <= 1 and 0 <= er.type2_hat <= 1
    # same data used twice: every point is counted exactly once
    assert er.err_hat == pytest.approx(1.0)


def test_report_schema_and_json(small_runs):
    planted, null = small_runs
    rep = build_report(planted, null, seed=1)
    d = json.loads(rep.to_json())
    jsonschema.validate(d, report_schema())
    assert d["predicted"]["sigma2"] == pytest.approx(2 * d["predicted"]["mu"])
    assert d["predicted_err_star"] == pytest.approx(detection_formulas(0.5).err_star)
    assert len(d["moment_table"]) == 4
    assert d["samples_planted"] == d["samples_null"] == 1500


def test_report_above_threshold_has_nulls():
    p = Prior.rademacher()
    pl = sample(llr_samples(8, 1.5, p, True, 3, 40), lam=1.5, n=8)
    nu = sample(llr_samples(8, 1.5, p, False, 3, 40), "null", lam=1.5, n=8)
    d = json.loads(build_report(pl, nu).to_json())
    jsonschema.validate(d, report_schema())
    assert d["predicted"] is None and d["ks_distance"] is None and d["moment_table"] == []


def test_schema_rejects_missing_field(small_runs):
    d = json.loads(build_report(*small_runs).to_json())
    del d["kl_hat"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(d, report_schema())
