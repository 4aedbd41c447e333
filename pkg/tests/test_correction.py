import math
import warnings

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from spiked_wigner.correction import (DomainError, cavity_matrix, clt_params, correction_bundle,
                                      delta_rs, detection_formulas, eigen_residuals,
                                      inject_fault, psi_rs_via_integral, solve_cavity_system)
from spiked_wigner.prior import Prior
from spiked_wigner.rs_solver import lambda_c, solve_qstar

mpmath.mp.dps = 40


def kl_oracle(lam):
    return float((-mpmath.log(1 - mpmath.mpf(lam)) - lam) / 4)


def erfc_oracle(x):
    return float(mpmath.erfc(mpmath.mpf(x)))


SYM = sympy.symbols("lam a0 a1 a2")


def symbolic_matrix():
    lam, a0, a1, a2 = SYM
    return lam * sympy.Matrix([[a0, -2 * a1, a2],
                               [a1, a0 - a1 - 2 * a2, -2 * a1 + 3 * a2],
                               [a2, 4 * a1 - 6 * a2, a0 - 6 * a1 + 6 * a2]])


def test_numeric_matrix_matches_symbolic():
    vals = dict(zip(SYM, (1.3, 0.7, 0.4, 0.25)))
    ref = np.array(symbolic_matrix().subs(vals).evalf(), dtype=float)
    np.testing.assert_allclose(cavity_matrix(1.3, 0.7, 0.4, 0.25), ref, atol=1e-15)


def test_left_eigenvectors_symbolic():
    lam, a0, a1, a2 = SYM
    At = symbolic_matrix().T
    mu1 = lam * (a0 - 2 * a1 + a2)
    mu2 = lam * (a0 - 3 * a1 + 2 * a2)
    v1 = sympy.Matrix([1, -2, 1])
    v2 = sympy.Matrix([1, -3, 2])
    assert sympy.simplify(At * v1 - mu1 * v1) == sympy.zeros(3, 1)
    assert sympy.simplify(At * v2 - mu2 * v2) == sympy.zeros(3, 1)
    # the quoted (2, -3, 2) is not an eigenvector unless a1 = a2 = 0
    v = sympy.Matrix([2, -3, 2])
    res = sympy.expand(At * v - mu2 * v)
    assert res != sympy.zeros(3, 1)
    assert res.subs({a1: 0, a2: 0}) == sympy.zeros(3, 1)


def test_spectrum_is_mu1_twice_and_mu2():
    # trace = lam (3 a0 - 7 a1 + 4 a2), so the third eigenvalue repeats mu1
    A = cavity_matrix(1.5, 0.6, 0.3, 0.2)
    ev = np.sort(np.linalg.eigvals(A).real)
    mu1, mu2 = 1.5 * (0.6 - 0.6 + 0.2), 1.5 * (0.6 - 0.9 + 0.4)
    np.testing.assert_allclose(ev, np.sort([mu1, mu1, mu2]), atol=1e-7)


@pytest.mark.parametrize("prior,lam", [(Prior.rademacher(), 1.5), (Prior.centered_two_point(0.3), 1.5),
                                       (Prior.two_point(0.6, 1.0, -0.5), 2.0)])
def test_eigen_residuals_numeric(prior, lam):
    b = correction_bundle(lam, prior)
    r1, r2 = eigen_residuals(b)
    assert r1 < 1e-10 and r2 < 1e-10
    _, r_quoted = eigen_residuals(b, v2=(2.0, -3.0, 2.0))
    assert r_quoted > 0.1


def test_quoted_vector_fine_below_threshold():
    b = correction_bundle(0.5, Prior.rademacher())
    assert max(eigen_residuals(b, v2=(2.0, -3.0, 2.0))) < 1e-12


def test_below_threshold_bundle():
    b = correction_bundle(0.5, Prior.sparse_rademacher(0.3))
    assert b.mu1 == pytest.approx(0.5, abs=1e-12)
    assert b.mu2 == pytest.approx(0.5, abs=1e-12)
    assert b.psi_rs == pytest.approx(0.0482868, abs=1e-7)
    assert b.psi_rs == pytest.approx(kl_oracle(0.5), abs=1e-12)
    assert b.valid and b.covered


def test_lambda_zero_bundle():
    b = correction_bundle(0.0, Prior.rademacher())
    assert b.mu1 == 0.0 and b.mu2 == 0.0
    assert b.psi_rs == 0.0
    assert psi_rs_via_integral(0.0, b) == 0.0
    assert delta_rs(0.0, 1.0, b) == pytest.approx(b.coeffs.a0, abs=1e-14)


def test_mu1_below_threshold_is_lam_m2_squared():
    # +-2 atoms: m2 = 4, threshold 1/16
    scaled = Prior.custom([-2.0, 2.0], [0.5, 0.5])
    b = correction_bundle(0.05, scaled)
    assert b.mu1 == pytest.approx(0.05 * 16, abs=1e-12)
    assert b.valid


def test_invalid_bundle():
    b = correction_bundle(1.0, Prior.rademacher())
    assert not b.valid and b.psi_rs is None and b.c_vector is None
    with pytest.raises(DomainError):
        psi_rs_via_integral(1.0, b)
    with pytest.raises(DomainError):
        delta_rs(1.0, 0.5, b)


@pytest.mark.parametrize("lam", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_kl_formula_below_threshold(lam):
    for prior in (Prior.rademacher(), Prior.sparse_rademacher(0.3), Prior.sparse_rademacher(0.5)):
        assert correction_bundle(lam, prior).psi_rs == pytest.approx(kl_oracle(lam), abs=1e-9)


@pytest.mark.parametrize("prior,lam", [(Prior.rademacher(), 0.5), (Prior.rademacher(), 1.5),
                                       (Prior.centered_two_point(0.3), 0.3),
                                       (Prior.centered_two_point(0.3), 1.5),
                                       (Prior.two_point(0.6, 1.0, -0.5), 0.5)])
def test_integral_matches_closed_form(prior, lam):
    b = correction_bundle(lam, prior)
    assert b.valid
    assert psi_rs_via_integral(lam, b) == pytest.approx(b.psi_rs, abs=1e-10)


@pytest.mark.parametrize("prior,lam", [(Prior.rademacher(), 1.5), (Prior.rademacher(), 3.0),
                                       (Prior.centered_two_point(0.3), 1.5),
                                       (Prior.two_point(0.6, 1.0, -0.5), 2.0)])
def test_delta_at_t0_is_a0(prior, lam):
    b = correction_bundle(lam, prior)
    assert delta_rs(lam, 0.0, b) == pytest.approx(b.coeffs.a0, abs=1e-10)


@given(st.floats(0.0, 0.95), st.floats(0.0, 1.0))
def test_delta_below_threshold_closed_form(lam, t):
    b = correction_bundle(lam, Prior.rademacher())
    assert delta_rs(lam, t, b) == pytest.approx(1 / (1 - t * lam), rel=1e-10)


def test_delta_rademacher_half():
    b = correction_bundle(0.5, Prior.rademacher())
    assert delta_rs(0.5, 1.0, b) == pytest.approx(2.0, abs=1e-12)


def test_delta_argument_checks():
    b = correction_bundle(0.5, Prior.rademacher())
    with pytest.raises(ValueError):
        delta_rs(0.5, 1.5, b)
    with pytest.raises(ValueError):
        delta_rs(0.4, 0.5, b)


@pytest.mark.parametrize("prior,lam,t", [(Prior.rademacher(), 1.5, 1.0), (Prior.rademacher(), 3.0, 0.4),
                                         (Prior.centered_two_point(0.3), 1.5, 0.7),
                                         (Prior.two_point(0.6, 1.0, -0.5), 2.0, 1.0),
                                         (Prior.sparse_rademacher(0.3), 0.5, 1.0)])
def test_cavity_system(prior, lam, t):
    b = correction_bundle(lam, prior)
    out = solve_cavity_system(lam, t, b)
    M = np.eye(3) - t * b.cavity_matrix
    np.testing.assert_allclose(M @ out["elimination"], b.a, atol=1e-12)
    assert out["elimination"][0] == pytest.approx(delta_rs(lam, t, b), abs=1e-9)
    assert out["discrepancy"] < 1e-9


def test_cavity_system_identity_at_t0():
    b = correction_bundle(1.5, Prior.rademacher())
    out = solve_cavity_system(1.5, 0.0, b)
    np.testing.assert_array_equal(out["elimination"], b.a)
    np.testing.assert_array_equal(out["closed_form"], b.a)


def test_cavity_below_threshold_c0():
    b = correction_bundle(0.6, Prior.rademacher())
    assert b.c_vector[0] == pytest.approx(1 / 0.4, abs=1e-12)


def test_cavity_domain_error():
    b = correction_bundle(1.0, Prior.rademacher())
    with pytest.raises(DomainError):
        solve_cavity_system(1.0, 1.0, b)


def test_covered_flag():
    assert not correction_bundle(1.5, Prior.rademacher()).covered
    assert correction_bundle(1.5, Prior.centered_two_point(0.3)).covered
    assert correction_bundle(0.5, Prior.rademacher()).covered


def test_near_degenerate_warns():
    p = Prior.sparse_rademacher(0.05)
    lc = lambda_c(p).lambda_c
    sol = solve_qstar(lc, p)
    with pytest.warns(RuntimeWarning, match="first-order"):
        b = correction_bundle(lc, p, solution=sol)
    assert b.near_degenerate
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        correction_bundle(1.5, Prior.rademacher())


def test_fault_injection_breaks_eigenstructure():
    with inject_fault("mu2_sign"):
        b = correction_bundle(1.5, Prior.rademacher())
        assert eigen_residuals(b)[1] > 1e-3
    b = correction_bundle(1.5, Prior.rademacher())
    assert eigen_residuals(b)[1] < 1e-10
    with pytest.raises(ValueError):
        with inject_fault("other"):
            pass


def test_clt_params():
    assert clt_params(0.0) == clt_params(0.0).__class__(0.0, 0.0)
    c = clt_params(0.5)
    assert (c.mu, c.sigma2) == pytest.approx((0.0482868, 0.0965736), abs=1e-7)
    assert clt_params(0.9).mu == pytest.approx(kl_oracle(0.9), abs=1e-15)
    assert clt_params(0.9).mu == pytest.approx(0.3506463, abs=1e-7)
    for lam in (1.0, 1.5, -0.1):
        with pytest.raises(DomainError):
            clt_params(lam)


@given(st.floats(0.0, 0.999))
def test_clt_variance_twice_mean(lam):
    c = clt_params(lam)
    assert c.sigma2 - 2 * c.mu == 0.0
    assert c.mu >= 0
    assert detection_formulas(lam).kl == c.mu


def test_detection_formulas():
    f = detection_formulas(0.0)
    assert f.err_star == 1.0 and f.tv == 0.0
    f = detection_formulas(0.5)
    assert f.err_star == pytest.approx(0.8765, abs=1e-4)
    assert f.type2 == pytest.approx(0.4383, abs=1e-4)
    assert f.err_star == pytest.approx(erfc_oracle(math.sqrt(kl_oracle(0.5)) / 2), rel=1e-12)
    f = detection_formulas(0.9)
    assert f.err_star == pytest.approx(0.6754, abs=1e-4)
    assert f.type1 == f.type2 and f.tv == pytest.approx(1 - f.err_star)
    with pytest.raises(DomainError):
        detection_formulas(1.0)


def test_conjectural_flag():
    assert not detection_formulas(0.5, Prior.rademacher()).conjectural_type1
    assert detection_formulas(0.5, Prior.sparse_rademacher(0.3)).conjectural_type1
