"""Weibull maths against independent oracles.

Oracles: scipy adaptive quadrature for KL, bisection on the CDF for the
inverse CDF and median, central finite differences for the gradients,
scipy's KS test for the sampler.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from paenmf import weibull as wb

pos = st.floats(0.2, 5.0)


def bisect_cdf(p, k, lam, lo=0.0, hi=1e3, iters=200):
    """Solve CDF(x) = 1 - p by bisection (sampling uses the upper tail)."""
    target = 1.0 - p
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if 1.0 - math.exp(-((mid / lam) ** k)) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def quad_kl(k1, l1, k2, l2):
    def f(x, k, lam):
        return (k / lam) * (x / lam) ** (k - 1) * math.exp(-((x / lam) ** k))

    def logf(x, k, lam):
        return math.log(k / lam) + (k - 1) * math.log(x / lam) - (x / lam) ** k

    def integrand(x):
        if x <= 0:
            return 0.0
        return f(x, k1, l1) * (logf(x, k1, l1) - logf(x, k2, l2))

    # split at the bulk so quad resolves the integrable singularity at 0
    mid = l1
    a, _ = integrate.quad(integrand, 0, mid, epsabs=1e-12, epsrel=1e-12, limit=500)
    b, _ = integrate.quad(integrand, mid, np.inf, epsabs=1e-12, epsrel=1e-12, limit=500)
    return a + b


def fd(f, x, step=1e-6):
    return (f(x + step) - f(x - step)) / (2 * step)


# ------------------------------------------------------------------ pdf / cdf

def test_pdf_negative_is_zero():
    assert wb.pdf(-1.0, 2.0, 1.0) == 0.0


def test_pdf_exponential_case():
    assert wb.pdf(1.0, 1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)


def test_pdf_matches_cdf_derivative():
    got = wb.pdf(0.7, 2.5, 1.3)
    assert got == pytest.approx(fd(lambda x: wb.cdf(x, 2.5, 1.3), 0.7), rel=1e-8)


def test_pdf_at_zero_branches():
    assert wb.pdf(0.0, 2.0, 1.0) == 0.0
    assert wb.pdf(0.0, 1.0, 4.0) == 0.25
    with pytest.raises(wb.PdfDivergence):
        wb.pdf(0.0, 0.5, 1.0)


@pytest.mark.parametrize("k,lam", [(0.0, 1.0), (1.0, -1.0), (float("nan"), 1.0)])
def test_parameter_errors(k, lam):
    with pytest.raises(wb.WeibullParameterError):
        wb.pdf(1.0, k, lam)
    with pytest.raises(wb.WeibullParameterError):
        wb.inverse_cdf(0.5, k, lam)
    with pytest.raises(wb.WeibullParameterError):
        wb.kl_divergence(k, lam, 1.0, 1.0)


def test_pdf_integrates_to_one():
    total, _ = integrate.quad(lambda x: wb.pdf(x, 1.7, 0.8), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-10)


# ------------------------------------------------------------------ inverse CDF

def test_inverse_cdf_unit_exponent():
    assert wb.inverse_cdf(math.exp(-1), 3.0, 2.0) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("eps,k,lam,expected", [
    (0.5, 1.0, 1.0, 0.693147),
    (0.5, 2.0, 3.0, 2.497664),
])
def test_inverse_cdf_against_bisection(eps, k, lam, expected):
    got = wb.inverse_cdf(eps, k, lam)
    assert got == pytest.approx(bisect_cdf(eps, k, lam), rel=1e-12)
    assert got == pytest.approx(expected, abs=1e-6)


def test_inverse_cdf_clamps_eps():
    assert math.isfinite(wb.inverse_cdf(0.0, 1.0, 1.0))
    assert wb.inverse_cdf(1.0, 1.0, 1.0) > 0
    assert wb.inverse_cdf(0.0, 1.0, 1.0) == wb.inverse_cdf(wb.EPS_CLAMP, 1.0, 1.0)


def test_inverse_cdf_monotone_grids():
    eps = np.linspace(1e-6, 1 - 1e-6, 1001)
    for k in (0.3, 1.0, 4.0):
        h = wb.inverse_cdf(eps, k, 1.5)
        assert np.all(np.diff(h) < 0)
    lams = np.linspace(0.1, 10, 500)
    assert np.all(np.diff(wb.inverse_cdf(0.3, 2.0, lams)) > 0)


# ------------------------------------------------------------------ median / IQR

def test_median_against_bisection():
    assert wb.median(1.0, 1.0) == pytest.approx(bisect_cdf(0.5, 1.0, 1.0), rel=1e-12)
    assert wb.median(1.0, 1.0) == pytest.approx(0.693147, abs=1e-6)


@given(pos, pos, st.floats(0.1, 10.0))
def test_median_scale_equivariance(k, lam, c):
    assert wb.median(k, c * lam) == pytest.approx(c * wb.median(k, lam), rel=1e-12)


@given(pos, pos)
def test_median_is_inverse_cdf_half(k, lam):
    assert wb.median(k, lam) == wb.inverse_cdf(0.5, k, lam)


def test_iqr_against_quantiles():
    k, lam = 1.7, 2.2
    q1, q3 = stats.weibull_min.ppf([0.25, 0.75], k, scale=lam)
    assert wb.interquartile_range(k, lam) == pytest.approx(q3 - q1, rel=1e-12)
    p = wb.WeibullParams(k, lam)
    assert p.iqr() == pytest.approx(q3 - q1, rel=1e-12)
    assert p.median() == pytest.approx(stats.weibull_min.median(k, scale=lam), rel=1e-12)


# ------------------------------------------------------------------ KL

def test_kl_identical_is_zero():
    assert wb.kl_divergence(1, 1, 1, 1) == 0.0


@pytest.mark.parametrize("args,expected", [((2, 1, 1, 1), 0.290766), ((1, 2, 1, 1), 0.306853)])
def test_kl_reference_values(args, expected):
    got = wb.kl_divergence(*args)
    assert got == pytest.approx(quad_kl(*args), abs=1e-9)
    assert got == pytest.approx(expected, abs=1e-6)


GRID = list(itertools.product([0.5, 1.0, 2.0, 5.0], [0.5, 1.0, 2.0]))


@pytest.mark.parametrize("k1,l1", GRID)
def test_kl_matches_quadrature_grid(k1, l1):
    for k2, l2 in GRID:
        assert wb.kl_divergence(k1, l1, k2, l2) == pytest.approx(
            quad_kl(k1, l1, k2, l2), abs=1e-6
        ), (k1, l1, k2, l2)


def test_kl_nonnegative_random():
    rng = np.random.default_rng(11)
    q = rng.uniform(0.1, 5.0, size=(4, 200))
    assert np.all(wb.kl_divergence(*q) >= -1e-12)


def test_kl_overflow_names_parameters():
    with pytest.raises(OverflowError, match=r"k1=.*lam1=.*k2=.*lam2="):
        wb.kl_divergence(1.0, 1e6, 80.0, 1e-3)


# ------------------------------------------------------------------ gradients

def test_kl_gradients_at_prior():
    dk, dl = wb.kl_gradients(1.0, 1.0, 1.0, 1.0)
    assert dl == pytest.approx(0.0, abs=1e-15)
    assert dk == pytest.approx(fd(lambda k: wb.kl_divergence(k, 1, 1, 1), 1.0), abs=1e-6)
    assert abs(dk) < 1e-9  # the prior is the minimiser


def test_kl_gradients_random_points():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        k1, l1, k2, l2 = rng.uniform(0.3, 3.0, size=4)
        dk, dl = wb.kl_gradients(k1, l1, k2, l2)
        ndk = fd(lambda k: wb.kl_divergence(k, l1, k2, l2), k1)
        ndl = fd(lambda lam: wb.kl_divergence(k1, lam, k2, l2), l1)
        for a, n in ((dk, ndk), (dl, ndl)):
            worst = max(worst, abs(a - n) / max(abs(n), 1e-3))
    assert worst < 1e-5


def test_sample_gradients_special_cases():
    dk, dl = wb.sample_gradients(math.exp(-1), 2.7, 0.4)
    assert dk == pytest.approx(0.0, abs=1e-15)
    _, dl = wb.sample_gradients(0.5, 2.0, 3.0)
    assert dl == pytest.approx(fd(lambda lam: wb.inverse_cdf(0.5, 2.0, lam), 3.0), rel=1e-8)
    assert dl == pytest.approx(0.832555, abs=1e-6)


def test_sample_gradients_random_points():
    rng = np.random.default_rng(6)
    for _ in range(20):
        eps = rng.uniform(0.01, 0.99)
        k, lam = rng.uniform(0.3, 4.0, size=2)
        dk, dl = wb.sample_gradients(eps, k, lam)
        ndk = fd(lambda kk: wb.inverse_cdf(eps, kk, lam), k)
        ndl = fd(lambda ll: wb.inverse_cdf(eps, k, ll), lam)
        assert dk == pytest.approx(ndk, rel=1e-5, abs=1e-9)
        assert dl == pytest.approx(ndl, rel=1e-5, abs=1e-9)


# ------------------------------------------------------------------ sampling law

def test_inverse_cdf_sampling_ks():
    rng = np.random.default_rng(2024)
    h = wb.inverse_cdf(rng.uniform(size=100_000), 2.0, 1.5)
    stat = stats.kstest(h, lambda x: wb.cdf(x, 2.0, 1.5)).statistic
    assert stat < 0.01


@settings(max_examples=25, deadline=None)
@given(pos, pos, st.floats(1e-6, 1 - 1e-6))
def test_inverse_cdf_round_trips_through_cdf(k, lam, eps):
    h = wb.inverse_cdf(eps, k, lam)
    assert h > 0
    assert 1.0 - wb.cdf(h, k, lam) == pytest.approx(eps, rel=1e-7, abs=1e-12)
