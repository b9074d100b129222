import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from dpr0.errors import ArgumentError, NumericDomainError
from dpr0.numerics import (
    TruncGaussParams,
    TruncLaplaceParams,
    lower_incomplete_gamma,
    sample_trunc_gauss,
    sample_trunc_gauss_array,
    sample_trunc_laplace,
    seeded_rng,
    std_normal_cdf,
    std_normal_pdf,
    trunc_gauss_mgf,
    trunc_gauss_moments,
    trunc_gauss_pdf,
    trunc_laplace_cdf,
    trunc_laplace_pdf,
)


def gauss_density(x, mu, sigma):
    return math.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def quad_moments(p):
    """Mean and variance of the truncated Gaussian by direct quadrature."""
    z = integrate.quad(lambda x: gauss_density(x, p.mu, p.sigma), p.lower, p.upper, epsabs=0, epsrel=1e-13)[0]
    m1 = integrate.quad(lambda x: x * gauss_density(x, p.mu, p.sigma), p.lower, p.upper, epsabs=0, epsrel=1e-13)[0] / z
    m2 = integrate.quad(lambda x: (x - m1) ** 2 * gauss_density(x, p.mu, p.sigma), p.lower, p.upper,
                        epsabs=0, epsrel=1e-13)[0] / z
    return m1, m2


# -- normal pdf / cdf -------------------------------------------------------------


def test_pdf_cdf_at_zero():
    assert std_normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-15)
    assert std_normal_cdf(0.0) == 0.5


def test_cdf_one_against_quadrature():
    val = 0.5 + integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), 0, 1, epsabs=1e-15)[0]
    assert abs(std_normal_cdf(1.0) - val) < 1e-9
    assert abs(std_normal_cdf(1.0) - 0.841344746) < 1e-9


def test_pdf_integrates_to_one():
    total = integrate.quad(std_normal_pdf, -np.inf, np.inf, epsabs=1e-13)[0]
    assert abs(total - 1.0) < 1e-10


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_nonfinite_rejected(bad):
    with pytest.raises(ArgumentError):
        std_normal_cdf(bad)
    with pytest.raises(ArgumentError):
        std_normal_pdf(bad)


@given(st.floats(-30, 30))
def test_cdf_symmetry(x):
    assert abs(std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))) <= 1e-14
    assert 0.0 <= std_normal_cdf(x) <= 1.0
    assert std_normal_pdf(x) >= 0.0


# beyond ~8 the CDF rounds to 1.0, where strict increase is not representable
@given(st.floats(-8, 3), st.floats(1e-3, 2))
def test_cdf_monotone(x, dx):
    assert std_normal_cdf(x + dx) > std_normal_cdf(x)


# -- truncated Gaussian ------------------------------------------------------------


def test_moments_symmetric_truncation():
    p = TruncGaussParams(1.0, 0.7, 0.2, 1.8)
    mean, var = trunc_gauss_moments(p)
    assert mean == pytest.approx(1.0, abs=1e-15)
    assert 0 < var < 0.49


def test_moments_untruncated_limit():
    p = TruncGaussParams(2.0, 0.3, 2.0 - 40 * 0.3, 2.0 + 40 * 0.3)
    mean, var = trunc_gauss_moments(p)
    assert abs(mean - 2.0) < 1e-12
    assert abs(var - 0.09) < 1e-12


def test_moments_monte_carlo_fifteen_node_point():
    p = TruncGaussParams(0.25, 0.05, 0.2, 0.3)
    mean, var = trunc_gauss_moments(p)
    x = sample_trunc_gauss(p, seeded_rng(1), size=1_000_000)
    se_mean = math.sqrt(var / x.size)
    assert abs(x.mean() - mean) < 4 * se_mean
    # standard error of the sample variance from the fourth central moment
    m4 = np.mean((x - x.mean()) ** 4)
    se_var = math.sqrt((m4 - var**2) / x.size)
    assert abs(x.var() - var) < 4 * se_var


PARAM_GRID = [
    TruncGaussParams(0.25, 0.05, 0.2, 0.3),
    TruncGaussParams(0.0, 1.0, -0.5, 3.0),
    TruncGaussParams(1.0, 0.1, 0.0, 3.0),
    TruncGaussParams(2.9, 2.0, 0.0, 3.0),
    TruncGaussParams(0.01, 5.0, 0.0, 3.0),
    TruncGaussParams(0.0, 1.0, 4.0, 6.0),
]


@pytest.mark.parametrize("p", PARAM_GRID)
def test_density_normalization_and_moment_identity(p):
    total = integrate.quad(lambda x: trunc_gauss_pdf(x, p), p.lower, p.upper, epsabs=0, epsrel=1e-12)[0]
    assert abs(total - 1.0) < 1e-8
    m, v = trunc_gauss_moments(p)
    qm, qv = quad_moments(p)
    assert abs(m - qm) < 1e-8
    assert abs(v - qv) < 1e-8
    assert p.lower < m <= p.upper
    # strict in exact arithmetic; equal in floating point once truncation is ~10 sigma away
    assert 0 < v <= p.sigma**2


def test_degenerate_mass_raises():
    with pytest.raises(NumericDomainError):
        trunc_gauss_moments(TruncGaussParams(0.0, 1e-3, 50.0, 51.0))


@pytest.mark.parametrize("bad", [dict(sigma=0.0), dict(sigma=-1.0), dict(lower=1.0, upper=1.0)])
def test_params_validation(bad):
    kw = dict(mu=0.0, sigma=1.0, lower=0.0, upper=1.0)
    kw.update(bad)
    with pytest.raises(ArgumentError):
        TruncGaussParams(**kw)


def test_mgf_at_zero_is_one():
    assert trunc_gauss_mgf(TruncGaussParams(0.3, 0.2, 0.0, 1.0), 0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("eta", [-5.0, -0.5, 0.7, 3.0])
@pytest.mark.parametrize("p", PARAM_GRID[:4])
def test_mgf_against_quadrature(p, eta):
    val = integrate.quad(lambda x: math.exp(eta * x) * trunc_gauss_pdf(x, p), p.lower, p.upper,
                         epsabs=0, epsrel=1e-13)[0]
    assert abs(trunc_gauss_mgf(p, eta) - val) < 1e-9 * max(1.0, val)


def test_centered_mgf_envelope_grid():
    p = TruncGaussParams(0.25, 0.05, 0.2, 0.3)
    for eta in np.linspace(-50, 50, 201):
        assert trunc_gauss_mgf(p, eta, centered=True) <= math.exp(p.sigma**2 * eta**2 / 2) * (1 + 1e-12)


def test_mgf_overflow_raises():
    with pytest.raises(NumericDomainError):
        trunc_gauss_mgf(TruncGaussParams(10.0, 1.0, 0.0, 200.0), 400.0)


@given(
    mu=st.floats(-3, 3), sigma=st.floats(0.05, 3), lo=st.floats(-4, 2), width=st.floats(0.05, 5),
)
def test_sub_gaussian_envelope_property(mu, sigma, lo, width):
    p = TruncGaussParams(mu, sigma, lo, lo + width)
    if p.mass < 1e-10:
        return
    for eta in (-10.0, -1.0, -0.1, 0.1, 1.0, 10.0):
        log_bound = sigma**2 * eta**2 / 2
        assert math.log(trunc_gauss_mgf(p, eta, centered=True)) <= log_bound + 1e-9


def test_sampler_support_and_determinism():
    p = TruncGaussParams(0.25, 0.05, 0.2, 0.3)
    a = sample_trunc_gauss(p, seeded_rng(5), size=10_000)
    b = sample_trunc_gauss(p, seeded_rng(5), size=10_000)
    assert np.array_equal(a, b)
    assert np.all(a > p.lower) and np.all(a <= p.upper)


@given(mu=st.floats(-50, 50), sigma=st.floats(1e-4, 10), lo=st.floats(-5, 5), width=st.floats(1e-6, 10))
def test_sampler_support_property(mu, sigma, lo, width):
    x = sample_trunc_gauss_array(np.full(50, mu), sigma, lo, lo + width, seeded_rng(0))
    assert np.all(x > lo) and np.all(x <= lo + width)


def test_far_tail_sampling_matches_moments():
    # window 8 to 9 standard deviations above the mean: inverse CDF has no mass to work with
    p = TruncGaussParams(0.0, 1.0, 8.0, 9.0)
    x = sample_trunc_gauss(p, seeded_rng(3), size=20_000)
    mean, var = trunc_gauss_moments(p)
    assert np.all((x > 8.0) & (x <= 9.0))
    assert abs(x.mean() - mean) < 4 * math.sqrt(var / x.size)


def test_far_tail_below_window():
    p = TruncGaussParams(0.0, 1.0, -30.0, -29.0)
    x = sample_trunc_gauss(p, seeded_rng(4), size=2000)
    mean, var = trunc_gauss_moments(p)
    assert np.all((x > -30.0) & (x <= -29.0))
    assert abs(x.mean() - mean) < 4 * math.sqrt(var / x.size)


# -- truncated Laplace ---------------------------------------------------------------


def test_laplace_density_normalization():
    for p in [TruncLaplaceParams(1.0, 0.5, 0.0, 4.0), TruncLaplaceParams(0.1, 3.0, 0.0, 2.0),
              TruncLaplaceParams(2.0, 0.01, 0.0, 2.0)]:
        total = integrate.quad(lambda x: trunc_laplace_pdf(x, p), p.lower, p.upper, points=[p.mu],
                               epsabs=0, epsrel=1e-12)[0]
        assert abs(total - 1.0) < 1e-8


def test_laplace_support_and_determinism():
    p = TruncLaplaceParams(0.2, 1.0, 0.0, 1.0)
    a = sample_trunc_laplace(p, seeded_rng(9), size=50_000)
    assert np.array_equal(a, sample_trunc_laplace(p, seeded_rng(9), size=50_000))
    assert np.all((a > 0.0) & (a <= 1.0))


def test_laplace_symmetric_when_centered():
    p = TruncLaplaceParams(2.0, 0.7, 0.0, 4.0)
    x = sample_trunc_laplace(p, seeded_rng(11), size=200_000)
    reflected = np.sort(4.0 - x)
    grid = np.linspace(0.0, 4.0, 81)
    ecdf_a = np.searchsorted(np.sort(x), grid, side="right") / x.size
    ecdf_b = np.searchsorted(reflected, grid, side="right") / x.size
    # two-sample KS distance with alpha ~ 1e-4 critical value
    assert np.max(np.abs(ecdf_a - ecdf_b)) < 2.2 * math.sqrt(2.0 / x.size)


def test_laplace_location_outside_domain():
    with pytest.raises(ArgumentError):
        sample_trunc_laplace(TruncLaplaceParams(5.0, 1.0, 0.0, 4.0), seeded_rng(0))
    with pytest.raises(ArgumentError):
        sample_trunc_laplace(TruncLaplaceParams(0.0, 1.0, 0.0, 4.0), seeded_rng(0))


def test_laplace_cdf_matches_empirical():
    p = TruncLaplaceParams(0.3, 0.4, 0.0, 3.0)
    x = sample_trunc_laplace(p, seeded_rng(12), size=400_000)
    for q in (0.1, 0.3, 0.8, 2.0):
        emp = np.mean(x <= q)
        assert abs(emp - trunc_laplace_cdf(q, p)) < 5 * math.sqrt(0.25 / x.size)


# -- incomplete gamma -----------------------------------------------------------------


@given(st.floats(0, 50))
def test_incomplete_gamma_s1_closed_form(x):
    assert abs(lower_incomplete_gamma(1, x) - (-math.expm1(-x))) < 1e-14


def test_incomplete_gamma_values():
    assert lower_incomplete_gamma(2.5, 0.0) == 0.0
    quad = integrate.quad(lambda t: t * math.exp(-t), 0, 1, epsabs=1e-15)[0]
    assert abs(lower_incomplete_gamma(2, 1) - quad) < 1e-10
    assert abs(lower_incomplete_gamma(2, 1) - 0.26424112) < 1e-8
    assert abs(lower_incomplete_gamma(3, 200.0) - 2.0) < 1e-12


@given(st.floats(0.1, 10), st.floats(0, 30), st.floats(0, 5))
def test_incomplete_gamma_monotone(s, x, dx):
    assert lower_incomplete_gamma(s, x + dx) >= lower_incomplete_gamma(s, x) - 1e-15
    assert lower_incomplete_gamma(s, x) <= math.gamma(s) * (1 + 1e-14)


def test_incomplete_gamma_domain():
    with pytest.raises(ArgumentError):
        lower_incomplete_gamma(0, 1)
    with pytest.raises(ArgumentError):
        lower_incomplete_gamma(1, -1)


# -- seeded streams ----------------------------------------------------------------------


def test_seeded_streams_reproducible_and_distinct():
    a = seeded_rng(42, 1, 2).random(8)
    assert np.array_equal(a, seeded_rng(42, 1, 2).random(8))
    assert not np.array_equal(a, seeded_rng(42, 1, 3).random(8))
    assert not np.array_equal(a, seeded_rng(43, 1, 2).random(8))
