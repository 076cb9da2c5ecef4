import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from adaptive_epd.epd import (
    EpdParams,
    cdf,
    log_norm_const,
    log_pdf,
    log_pdf_grad,
    pdf,
    quantile,
    sample,
    variance_factor,
    variance_of,
)
from adaptive_epd.exceptions import DomainError

kappas = st.floats(min_value=0.3, max_value=5.0)
mus = st.floats(min_value=-5.0, max_value=5.0)
sigmas = st.floats(min_value=0.05, max_value=20.0)


def gennorm(p: EpdParams):
    # same family, scale absorbs the 1/kappa in the exponent
    return stats.gennorm(p.kappa, loc=p.mu, scale=p.kappa ** (1 / p.kappa) * p.sigma)


@settings(max_examples=200)
@given(kappas, mus, sigmas, st.floats(min_value=-30, max_value=30))
def test_log_pdf_matches_gennorm(k, mu, s, z):
    p = EpdParams(k, mu, s)
    x = mu + z * s
    assert log_pdf(p, x) == pytest.approx(gennorm(p).logpdf(x), rel=1e-10, abs=1e-10)


@settings(max_examples=200)
@given(kappas, mus, sigmas, st.floats(min_value=-8, max_value=8))
def test_cdf_matches_gennorm(k, mu, s, z):
    p = EpdParams(k, mu, s)
    x = mu + z * s
    assert cdf(p, x) == pytest.approx(gennorm(p).cdf(x), rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 3.0])
def test_density_integrates_to_one(k):
    p = EpdParams(k, 0.3, 1.7)
    left, _ = integrate.quad(lambda x: pdf(p, x), -np.inf, p.mu, epsabs=1e-13)
    right, _ = integrate.quad(lambda x: pdf(p, x), p.mu, np.inf, epsabs=1e-13)
    assert left + right == pytest.approx(1.0, abs=1e-8)


def test_special_members():
    x = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(pdf(EpdParams(2.0), x), stats.norm.pdf(x), rtol=1e-12)
    np.testing.assert_allclose(pdf(EpdParams(1.0), x), stats.laplace.pdf(x), rtol=1e-12)


def test_norm_const_closed_forms():
    assert log_norm_const(2.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-14)
    assert log_norm_const(1.0) == pytest.approx(-math.log(2.0), abs=1e-14)
    np.testing.assert_allclose(log_norm_const(np.array([1.0, 2.0])), [-math.log(2), -0.5 * math.log(2 * math.pi)])


def test_cdf_symmetry_and_median():
    p = EpdParams(0.7, 1.0, 2.0)
    assert cdf(p, p.mu) == 0.5
    for d in (0.1, 1.0, 10.0):
        assert cdf(p, p.mu - d) + cdf(p, p.mu + d) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=200)
@given(kappas, mus, sigmas, st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_quantile_inverts_cdf(k, mu, s, q):
    p = EpdParams(k, mu, s)
    assert cdf(p, quantile(p, q)) == pytest.approx(q, rel=1e-8, abs=1e-14)


def test_quantile_median_and_domain():
    p = EpdParams(1.3, -2.0, 1.0)
    assert quantile(p, 0.5) == -2.0
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            quantile(p, bad)


def test_variance_factor_known():
    assert variance_factor(2.0) == pytest.approx(1.0, rel=1e-14)
    assert variance_factor(1.0) == pytest.approx(2.0, rel=1e-14)
    assert variance_of(EpdParams(1.5, 0.0, 2.0)) == pytest.approx(gennorm(EpdParams(1.5, 0, 2.0)).var(), rel=1e-12)


def test_sampler_is_seed_deterministic():
    p = EpdParams(0.8, 0.1, 0.5)
    np.testing.assert_array_equal(sample(p, 50, seed=11), sample(p, 50, seed=11))
    assert not np.array_equal(sample(p, 50, seed=11), sample(p, 50, seed=12))


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 3.0])
def test_sampler_distribution(k):
    p = EpdParams(k, 0.5, 2.0)
    x = sample(p, 20000, seed=3)
    assert stats.kstest(x, gennorm(p).cdf).pvalue > 0.01


def test_params_validation():
    for args in [(0.0,), (-1.0,), (math.inf,), (1.0, 0.0, 0.0), (1.0, 0.0, -2.0), (1.0, math.nan, 1.0)]:
        with pytest.raises(DomainError):
            EpdParams(*args)


@settings(max_examples=300)
@given(kappas, mus, sigmas, st.floats(min_value=-6, max_value=6).filter(lambda z: abs(z) > 1e-3))
def test_gradient_matches_central_differences(k, mu, s, z):
    p = EpdParams(k, mu, s)
    x = mu + z * s
    g = log_pdf_grad(p, x)

    def fd(**shift):
        h = 1e-6 * max(1.0, abs(next(iter(shift.values()))))
        name = next(iter(shift))
        up = {**p.__dict__, name: getattr(p, name) + h}
        dn = {**p.__dict__, name: getattr(p, name) - h}
        return (log_pdf(EpdParams(**up), x) - log_pdf(EpdParams(**dn), x)) / (2 * h)

    assert g.dkappa == pytest.approx(fd(kappa=k), rel=1e-4, abs=1e-6)
    assert g.dmu == pytest.approx(fd(mu=mu), rel=1e-4, abs=1e-6 / s)
    assert g.dsigma == pytest.approx(fd(sigma=s), rel=1e-4, abs=1e-6 / s)
    assert not g.singular


def test_gradient_at_the_mode():
    g = log_pdf_grad(EpdParams(0.8, 1.0, 2.0), 1.0)
    assert g.dmu == 0.0 and g.singular
    assert g.dsigma == pytest.approx(-0.5)
    # kappa derivative uses its finite limit at u = 0
    h = 1e-6
    fd = (log_pdf(EpdParams(0.8 + h, 1.0, 2.0), 1.0) - log_pdf(EpdParams(0.8 - h, 1.0, 2.0), 1.0)) / (2 * h)
    assert g.dkappa == pytest.approx(fd, rel=1e-6)
    assert not log_pdf_grad(EpdParams(2.0), 0.0).singular
