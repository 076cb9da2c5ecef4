import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import special as sp

from adaptive_epd.exceptions import DomainError
from adaptive_epd.special import (
    digamma,
    inv_reg_lower_gamma,
    inv_reg_upper_gamma,
    ln_gamma,
    reg_lower_gamma,
    reg_upper_gamma,
)

shapes = st.floats(min_value=0.02, max_value=50.0)
args = st.floats(min_value=0.0, max_value=200.0)


@pytest.mark.parametrize("a", [1e-3, 0.1, 0.5, 1.0, 1.5, 2.0, 7.3, 50.0, 171.5, 1000.0])
def test_ln_gamma_against_mpmath(a):
    assert ln_gamma(a) == pytest.approx(float(mpmath.loggamma(a)), rel=1e-13, abs=1e-14)


def test_ln_gamma_integers():
    for n in range(1, 25):
        assert ln_gamma(float(n)) == pytest.approx(math.lgamma(n), abs=1e-12)


def test_ln_gamma_vectorized_matches_scalar():
    a = np.linspace(0.05, 30, 97)
    np.testing.assert_allclose(ln_gamma(a), [ln_gamma(float(v)) for v in a], rtol=1e-14)


@given(st.floats(min_value=1e-3, max_value=500.0))
def test_digamma_against_scipy(a):
    assert digamma(a) == pytest.approx(sp.digamma(a), rel=1e-11, abs=1e-11)


def test_digamma_known_values():
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-13)
    assert digamma(0.5) == pytest.approx(-0.5772156649015329 - 2 * math.log(2), abs=1e-13)


@settings(max_examples=300)
@given(shapes, args)
def test_lower_plus_upper_is_one(a, z):
    assert reg_lower_gamma(a, z) + reg_upper_gamma(a, z) == pytest.approx(1.0, abs=1e-13)


@settings(max_examples=300)
@given(shapes, args)
def test_incomplete_gamma_against_scipy(a, z):
    assert reg_lower_gamma(a, z) == pytest.approx(sp.gammainc(a, z), abs=1e-12)
    q = sp.gammaincc(a, z)
    assert reg_upper_gamma(a, z) == pytest.approx(q, rel=1e-9, abs=1e-300)


def test_upper_tail_relative_accuracy():
    for a, z in [(0.5, 30.0), (1.0, 100.0), (2.0, 60.0), (0.3, 400.0)]:
        exact = float(mpmath.gammainc(a, z, mpmath.inf, regularized=True))
        assert reg_upper_gamma(a, z) == pytest.approx(exact, rel=1e-11)


def test_exponential_special_case():
    z = np.linspace(0, 20, 41)
    np.testing.assert_allclose(reg_upper_gamma(1.0, z), np.exp(-z), rtol=1e-13)


def test_boundaries():
    assert reg_lower_gamma(2.0, 0.0) == 0.0
    assert reg_upper_gamma(2.0, 0.0) == 1.0
    assert reg_upper_gamma(2.0, np.inf) == 0.0


@settings(max_examples=200)
@given(shapes, st.floats(min_value=1e-10, max_value=1 - 1e-10))
def test_inverse_round_trip(a, p):
    # lower root ~ p^(1/a) must be a normal double
    assume(math.log(p) / a > -700)
    z = inv_reg_lower_gamma(a, p)
    assert reg_lower_gamma(a, z) == pytest.approx(p, rel=1e-9, abs=1e-13)
    z2 = inv_reg_upper_gamma(a, p)
    assert reg_upper_gamma(a, z2) == pytest.approx(p, rel=1e-9, abs=1e-13)


def test_inverse_against_scipy():
    for a in (0.2, 1.0, 3.5):
        for p in (1e-6, 0.3, 0.9):
            assert inv_reg_lower_gamma(a, p) == pytest.approx(sp.gammaincinv(a, p), rel=1e-9)


@pytest.mark.parametrize(
    "call",
    [
        lambda: ln_gamma(0.0),
        lambda: ln_gamma(-1.0),
        lambda: reg_lower_gamma(0.0, 1.0),
        lambda: reg_upper_gamma(1.0, -0.5),
        lambda: inv_reg_lower_gamma(1.0, 1.0),
        lambda: inv_reg_upper_gamma(1.0, 0.0),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_inverse_below_smallest_double_returns_zero():
    assert inv_reg_lower_gamma(0.02, 1e-10) == 0.0


def test_scalar_and_array_paths_agree():
    a = np.array([0.05, 0.5, 1.0, 3.0, 30.0, 30.0])
    z = np.array([0.01, 2.0, 1.0, 3.5, 10.0, 45.0])
    lower, upper = reg_lower_gamma(a, z), reg_upper_gamma(a, z)
    for i in range(a.size):
        assert reg_lower_gamma(float(a[i]), float(z[i])) == pytest.approx(lower[i], rel=1e-14, abs=1e-300)
        assert reg_upper_gamma(float(a[i]), float(z[i])) == pytest.approx(upper[i], rel=1e-14, abs=1e-300)
