import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import jn_zeros, jv, jvp

from nonscat.bessel import bessel_first_zero, bessel_zeros, besselj, besselj_derivs, is_integer_order

# frozen: scipy.special.jn_zeros(2, 1)[0] and the first positive root of tan x = x
J2_FIRST_ZERO = 5.135622301840683
J32_FIRST_ZERO = 4.493409457909064

ORDERS = [0.0, 1.0, 1.0 / 3.0, 1.5, 2.5, 3.5, 7.0, 12.25]


@pytest.mark.parametrize("mu", ORDERS)
def test_values_match_reference_across_regimes(mu):
    x = np.concatenate([np.linspace(1e-3, 2.0, 50), np.linspace(2.0, 25.0, 200), np.linspace(25.0, 80.0, 100)])
    assert np.max(np.abs(besselj(mu, x) - jv(mu, x))) < 1e-12


@pytest.mark.parametrize("mu", ORDERS)
def test_derivatives_match_reference(mu):
    x = np.linspace(0.05, 40.0, 300)
    d = besselj_derivs(mu, x)
    assert np.max(np.abs(d[1] - jvp(mu, x, 1))) < 1e-11
    assert np.max(np.abs(d[2] - jvp(mu, x, 2))) < 1e-10


@settings(max_examples=60, deadline=None)
@given(mu=st.floats(1.0, 10.0), x=st.floats(0.1, 60.0))
def test_three_term_recurrence(mu, x):
    lhs = besselj(mu - 1, x) + besselj(mu + 1, x)
    assert abs(lhs - 2 * mu / x * besselj(mu, x)) < 1e-11 * max(1.0, 2 * mu / x)


def test_frozen_zeros():
    assert abs(bessel_first_zero(2.0) - J2_FIRST_ZERO) < 1e-13
    assert abs(bessel_first_zero(1.5) - J32_FIRST_ZERO) < 1e-13


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_integer_zeros_match_reference(n):
    assert np.allclose(bessel_zeros(float(n), 6), jn_zeros(n, 6), rtol=0, atol=1e-12)


@pytest.mark.parametrize("mu", [0.5, 1.5, 2.5])
def test_half_integer_zeros_are_roots(mu):
    zs = bessel_zeros(mu, 5)
    assert np.all(np.diff(zs) > 0)
    assert np.max(np.abs(jv(mu, zs))) < 1e-13
    if mu == 0.5:
        assert np.allclose(zs, math.pi * np.arange(1, 6), atol=1e-12)


def test_derivative_zeros():
    zs = bessel_zeros(1.0, 3, derivative=True)
    assert np.max(np.abs(jvp(1.0, zs))) < 1e-12


def test_integer_order_detection():
    assert is_integer_order(3.0) and not is_integer_order(1.5)
