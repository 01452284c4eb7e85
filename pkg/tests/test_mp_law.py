import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mp_spectra.errors import DomainError
from mp_spectra.mp_law import MPLaw, mp_cdf, mp_density, mp_moment, mp_moment_exact, quadrature_moment


def catalan(k):
    return math.comb(2 * k, k) // (k + 1)


def test_moment_examples():
    assert mp_moment(1, 0.5) == 1.0
    assert mp_moment(2, 1.0) == 2.0
    assert mp_moment(3, 1.0) == 5.0


@pytest.mark.parametrize("k", range(1, 11))
def test_moments_at_unit_ratio_are_catalan(k):
    assert mp_moment_exact(k, 1) == catalan(k)
    assert mp_moment(k, 1.0) == catalan(k)


@given(st.fractions(min_value=Fraction(1, 100), max_value=Fraction(10)))
def test_first_two_moments(y):
    assert mp_moment_exact(1, y) == 1
    assert mp_moment_exact(2, y) == 1 + y


def test_exact_moment_table_half():
    assert [mp_moment_exact(k, Fraction(1, 2)) for k in range(1, 5)] == [1, Fraction(3, 2), Fraction(11, 4), Fraction(45, 8)]


@pytest.mark.parametrize("y", [0.1, 0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("k", range(1, 9))
def test_quadrature_agrees_with_closed_form(y, k):
    assert quadrature_moment(k, y) == pytest.approx(mp_moment(k, y), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("y", [0.25, 0.5, 1.0, 3.0])
def test_continuous_mass(y):
    law = MPLaw(y)
    assert quadrature_moment(0, y) == pytest.approx(1.0, abs=1e-9)
    assert mp_cdf(law.y_plus, y) == pytest.approx(1.0, abs=1e-10)


def test_density_examples():
    assert mp_density(5.0, 1.0) == 0.0
    # (y+ - x)(x - y-) = (4 - 2)(2 - 0) = 4 at the midpoint
    assert mp_density(2.0, 1.0) == pytest.approx(2.0 / (4 * math.pi), rel=1e-14)
    law = MPLaw(0.25)
    assert mp_density(law.y_minus, 0.25) == 0.0


def test_density_vectorised_and_nonnegative():
    x = np.linspace(-1, 8, 1001)
    for y in (0.3, 1.0, 2.5):
        d = mp_density(x, y)
        law = MPLaw(y)
        assert d.shape == x.shape
        assert np.all(d >= 0)
        assert np.all(d[(x <= law.y_minus) | (x >= law.y_plus)] == 0)


def test_cdf_examples_and_atom():
    assert mp_cdf(-0.5, 0.7) == 0.0
    assert mp_cdf(MPLaw(0.5).y_plus, 0.5) == pytest.approx(1.0, abs=1e-10)
    assert mp_cdf(0.0, 2.0) == pytest.approx(0.5, abs=1e-12)
    assert MPLaw(2.0).atom_mass == 0.5
    assert MPLaw(0.5).atom_mass == 0.0


@settings(max_examples=30)
@given(st.floats(0.05, 5.0), st.floats(-1.0, 10.0), st.floats(0.0, 2.0))
def test_cdf_monotone(y, a, gap):
    assert mp_cdf(a, y) <= mp_cdf(a + gap, y) + 1e-12


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 2.0, 3.3, 3.999])
def test_cdf_unit_ratio_closed_form(x):
    # x = 4 sin^2(phi) turns the y = 1 density into (4/pi) cos^2(phi)
    phi = math.asin(math.sqrt(x) / 2)
    assert mp_cdf(x, 1.0) == pytest.approx((2 * phi + math.sin(2 * phi)) / math.pi, abs=1e-10)


@pytest.mark.parametrize("k,y", [(0, 1.0), (1, 0.0), (2, -1.0), (1, float("inf"))])
def test_domain_errors(k, y):
    with pytest.raises(DomainError):
        mp_moment(k, y)
