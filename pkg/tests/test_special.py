import math

import pytest
from scipy import special as sp

from sagin.special import (
    DomainError, QuadratureError, binom, gamma, hyp1f1_kummer, hyp2f1, kummer_polynomial, lower_gamma,
    pochhammer, q_function, q_inverse, quad, self_test,
)


def test_self_test_passes():
    failed = [c for c in self_test() if not c.passed]
    assert not failed


def test_gamma_identities():
    assert gamma(5) == pytest.approx(24.0, rel=1e-12)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert float(lower_gamma(1, math.log(2))) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize('x', [0, -1, -3])
def test_gamma_poles(x):
    with pytest.raises(DomainError):
        gamma(x)


def test_lower_gamma_domain():
    with pytest.raises(DomainError):
        lower_gamma(0, 1.0)
    with pytest.raises(DomainError):
        lower_gamma(1.0, -0.5)


def test_pochhammer():
    assert pochhammer(3.7, 0) == 1.0
    assert pochhammer(3, 4) == pytest.approx(3 * 4 * 5 * 6)
    with pytest.raises(DomainError):
        pochhammer(1.0, -1)


@pytest.mark.parametrize('a', [1, 2, 5, 10])
@pytest.mark.parametrize('z', [0.0, 0.3, 4.0, 25.0])
def test_kummer_matches_scipy(a, z):
    assert float(hyp1f1_kummer(a, z)) == pytest.approx(float(sp.hyp1f1(a, 1, z)), rel=1e-10)


def test_kummer_polynomial_is_finite_for_large_arguments():
    # e^{-z}·₁F₁(a;1;z) grows polynomially, not exponentially
    assert math.isfinite(kummer_polynomial(3, 1e3))
    assert kummer_polynomial(1, 1e3) == 1.0


def test_kummer_rejects_non_integer():
    with pytest.raises(DomainError):
        kummer_polynomial(2.5, 1.0)


@pytest.mark.parametrize('z', [-2.0, -0.5, 0.3, 0.9])
def test_hyp2f1_log_identity(z):
    assert float(hyp2f1(1, 1, 2, z)) == pytest.approx(-math.log1p(-z) / z, rel=1e-10)


def test_hyp2f1_domain():
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 0, 0.5)
    with pytest.raises(DomainError):
        hyp2f1(1, 1, 2, 1.0)


def test_q_function():
    assert float(q_function(0)) == 0.5
    assert float(q_function(1.959964)) == pytest.approx(0.025, abs=1e-7)
    assert float(q_inverse(0.025)) == pytest.approx(1.959964, abs=1e-6)
    assert float(q_inverse(q_function(2.5))) == pytest.approx(2.5, rel=1e-10)


def test_binom_generalized():
    assert binom(5, 2) == 10
    assert binom(0.5, 2) == pytest.approx(-0.125)
    # Integer upper argument terminates
    assert binom(3, 4) == 0


def test_quad_plain():
    assert quad(math.exp, 0.0, 1.0) == pytest.approx(math.e - 1, rel=1e-10)


def test_quad_rejects_non_finite():
    with pytest.raises(QuadratureError):
        quad(lambda x: math.inf, 0.0, 1.0)
