import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from translator_lab import specfun
from translator_lab.errors import DomainError, OverflowGuardError

mpmath.mp.dps = 30


def k_quad(x, order):
    # integrand e^{-x cosh t} cosh(order t) is negligible beyond t = 12 for x >= 1
    return float(mpmath.quad(lambda t: mpmath.exp(-x * mpmath.cosh(t)) * mpmath.cosh(order * t), [0, 1, 3, 12]))


def ei_quad(x):
    return float(-mpmath.quad(lambda t: mpmath.exp(-t) / t, [-x, -x + 1, -x + 60]))


def test_quadrature_oracles_match_frozen_values():
    assert k_quad(1.0, 0) == pytest.approx(0.421024438, abs=1e-9)
    assert k_quad(1.0, 1) == pytest.approx(0.601907230, abs=1e-9)
    assert ei_quad(-1.0) == pytest.approx(-0.219383934, abs=1e-9)


# frozen from the quadrature oracles above
def test_frozen_values():
    assert specfun.bessel_k0(1.0) == pytest.approx(0.421024438, abs=1e-9)
    assert specfun.bessel_k1(1.0) == pytest.approx(0.601907230, abs=1e-9)
    assert specfun.bessel_i0(1.0) == pytest.approx(1.266065878, abs=1e-9)
    assert specfun.expint_ei(-1.0) == pytest.approx(-0.219383934, abs=1e-9)


@pytest.mark.parametrize("x", [1e-6, 0.05, 0.7, 1.99, 2.01, 5.0, 12.0, 24.9, 25.1, 60.0, 200.0])
def test_k_against_mpmath(x):
    assert specfun.bessel_k0(x) == pytest.approx(float(mpmath.besselk(0, x)), rel=1e-12)
    assert specfun.bessel_k1(x) == pytest.approx(float(mpmath.besselk(1, x)), rel=1e-12)


@pytest.mark.parametrize("x", [1e-8, 0.3, 1.0, 29.9, 30.1, 100.0, 699.0])
def test_i0_against_series(x):
    ref = mpmath.besseli(0, x)
    assert specfun.bessel_i0(x) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("x", [-1e-8, -0.2, -0.99, -1.01, -3.0, -40.0, -600.0])
def test_ei_against_mpmath(x):
    assert specfun.expint_ei(x) == pytest.approx(float(mpmath.ei(x)), rel=1e-12)


def test_small_and_large_argument_oracles():
    x = 0.01
    lead = -math.log(x / 2) - specfun.EULER_GAMMA
    # next order of the ascending series: (x^2/4)(1 + lead)
    assert abs(specfun.bessel_k0(x) - lead - 0.25 * x * x * (1 + lead)) < 5e-8
    ratio = specfun.bessel_k0(20.0) / (math.sqrt(math.pi / 40.0) * math.exp(-20.0))
    assert 0.97 <= ratio <= 1.0
    assert abs(0.001 * specfun.bessel_k1(0.001) - 1.0) < 1e-5
    ratio = specfun.bessel_i0(50.0) / (math.exp(50.0) / math.sqrt(2 * math.pi * 50.0))
    assert 0.99 <= ratio <= 1.01
    x = -50.0
    assert abs(x * specfun.expint_ei(x) / math.exp(x) - 1.0) < 0.03
    assert specfun.expint_ei(-0.5) < 0


@pytest.mark.xfail(strict=True, reason="true K0(0.01) differs from the two-term limit by 1.43e-4")
def test_k0_two_term_limit_at_0_01():
    x = 0.01
    assert abs(float(mpmath.besselk(0, x)) - (-math.log(x / 2) - specfun.EULER_GAMMA)) < 5e-5


def test_classical_k1_bound():
    for x in np.logspace(-3, math.log10(700), 100):
        dev, bound = specfun.bessel_k1_classical_bound(x)
        assert dev <= bound


def test_classical_k1_bound_slack():
    for x in [0.01, 0.5, 3.0, 30.0, 300.0]:
        dev, bound = specfun.bessel_k1_classical_bound(x)
        assert bound - dev > 0


def _ode_residuals(f, step):
    out = []
    for x in np.logspace(-1, math.log10(50), 100):
        h = step(x)
        fm, f0, fp = f(x - h), f(x), f(x + h)
        out.append(abs((fp - 2 * f0 + fm) / h**2 + (fp - fm) / (2 * h) / x - f0))
    return np.array(out)


@pytest.mark.xfail(strict=False, reason="with h = 1e-4 x the second difference amplifies rounding beyond 1e-6 near x = 0.1")
@pytest.mark.parametrize("name", ["k0", "i0"])
def test_bessel_ode_residual_fixed_relative_step(name):
    assert _ode_residuals(specfun.FUNCTIONS[name], lambda x: 1e-4 * x).max() < 1e-6


@pytest.mark.parametrize("name", ["k0", "i0"])
def test_bessel_ode_residual(name):
    f = specfun.FUNCTIONS[name]
    xs = np.logspace(-1, math.log10(50), 100)
    for x in xs:
        # balances truncation (h^2) against rounding (eps/h^2) across the range
        h = 1e-4 * math.sqrt(x)
        fm, f0, fp = f(x - h), f(x), f(x + h)
        d2 = (fp - 2 * f0 + fm) / h**2
        d1 = (fp - fm) / (2 * h)
        scale = abs(d2) + abs(d1) / x + abs(f0)
        assert abs(d2 + d1 / x - f0) / scale < 1e-6


def test_derivative_identities():
    for x in np.logspace(-1, math.log10(50), 60):
        h = 1e-5 * x
        d = (specfun.bessel_k0(x + h) - specfun.bessel_k0(x - h)) / (2 * h)
        assert abs(d + specfun.bessel_k1(x)) / specfun.bessel_k1(x) < 1e-6
    for x in -np.logspace(-1, math.log10(50), 60):
        h = 1e-5 * abs(x)
        d = (specfun.expint_ei(x + h) - specfun.expint_ei(x - h)) / (2 * h)
        ref = math.exp(x) / x
        assert abs(d - ref) / abs(ref) < 1e-6


def test_monotonicity():
    xs = np.minimum(np.logspace(-8, math.log10(700), 3000), 700.0)
    assert np.all(np.diff(specfun.bessel_k0(xs)) < 0)
    assert np.all(np.diff(specfun.bessel_k1(xs)) < 0)
    i0 = specfun.bessel_i0(xs)
    assert np.all(np.diff(i0) >= 0)
    # below 1e-4 the increment x^2/4 is under half an ulp of 1
    assert np.all(np.diff(i0[xs >= 1e-4]) > 0)


@pytest.mark.parametrize("seam", [specfun.SERIES_MAX_K, specfun.ASYMPTOTIC_MIN_K])
def test_k_branch_seams_agree(seam):
    lo, hi = np.nextafter(seam, 0), np.nextafter(seam, np.inf)
    assert specfun.bessel_k0e(lo) == pytest.approx(specfun.bessel_k0e(hi), rel=1e-12)
    assert specfun.bessel_k1e(lo) == pytest.approx(specfun.bessel_k1e(hi), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-8, max_value=700.0))
def test_scaled_forms_consistent(x):
    assert specfun.bessel_k0e(x) == pytest.approx(float(mpmath.besselk(0, x) * mpmath.exp(x)), rel=1e-12)
    assert specfun.bessel_i0e(x) == pytest.approx(float(mpmath.besseli(0, x) * mpmath.exp(-x)), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=-700.0, max_value=-1e-8))
def test_ei_scaled_against_mpmath(x):
    assert specfun.expint_ei_scaled(x) == pytest.approx(float(mpmath.ei(x) * mpmath.exp(-x)), rel=1e-12)


def test_errors():
    for bad in [0.0, -1.0, math.nan, math.inf]:
        with pytest.raises(DomainError):
            specfun.bessel_k0(bad)
    with pytest.raises(DomainError):
        specfun.bessel_i0(-0.1)
    with pytest.raises(OverflowGuardError):
        specfun.bessel_i0(701.0)
    with pytest.raises(DomainError):
        specfun.expint_ei(0.0)


def test_evaluate_error_estimate():
    r = specfun.evaluate("k0", 1.0)
    assert r.est_abs_error <= 1e-12 * max(1.0, abs(r.value))
    with pytest.raises(DomainError):
        specfun.evaluate("j0", 1.0)
