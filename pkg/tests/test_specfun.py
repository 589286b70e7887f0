import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlfock import (
    ConsistencyError,
    ConvergenceError,
    DomainError,
    EvalControl,
    digamma,
    level,
    level_derivative,
    level_elasticity,
    level_function,
    level_spectrum,
    log_gamma,
    log_level,
    mittag_leffler,
)
from mlfock.specfun import _log_level_block, _series_start

mp.mp.dps = 40


def mp_log_level(q, n):
    q = mp.mpf(q)
    return mp.loggamma(q * n + 1) - mp.loggamma(q * (n - 1) + 1)


# --- log_gamma / digamma ---------------------------------------------------


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, 0.0), (2.0, 0.0), (5.0, math.log(24.0)), (3.5, 1.2009736023470742248)],
)
def test_log_gamma_examples(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-15, rel=1e-14)


def test_log_gamma_against_mpmath():
    xs = np.concatenate([
        np.linspace(0.5, 3.0, 251),
        np.geomspace(3.0, 1e6, 400),
        [0.5, 1.4999999, 1.5, 2.4999999, 2.5, 14.999999, 15.0, 1e6],
    ])
    worst = 0.0
    for x in xs:
        exact = mp.loggamma(mp.mpf(float(x)))
        got = log_gamma(float(x))
        if abs(exact) < 1e-3:
            # near the zeros at 1 and 2 only absolute accuracy is meaningful
            err = abs(got - float(exact))
        else:
            err = abs(got - float(exact)) / abs(float(exact))
        worst = max(worst, err)
    assert worst <= 1e-13


def test_log_gamma_small_arguments():
    for x in (1e-3, 0.1, 0.3, 0.49):
        assert log_gamma(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-13)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


def test_digamma_examples():
    assert digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-12)
    assert digamma(2.0) == pytest.approx(0.4227843350984671, abs=1e-12)
    d = digamma(100.0) - (math.log(100.0) - 1 / 200)
    assert abs(d) < 1 / (12 * 100**2)


def test_digamma_against_mpmath():
    for x in np.concatenate([np.linspace(0.5, 10, 96), np.geomspace(10, 1e6, 50)]):
        assert abs(digamma(float(x)) - float(mp.digamma(float(x)))) <= 1e-12


@pytest.mark.parametrize("x", [10.0, 50.0, 100.0, 1000.0])
def test_digamma_asymptotic(x):
    assert abs(digamma(x) - (math.log(x) - 1 / (2 * x))) <= 0.1 / x**2


def test_digamma_domain():
    with pytest.raises(DomainError):
        digamma(0.0)
    with pytest.raises(DomainError):
        digamma(-2.5)


# --- levels --------------------------------------------------------------


@pytest.mark.parametrize(
    "q, n, expected",
    [(1.0, 5, 5.0), (2.0, 2, 12.0), (0.5, 1, math.sqrt(math.pi) / 2), (3.0, 0, 0.0)],
)
def test_level_examples(q, n, expected):
    assert level(q, n) == pytest.approx(expected, rel=1e-14, abs=0)


def test_level_spectrum_examples():
    assert level_spectrum(1.0, 4).levels == pytest.approx([0, 1, 2, 3, 4], rel=1e-14)
    sp = level_spectrum(2.0, 3)
    assert sp.valid
    assert sp.levels == pytest.approx([0, 2, 12, 30], rel=1e-14)
    assert sp.N == 3


@pytest.mark.parametrize("q", [0.3, 0.5, 1.0, 2.0, 3.0, 5.0])
def test_level_against_mpmath(q):
    ns = list(range(1, 60)) + [100, 999, 1000, 5000, 10**5, 10**7, 10**9]
    for n in ns:
        exact = float(mp.exp(mp_log_level(q, n)))
        assert level(q, n) == pytest.approx(exact, rel=5e-14)


@pytest.mark.parametrize("q", [0.3, 0.5, 1.0, 2.0, 5.0])
def test_levels_strictly_increasing(q):
    lv = level_spectrum(q, 10_000).levels
    assert np.all(np.diff(lv) > 0)
    assert np.all(np.isfinite(lv[1:])) and np.all(lv[1:] > 0)


def test_level_one_is_identity():
    for n in range(1, 101):
        assert abs(level(1.0, n) - n) <= 1e-10 * n


@pytest.mark.parametrize("q", [0.5, 2.0])
def test_gamma_ratio_asymptotic(q):
    n = 1000
    assert abs(level(q, n) / (q * n) ** q - 1) <= 1e-3


def test_level_large_index_does_not_overflow():
    # Gamma(q n + 1) alone overflows far below this
    v = level(2.0, 10**6)
    assert math.isfinite(v)
    assert v == pytest.approx(2e6 * (2e6 - 1), rel=1e-13)


def test_vector_block_matches_scalar():
    for q in (0.3, 1.0, 2.5):
        start = max(1, _series_start(q) - 100)
        block = _log_level_block(q, start, start + 300)
        scalar = np.array([log_level(q, float(n)) for n in range(start, start + 300)])
        np.testing.assert_allclose(block, scalar, rtol=4e-16, atol=0)


def test_level_spectrum_strict_and_lenient():
    assert level_spectrum(0.5, 50, strict=False).valid


def test_level_domain():
    with pytest.raises(DomainError):
        level(0.0, 3)
    with pytest.raises(DomainError):
        level(1.0, -1)
    with pytest.raises(DomainError):
        level_spectrum(-1.0, 3)


def test_consistency_error_is_exported():
    assert issubclass(ConsistencyError, RuntimeError)


# --- level function and derivative -------------------------------------------


def test_level_function_interpolates():
    for q in (0.5, 2.0):
        for n in (1, 2, 7):
            assert level_function(q, float(n)) == pytest.approx(level(q, n), rel=1e-14)


def test_level_derivative_examples():
    assert level_derivative(1.0, 3.0) == pytest.approx(1.0, rel=1e-13)
    h = 1e-5
    fd = (level_function(2.0, 2.0 + h) - level_function(2.0, 2.0 - h)) / (2 * h)
    assert level_derivative(2.0, 2.0) == pytest.approx(fd, rel=1e-6)
    assert level_derivative(0.5, 10.0) > 0


def test_level_derivative_finite_differences():
    rng = np.random.default_rng(7)
    xs = rng.uniform(1.0, 50.0, 64)
    qs = rng.choice([0.5, 1.0, 2.0], 64)
    for x, q in zip(xs, qs):
        h = 1e-5 * x
        fd = (level_function(q, x + h) - level_function(q, x - h)) / (2 * h)
        d = level_derivative(q, x)
        assert d > 0
        assert d == pytest.approx(fd, rel=1e-6)


def test_level_derivative_against_mpmath():
    for q, x in [(0.3, 4.5), (2.0, 30.0), (5.0, 200.0), (0.5, 1e5)]:
        qq, xx = mp.mpf(q), mp.mpf(x)
        f = mp.exp(mp.loggamma(qq * xx + 1) - mp.loggamma(qq * (xx - 1) + 1))
        exact = qq * f * (mp.digamma(qq * xx + 1) - mp.digamma(qq * (xx - 1) + 1))
        assert level_derivative(q, x) == pytest.approx(float(exact), rel=1e-11)


def test_elasticity_sign_tracks_q():
    # x f'(x)/f(x) rises toward q for q < 1, falls toward q for q > 1
    xs = [2.0, 10.0, 100.0, 1000.0]
    for q in (0.3, 0.5):
        e = [level_elasticity(q, x) for x in xs]
        assert all(a < b < q for a, b in zip(e, e[1:]))
    for q in (2.0, 5.0):
        e = [level_elasticity(q, x) for x in xs]
        assert all(a > b > q for a, b in zip(e, e[1:]))
    assert level_elasticity(1.0, 37.0) == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.05, 8.0), x=st.floats(1.0, 1e4))
def test_level_function_positive_and_increasing(q, x):
    assert level_function(q, x) > 0
    assert level_derivative(q, x) > 0


# --- Mittag-Leffler ------------------------------------------------------


def test_mittag_leffler_examples():
    for q in (0.3, 1.0, 2.5):
        assert mittag_leffler(q, 0) == 1.0
    assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-14)
    assert mittag_leffler(2.0, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-14)


def test_e1_is_exp():
    rng = np.random.default_rng(3)
    r = 5 * np.sqrt(rng.uniform(0, 1, 100))
    th = rng.uniform(-math.pi, math.pi, 100)
    for z in r * np.exp(1j * th):
        z = complex(z)
        assert abs(mittag_leffler(1.0, z) - cmath.exp(z)) <= 1e-10 * abs(cmath.exp(z))


def test_e2_is_cosh_sqrt():
    for z in np.linspace(0, 10, 101):
        exact = math.cosh(math.sqrt(z))
        assert abs(mittag_leffler(2.0, float(z)) - exact) <= 1e-9 * exact


@pytest.mark.parametrize("q, expected", [(0.5, 5.0089800807622834663), (3.0, 1.1680583133759185255)])
def test_mittag_leffler_at_one(q, expected):
    assert mittag_leffler(q, 1.0) == pytest.approx(expected, rel=1e-13)


def test_mittag_leffler_against_mpmath_series():
    for q, z in [(0.5, -2 + 1j), (1.5, 3 - 4j), (0.7, 6.0), (4.0, 20 + 5j)]:
        qq, zz = mp.mpf(q), mp.mpc(z)
        exact = complex(mp.nsum(lambda n: zz**n / mp.gamma(qq * n + 1), [0, mp.inf]))
        assert abs(mittag_leffler(q, z) - exact) <= 1e-12 * abs(exact)


def test_mittag_leffler_reports_non_convergence():
    with pytest.raises(ConvergenceError) as info:
        mittag_leffler(0.3, 50.0, EvalControl(max_terms=16))
    assert info.value.terms == 16
    assert math.isfinite(abs(info.value.partial))


def test_mittag_leffler_refuses_catastrophic_cancellation():
    # E_1(-40) = 4e-18 is the difference of terms near 1e16
    with pytest.raises(ConvergenceError):
        mittag_leffler(1.0, -40.0)


def test_eval_control_validation():
    with pytest.raises(ValueError):
        EvalControl(rel_tol=0)
    with pytest.raises(ValueError):
        EvalControl(abs_tol=-1)
    with pytest.raises(ValueError):
        EvalControl(max_terms=8)
