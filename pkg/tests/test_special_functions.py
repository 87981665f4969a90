"""Special-function kernels against high-precision references.

mpmath supplies the reference values; the tolerance is relative with an
absolute floor because log-gamma crosses zero at x = 1 and x = 2, where
a purely relative bound is meaningless.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evidact import digamma, log_gamma, trigamma

EULER_GAMMA = 0.5772156649015329


def _assert_close(got, want, rel=1e-12, floor=1e-12):
    err = np.abs(got - np.asarray(want, dtype=np.float64))
    tol = np.maximum(rel * np.abs(want), floor)
    assert (err <= tol).all(), f"worst err {err.max():.3e} vs tol {tol[np.argmax(err)]:.3e}"


@pytest.fixture(scope="module")
def grid():
    # dense log grid through the recurrence region plus the asymptotic tail
    return np.concatenate(
        [
            np.exp(np.linspace(np.log(1e-4), np.log(50.0), 400)),
            np.linspace(0.5, 30.0, 301),
            np.array([1.0, 2.0, 0.5, 1.5, 9.99, 10.0, 10.01, 1e4, 1e6]),
        ]
    )


def test_log_gamma_matches_mpmath(kernels, grid):
    want = [float(mpmath.loggamma(x)) for x in grid]
    _assert_close(kernels.log_gamma_arr(grid), want)


def test_digamma_matches_mpmath(kernels, grid):
    want = [float(mpmath.digamma(x)) for x in grid]
    _assert_close(kernels.digamma_arr(grid), want, floor=1e-10)


def test_trigamma_matches_mpmath(kernels, grid):
    want = [float(mpmath.polygamma(1, x)) for x in grid]
    _assert_close(kernels.trigamma_arr(grid), want, floor=1e-10)


def test_known_values(kernels):
    assert kernels.log_gamma_arr(np.array([0.5]))[0] == pytest.approx(0.5 * math.log(math.pi), abs=1e-14)
    assert kernels.log_gamma_arr(np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-14)
    assert kernels.log_gamma_arr(np.array([5.0]))[0] == pytest.approx(math.log(24.0), abs=1e-13)
    assert kernels.digamma_arr(np.array([1.0]))[0] == pytest.approx(-EULER_GAMMA, abs=1e-13)
    assert kernels.digamma_arr(np.array([2.0]))[0] == pytest.approx(1.0 - EULER_GAMMA, abs=1e-13)
    assert kernels.trigamma_arr(np.array([1.0]))[0] == pytest.approx(math.pi**2 / 6.0, abs=1e-12)
    assert kernels.trigamma_arr(np.array([0.5]))[0] == pytest.approx(math.pi**2 / 2.0, abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e5))
def test_recurrences_hold(x):
    # lgamma(x+1) = lgamma(x) + ln x, psi(x+1) = psi(x) + 1/x,
    # psi'(x+1) = psi'(x) - 1/x^2
    pair = np.array([x, x + 1.0])
    lg = log_gamma(pair)
    assert lg[1] - lg[0] == pytest.approx(math.log(x), rel=1e-10, abs=1e-10)
    dg = digamma(pair)
    assert dg[1] - dg[0] == pytest.approx(1.0 / x, rel=1e-9, abs=1e-10)
    tg = trigamma(pair)
    assert tg[1] - tg[0] == pytest.approx(-1.0 / x**2, rel=1e-8, abs=1e-10)


def test_wrapper_validates_domain():
    for fn in (log_gamma, digamma, trigamma):
        with pytest.raises(ValueError):
            fn(np.array([0.0]))
        with pytest.raises(ValueError):
            fn(np.array([-1.5]))
        with pytest.raises(ValueError):
            fn(np.array([np.nan]))


def test_wrapper_accepts_scalars_and_shapes():
    assert isinstance(log_gamma(3.5), float)
    out = digamma(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert out.shape == (2, 2)


def test_backends_agree(grid):
    kernels_cy = pytest.importorskip("evidact._kernels_cy")
    import evidact._kernels_np as kernels_np

    for name in ("log_gamma_arr", "digamma_arr", "trigamma_arr"):
        a = getattr(kernels_cy, name)(grid)
        b = getattr(kernels_np, name)(grid)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-13)
