import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fraclab.errors import NotConverged, UsageError
from fraclab.mlf import mittag_leffler, mittag_leffler_array, mlf_decay_bound


def reference(alpha, z):
    """High-precision series with enough digits to absorb the cancellation."""
    s = abs(z)
    digits = 40 + int((s ** (1 / alpha) if s > 1 else 0) / math.log(10))
    with mp.workdps(digits):
        a, zz = mp.mpf(alpha), mp.mpf(z)
        total, term_z, n = mp.mpf(0), mp.mpf(1), 0
        while True:
            term = term_z / mp.gamma(a * n + 1)
            total += term
            if n > 5 and abs(term) < mp.mpf(10) ** (-45) and a * n > s ** (1 / alpha):
                return float(total)
            n += 1
            term_z *= zz


def test_zero():
    for a in (0.1, 0.5, 1.0):
        assert mittag_leffler(a, 0.0) == 1.0


def test_exp():
    assert mittag_leffler(1.0, 1.0) == pytest.approx(math.e, rel=1e-15)


def test_erfc_identity():
    assert abs(mittag_leffler(0.5, -1.0) - math.e * special.erfc(1.0)) <= 1e-12
    assert mittag_leffler(0.5, -1.0) == pytest.approx(0.4275836, abs=1e-7)


@pytest.mark.parametrize("z", [-3.0, -0.5, 0.7, 2.0])
def test_half_order_closed_form(z):
    assert mittag_leffler(0.5, z) == pytest.approx(math.exp(z * z) * special.erfc(-z), rel=1e-12)


@pytest.mark.parametrize("method", ["auto", "series"])
def test_alpha_one_matches_exp(method):
    for z in np.linspace(-20, 20, 41):
        assert abs(mittag_leffler(1.0, z, method=method) - math.exp(z)) <= 1e-12 * max(1, math.exp(z))


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
@pytest.mark.parametrize("z", [-0.3, -1.0, -2.5, -7.0, 1.5])
def test_against_reference(alpha, z):
    if z < 0 and abs(z) ** (1 / alpha) > 300:
        pytest.skip("reference series would need hundreds of digits")
    ref = reference(alpha, z)
    assert abs(mittag_leffler(alpha, z) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("alpha", [0.5, 0.8, 0.9])
def test_branch_overlap(alpha):
    for s in np.linspace(1, 10, 7):
        a = mittag_leffler(alpha, -s, method="series")
        b = mittag_leffler(alpha, -s, method="spectral")
        assert abs(a - b) <= 1e-9


def test_branch_overlap_small_order():
    for s in (1.0, 2.0, 4.0):
        assert abs(mittag_leffler(0.3, -s, method="series")
                   - mittag_leffler(0.3, -s, method="spectral")) <= 1e-9


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_completely_monotone_spot_check(alpha):
    s = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 60)])
    v = mittag_leffler_array(alpha, -s)
    assert np.all(v > 0) and np.all(v <= 1)
    assert np.all(np.diff(v) <= 0)


@given(st.floats(0.05, 0.99), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
@settings(max_examples=60, deadline=None)
def test_decreasing_in_magnitude(alpha, s1, s2):
    lo, hi = sorted((s1, s2))
    a, b = mittag_leffler(alpha, -lo), mittag_leffler(alpha, -hi)
    assert 0 < b <= a + 1e-14 <= 1 + 1e-14


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_asymptotic_tail(alpha):
    s = 1e3
    assert mittag_leffler(alpha, -s) * s == pytest.approx(1 / math.gamma(1 - alpha), rel=0.02)


def test_decay_bound():
    assert mlf_decay_bound(0.5, 0.5, 0.0) == 1.0
    assert mlf_decay_bound(0.5, 0.5, 1.0) == pytest.approx(0.4275836, abs=1e-7)
    t = np.linspace(0, 10, 30)
    v = mlf_decay_bound(0.6, 1.0, t)
    assert v.shape == t.shape and np.all(np.diff(v) <= 0)
    # 2 mu t^alpha = 10^3
    alpha, mu = 0.5, 0.5
    t_big = (1e3 / (2 * mu)) ** (1 / alpha)
    assert mlf_decay_bound(alpha, mu, t_big) * 1e3 == pytest.approx(1 / math.gamma(1 - alpha), rel=0.02)


def test_errors():
    with pytest.raises(UsageError):
        mittag_leffler(1.2, 1.0)
    with pytest.raises(UsageError):
        mittag_leffler(0.5, 1.0, tol=1e-15)
    with pytest.raises(UsageError):
        mittag_leffler(0.5, 1.0, method="spectral")
    with pytest.raises(UsageError):
        mittag_leffler(0.5, -1.0, method="nope")
    with pytest.raises(UsageError):
        mlf_decay_bound(0.5, 0.0, 1.0)


def test_series_refuses_hopeless_cancellation():
    with pytest.raises(NotConverged):
        mittag_leffler(0.1, -50.0, method="series")
