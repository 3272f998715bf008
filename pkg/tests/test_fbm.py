import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fraclab import fbm
from fraclab.errors import UsageError
from fraclab.fbm import (
    fbm_covariance,
    fgn_autocovariance,
    fgn_covariance,
    sample_fbm,
    sample_fbm_batch,
)
from fraclab.fracops import Grid
from fraclab.rng import RngSeed, generator


def test_covariance_examples():
    assert fbm_covariance(0.5, 1.0, 2.0) == 1.0
    assert fbm_covariance(0.6, 1.0, 1.0) == 1.0
    assert fbm_covariance(0.6, 2.0, 2.0) == pytest.approx(2**1.2, rel=1e-14)
    assert fbm_covariance(0.6, 0.0, 3.0) == 0.0
    with pytest.raises(UsageError):
        fbm_covariance(0.5, -1.0, 1.0)
    with pytest.raises(UsageError):
        fbm_covariance(1.0, 1.0, 1.0)


def test_fgn_rules():
    assert fgn_covariance(0.5, 3) == 0.0
    assert fgn_covariance(0.7, 0, k=0.25) == pytest.approx(0.25**1.4)
    assert fgn_covariance(0.7, 2) > 0
    assert fgn_covariance(0.3, 2) < 0
    assert fgn_covariance(0.6, 1) == pytest.approx(0.5 * (2**1.2 - 2))
    assert fgn_covariance(0.6, 1) * 2 == pytest.approx(2**0.2 * 2 - 2)
    assert 2**0.2 == pytest.approx(1.1486984, abs=1e-7)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_fgn_asymptotic_lag(H):
    j = 10_000
    assert fgn_covariance(H, j) == pytest.approx(H * (2 * H - 1) * j ** (2 * H - 2), rel=0.02)


def test_fgn_sum_identity():
    # variance of B(N k) recovered from the increment covariance
    H, N, k = 0.65, 40, 0.1
    g = fgn_autocovariance(H, N, k)
    total = N * g[0] + 2 * np.sum((N - np.arange(1, N)) * g[1:])
    assert total == pytest.approx((N * k) ** (2 * H), rel=1e-12)


def test_brownian_increments_are_normal():
    g = Grid(1.0, 256)
    B = sample_fbm(0.5, g, 17).B
    z = np.diff(B) / np.sqrt(g.k)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_determinism_and_batch():
    g = Grid(2.0, 64)
    a = sample_fbm(0.7, g, RngSeed(5, 3)).B
    b = sample_fbm(0.7, g, RngSeed(5, 3)).B
    assert np.array_equal(a, b)
    batch = sample_fbm_batch(0.7, g, 5, [2, 3, 4])
    assert np.array_equal(batch[1], a)
    assert not np.array_equal(batch[0], batch[2])
    assert batch[0, 0] == 0.0


def test_dB():
    p = sample_fbm(0.4, Grid(1.0, 8), 2)
    assert p.dB[0] == 0
    assert np.allclose(np.cumsum(p.dB), p.B)


def _batch(H, g, n, master):
    return sample_fbm_batch(H, g, master, range(n))


@pytest.mark.parametrize("H", [0.25, 0.5, 0.8])
def test_marginal_variance(H):
    g = Grid(1.0, 32)
    B = _batch(H, g, 20_000, 11)
    for n in (8, 32):
        v = np.var(B[:, n])
        se = v * np.sqrt(2 / B.shape[0])
        assert abs(v - g.t(n) ** (2 * H)) <= 3 * se + 1e-12


def test_self_similarity():
    H, S = 0.7, 20_000
    g1, g2 = Grid(1.0, 16), Grid(2.0, 16)
    B1, B2 = _batch(H, g1, S, 1)[:, -1], _batch(H, g2, S, 2)[:, -1]
    ratio = np.var(B2) / np.var(B1)
    se = ratio * np.sqrt(4 / S)
    assert abs(ratio - 2 ** (2 * H)) <= 3 * se


def test_increment_stationarity():
    H, S = 0.3, 20_000
    g = Grid(1.0, 32)
    B = _batch(H, g, S, 9)
    d_early = B[:, 4] - B[:, 0]
    d_late = B[:, 32] - B[:, 28]
    expected = (4 * g.k) ** (2 * H)
    for d in (d_early, d_late):
        v = np.var(d)
        assert abs(v - expected) <= 3 * v * np.sqrt(2 / S)


def test_covariance_matrix():
    H, S = 0.6, 40_000
    g = Grid(1.0, 8)
    B = _batch(H, g, S, 21)[:, 1:]
    emp = B.T @ B / S
    ref = fbm_covariance(H, g.times[1:, None], g.times[None, 1:])
    assert np.max(np.abs(emp - ref)) < 0.05


def test_cholesky_fallback(monkeypatch):
    g = Grid(1.0, 16)
    monkeypatch.setattr(fbm, "EMBEDDING_TOL", -2.0)
    monkeypatch.setattr(fbm, "_SAMPLERS", {})
    s = fbm._sampler(0.7, g.N, g.k)
    assert s.method == "cholesky"
    S = 20_000
    B = _batch(0.7, g, S, 4)
    v = np.var(B[:, -1])
    assert abs(v - 1.0) <= 3 * v * np.sqrt(2 / S)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
@settings(max_examples=20, deadline=None)
def test_rng_streams(master, stream):
    a = generator(RngSeed(master, stream)).random(4)
    b = generator(master, stream).random(4)
    assert np.array_equal(a, b)


def test_rng_validation():
    with pytest.raises(UsageError):
        generator(-1)
    assert RngSeed(3).child(7) == RngSeed(3, 7)
    assert not np.array_equal(generator(RngSeed(3, 0)).random(3), generator(RngSeed(3, 1)).random(3))
