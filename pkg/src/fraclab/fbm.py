r"""Fractional Brownian motion on a uniform grid.

Paths are generated from their increments (fractional Gaussian noise) by
circulant embedding (Davies-Harte): the autocovariance of the increments is
embedded in a circulant matrix of size ``2N`` whose eigenvalues come from one
FFT. Should any eigenvalue be negative beyond rounding, the exact Toeplitz
covariance is factorized by Cholesky instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EmbeddingFailure, UsageError
from .fracops import Grid
from .rng import RngSeed, generator

__all__ = [
    "FbmPath",
    "check_hurst",
    "fbm_covariance",
    "fgn_autocovariance",
    "fgn_covariance",
    "sample_fbm",
    "sample_fbm_batch",
]

log = logging.getLogger(__name__)

EMBEDDING_TOL = 1e-9


def check_hurst(H: float) -> float:
    H = float(H)
    if not 0.0 < H < 1.0:
        raise UsageError(f"Hurst parameter must lie in (0, 1), got {H!r}")
    return H


def fbm_covariance(H: float, s, t):
    """:math:`R_H(s, t) = \\tfrac12 (s^{2H} + t^{2H} - |t - s|^{2H})`."""
    H = check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise UsageError("times must be nonnegative")
    h2 = 2.0 * H
    out = 0.5 * (s**h2 + t**h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def fgn_covariance(H: float, j, k: float = 1.0):
    """Autocovariance of fBm increments over steps of length *k* at lag *j*."""
    H = check_hurst(H)
    if k <= 0:
        raise UsageError("step must be positive")
    j = np.abs(np.asarray(j, dtype=float))
    h2 = 2.0 * H
    out = 0.5 * k**h2 * (np.abs(j + 1) ** h2 - 2 * j**h2 + np.abs(j - 1) ** h2)
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(H: float, N: int, k: float = 1.0) -> np.ndarray:
    return fgn_covariance(H, np.arange(N), k)


@dataclass
class FbmPath:
    H: float
    grid: Grid
    B: np.ndarray

    @property
    def dB(self) -> np.ndarray:
        """Increments ``dB[m] = B[m] - B[m-1]`` for ``m = 1..N`` (index 0 unused, zero)."""
        out = np.zeros_like(self.B)
        out[1:] = np.diff(self.B)
        return out


class _FgnSampler:
    """Maps standard normal draws to fGn increments for a fixed (H, N, k)."""

    def __init__(self, H: float, N: int, k: float):
        self.H, self.N, self.k = H, N, k
        gamma = fgn_autocovariance(H, N + 1, k)
        row = np.concatenate([gamma[: N + 1], gamma[N - 1 : 0 : -1]])
        eig = np.fft.fft(row).real
        M = row.size
        self.method = "circulant"
        if eig.min() < -EMBEDDING_TOL * eig.max():
            log.warning("circulant embedding lost definiteness (min eig %.3e); "
                        "using Cholesky", eig.min())
            self.method = "cholesky"
            try:
                self.chol = scipy.linalg.cholesky(
                    scipy.linalg.toeplitz(gamma[:N]), lower=True)
            except np.linalg.LinAlgError as exc:
                raise EmbeddingFailure("fGn covariance is not positive definite") from exc
            self.n_normals = N
        else:
            self.sqrt_eig = np.sqrt(np.clip(eig, 0.0, None) / M)
            self.n_normals = 2 * M

    def increments(self, normals: np.ndarray) -> np.ndarray:
        """*normals* has shape ``(..., n_normals)``; returns ``(..., N)`` increments."""
        N = self.N
        if self.method == "cholesky":
            return normals @ self.chol.T
        M = self.sqrt_eig.size
        w = normals[..., :M] + 1j * normals[..., M:]
        return np.fft.fft(self.sqrt_eig * w, axis=-1)[..., :N].real


_SAMPLERS: dict[tuple[float, int, float], _FgnSampler] = {}


def _sampler(H: float, N: int, k: float) -> _FgnSampler:
    key = (H, N, k)
    if key not in _SAMPLERS:
        if len(_SAMPLERS) > 32:
            _SAMPLERS.clear()
        _SAMPLERS[key] = _FgnSampler(H, N, k)
    return _SAMPLERS[key]


def sample_fbm(H: float, grid: Grid, seed: RngSeed | int) -> FbmPath:
    """Draw one fBm path on *grid*; identical seeds give identical paths."""
    H = check_hurst(H)
    sampler = _sampler(H, grid.N, grid.k)
    z = generator(seed).standard_normal(sampler.n_normals)
    B = np.zeros(grid.N + 1)
    B[1:] = np.cumsum(sampler.increments(z))
    return FbmPath(H, grid, B)


def sample_fbm_batch(H: float, grid: Grid, master: int, streams) -> np.ndarray:
    """fBm paths for each stream id in *streams*, shape ``(len(streams), N + 1)``.

    Row *i* equals ``sample_fbm(H, grid, RngSeed(master, streams[i])).B``.
    """
    H = check_hurst(H)
    sampler = _sampler(H, grid.N, grid.k)
    streams = list(streams)
    z = np.empty((len(streams), sampler.n_normals))
    for i, s in enumerate(streams):
        z[i] = generator(RngSeed(master, s)).standard_normal(sampler.n_normals)
    B = np.zeros((len(streams), grid.N + 1))
    B[:, 1:] = np.cumsum(sampler.increments(z), axis=1)
    return B
