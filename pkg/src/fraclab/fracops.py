r"""Deconvolution-based discrete Caputo operator and discrete fractional integral.

The fractional integral of a piecewise-constant function :math:`F` on a
uniform grid with step :math:`k` is

.. math::

    (J_k F)_n = k^\alpha \sum_{m=1}^{n} a_{n-m} F_m,
    \qquad a_j = \frac{(j+1)^\alpha - j^\alpha}{\Gamma(1+\alpha)},

and the discrete Caputo derivative is its convolution inverse,

.. math::

    (\mathcal{D}^\alpha X)_n = k^{-\alpha}\Big(c_0 X_n
        - \sum_{i=1}^{n-1} c_i X_{n-i} - c^n_n X_0\Big),

with :math:`c_0 = a^{(-1)}_0`, :math:`c_i = -a^{(-1)}_i` and
:math:`c^n_n = c_0 - \sum_{i=1}^{n-1} c_i`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import TableTooShort, UsageError, ZeroLeadingCoefficient

__all__ = [
    "CoefficientTable",
    "Grid",
    "L1Coefficients",
    "Path",
    "caputo_coefficients",
    "check_complete_monotone",
    "check_order",
    "convolution_inverse",
    "discrete_caputo",
    "discrete_frac_integral",
    "generating_partial",
    "integral_weights",
    "l1_coefficients",
]

CM_TOL = 1e-12


def check_order(alpha: float, *, allow_one: bool = False) -> float:
    """Validate a fractional order and return it as a float."""
    alpha = float(alpha)
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise UsageError(f"fractional order must lie in {bound}, got {alpha!r}")
    return alpha


# {{{ grid and paths


@dataclass(frozen=True)
class Grid:
    """Uniform time grid :math:`t_n = n k` on :math:`[0, T]` with :math:`k = T/N`."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not (self.T > 0 and math.isfinite(self.T)):
            raise UsageError(f"time horizon must be positive, got {self.T!r}")
        if int(self.N) != self.N or self.N < 1:
            raise UsageError(f"step count must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def from_step(cls, k: float, T: float) -> Grid:
        """Grid with step *k* covering ``[0, T]``; *T* must be a multiple of *k*."""
        N = round(T / k)
        if N < 1 or abs(N * k - T) > 1e-9 * T:
            raise UsageError(f"T={T} is not an integer multiple of k={k}")
        return cls(T=N * k, N=N)

    @property
    def k(self) -> float:
        return self.T / self.N

    def t(self, n: int) -> float:
        return n * self.k

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.k

    def refine(self, factor: int = 2) -> Grid:
        return Grid(self.T, self.N * factor)


@dataclass
class Path:
    """Vector-valued trajectory ``values[n]`` at the nodes of a :class:`Grid`.

    ``values`` has shape ``(N + 1, dim)``; scalar input is promoted.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != self.grid.N + 1:
            raise UsageError(
                f"path needs {self.grid.N + 1} rows, got shape {values.shape}")
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        """The single component of a 1-D path."""
        if self.dim != 1:
            raise UsageError("path is not scalar")
        return self.values[:, 0]

    def __len__(self) -> int:
        return self.values.shape[0]


# }}}


# {{{ coefficient sequences


def integral_weights(alpha: float, n_max: int) -> np.ndarray:
    """Quadrature weights :math:`a_n = ((n+1)^\\alpha - n^\\alpha)/\\Gamma(1+\\alpha)`.

    The difference of powers is evaluated as
    :math:`n^\\alpha \\operatorname{expm1}(\\alpha \\log(1 + 1/n))` so that the
    weights keep full relative precision for large *n*.
    """
    alpha = check_order(alpha, allow_one=True)
    if n_max < 0:
        raise UsageError("n_max must be nonnegative")

    n = np.arange(1, n_max + 1, dtype=float)
    a = np.empty(n_max + 1)
    a[0] = 1.0
    a[1:] = n**alpha * np.expm1(alpha * np.log1p(1.0 / n))
    return a / math.gamma(1.0 + alpha)


def convolution_inverse(seq: Sequence[float], n_max: int | None = None,
                        *, dtype: type = np.longdouble) -> np.ndarray:
    """Convolution inverse :math:`b` of *seq*, i.e. ``seq * b = (1, 0, 0, ...)``.

    Uses the triangular recurrence
    :math:`b_n = -b_0 \\sum_{j=1}^n s_j b_{n-j}` with the sums accumulated in
    extended precision (``numpy.longdouble``) and the result rounded to
    ``float64``.

    Raises
    ------
    ZeroLeadingCoefficient
        If ``seq[0] == 0``.
    """
    s = np.asarray(seq, dtype=float)
    if n_max is None:
        n_max = s.size - 1
    if s.size < n_max + 1:
        s = np.concatenate([s, np.zeros(n_max + 1 - s.size)])
    if s[0] == 0.0:
        raise ZeroLeadingCoefficient("leading coefficient is zero")

    s_ext = s[: n_max + 1].astype(dtype)
    b = np.zeros(n_max + 1, dtype=dtype)
    inv0 = dtype(1) / s_ext[0]
    b[0] = inv0
    for n in range(1, n_max + 1):
        b[n] = -inv0 * np.dot(s_ext[1 : n + 1], b[n - 1 :: -1])
    return b


@dataclass(frozen=True)
class CoefficientTable:
    """Weights of the discrete fractional integral and Caputo derivative.

    All arrays have length ``n_max + 1`` and are read-only. ``c_tail[n]`` is
    the weight on the initial value at step *n*; ``c_tail[0]`` holds the
    empty-sum value ``c[0]`` and is never used by the schemes.
    """

    alpha: float
    n_max: int
    a: np.ndarray = field(repr=False)
    a_inv: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)
    c_tail: np.ndarray = field(repr=False)

    def require(self, N: int) -> None:
        if N > self.n_max:
            raise TableTooShort(f"table covers {self.n_max} steps, {N} requested")

    @property
    def c0(self) -> float:
        return float(self.c[0])


@functools.lru_cache(maxsize=64)
def _build_table(alpha: float, n_max: int) -> CoefficientTable:
    a = integral_weights(alpha, n_max)
    a_inv_ext = convolution_inverse(a, n_max)

    c_tail_ext = np.empty(n_max + 1, dtype=np.longdouble)
    c_tail_ext[0] = a_inv_ext[0]
    # c_tail[n] = c_0 - sum_{i=1}^{n-1} c_i = sum_{i=0}^{n-1} a_inv[i]
    c_tail_ext[1:] = np.cumsum(a_inv_ext)[:-1]

    a_inv = a_inv_ext.astype(float)
    c = -a_inv
    c[0] = a_inv[0]
    c_tail = c_tail_ext.astype(float)
    for arr in (a, a_inv, c, c_tail):
        arr.flags.writeable = False
    return CoefficientTable(alpha=alpha, n_max=n_max, a=a, a_inv=a_inv, c=c, c_tail=c_tail)


def caputo_coefficients(alpha: float, n_max: int) -> CoefficientTable:
    """Build (or fetch from cache) the coefficient table for order *alpha*."""
    alpha = check_order(alpha)
    if n_max < 1:
        raise UsageError("n_max must be at least 1")
    return _build_table(alpha, int(n_max))


class L1Coefficients(NamedTuple):
    c0: float
    c: np.ndarray
    """Interior weights ``c[j - 1]`` for ``1 <= j <= n - 1``."""
    c_tail: float


def l1_coefficients(alpha: float, n: int) -> L1Coefficients:
    """Coefficients of the classical :math:`L^1` scheme at step *n*."""
    alpha = check_order(alpha)
    if n < 1:
        raise UsageError("n must be at least 1")
    g = math.gamma(2.0 - alpha)
    beta = 1.0 - alpha
    j = np.arange(1, n, dtype=float)
    cj = -((j + 1) ** beta - 2 * j**beta + (j - 1) ** beta) / g
    c_tail = (n**beta - (n - 1) ** beta) / g
    return L1Coefficients(1.0 / g, cj, c_tail)


# }}}


# {{{ operators


def _history_conv(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``out[n] = sum_{m=1}^{n} weights[n - m] * values[m]`` for each column."""
    N = values.shape[0] - 1
    out = np.zeros_like(values)
    for d in range(values.shape[1]):
        v = values[:, d].copy()
        v[0] = 0.0
        out[:, d] = np.convolve(weights[: N + 1], v)[: N + 1]
    return out


def discrete_caputo(table: CoefficientTable, X: Path, X0=None) -> Path:
    """Apply the discrete Caputo operator to *X* with initial value *X0*.

    *X0* defaults to ``X.values[0]``. The returned path has ``D[0] = 0``.
    """
    N = X.grid.N
    table.require(N)
    x0 = X.values[0] if X0 is None else np.broadcast_to(
        np.asarray(X0, dtype=float), (X.dim,))

    c = table.c
    hist = _history_conv(np.concatenate([[0.0], c[1:N]]), X.values)
    # hist[n] = sum_{i=1}^{n-1} c_i X_{n-i}
    D = c[0] * X.values - hist - table.c_tail[: N + 1, None] * x0[None, :]
    D[0] = 0.0
    return Path(X.grid, D * X.grid.k ** (-table.alpha))


def discrete_frac_integral(table: CoefficientTable, F: Path) -> Path:
    """Discrete fractional integral :math:`(J_k F)_n`; ``F[0]`` is ignored."""
    N = F.grid.N
    table.require(N)
    Y = _history_conv(table.a, F.values)
    return Path(F.grid, Y * F.grid.k**table.alpha)


# }}}


# {{{ sequence diagnostics


def check_complete_monotone(seq: Sequence[float], depth: int = 12,
                            tol: float = CM_TOL) -> bool:
    """Finite-depth complete-monotonicity test.

    Returns True iff every forward difference
    :math:`((I - S)^j v)_m \\ge -\\mathrm{tol}` for ``0 <= j <= depth``.
    """
    if depth < 1:
        raise UsageError("depth must be at least 1")
    v = np.asarray(seq, dtype=float)
    for _ in range(depth + 1):
        if v.size == 0:
            break
        if v.min() < -tol:
            return False
        v = v[:-1] - v[1:]
    return True


def generating_partial(seq: Sequence[float], z: float, terms: int | None = None) -> float:
    """Partial sum :math:`\\sum_{n < \\mathrm{terms}} v_n z^n` of the generating function."""
    if not abs(z) < 1:
        raise UsageError("generating functions are summed for |z| < 1 only")
    v = np.asarray(seq, dtype=float)
    if terms is None:
        terms = v.size
    if terms > v.size:
        raise UsageError(f"sequence has {v.size} terms, {terms} requested")
    powers = np.power(float(z), np.arange(terms))
    return math.fsum(v[:terms] * powers)


# }}}
