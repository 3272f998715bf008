r"""Mittag-Leffler function :math:`E_\alpha(z)` for real arguments.

Two evaluation branches are provided:

* ``"series"``: the Taylor series :math:`\sum_n z^n/\Gamma(n\alpha + 1)`.
  Summed with :func:`math.fsum` when cancellation is harmless and in
  extended precision (:mod:`mpmath`) otherwise.
* ``"spectral"``: for :math:`z = -s < 0`, the completely monotone
  representation

  .. math::

      E_\alpha(-s) = \int_0^\infty e^{-r s^{1/\alpha}} K_\alpha(r)\,\mathrm{d}r,
      \qquad
      K_\alpha(r) = \frac{1}{\pi}
          \frac{r^{\alpha-1}\sin(\alpha\pi)}{r^{2\alpha} + 2r^\alpha\cos(\alpha\pi) + 1}.

  The substitution :math:`v = r^\alpha` followed by :math:`y = s v` removes
  the endpoint singularity and leaves

  .. math::

      E_\alpha(-s) = \frac{\sin(\alpha\pi)}{\alpha\pi}
          \int_0^\infty \frac{s\, e^{-y^{1/\alpha}}}{y^2 + 2 s y \cos(\alpha\pi) + s^2}
          \,\mathrm{d}y,

  which adaptive quadrature handles to near machine precision.

``"auto"`` uses the float series for :math:`z \ge -1` and the spectral
integral below that.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import NotConverged, UsageError

__all__ = ["mittag_leffler", "mittag_leffler_array", "mlf_decay_bound"]

DEFAULT_TOL = 1e-13
SERIES_SWITCH = -1.0
# series terms beyond this magnitude need extended precision
_FLOAT_CANCELLATION_LIMIT = 1e2
_MAX_DIGITS = 3000


def _check(alpha: float, z: float, tol: float) -> tuple[float, float]:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise UsageError(f"alpha must lie in (0, 1], got {alpha!r}")
    if tol < 1e-13:
        raise UsageError("tolerance below 1e-13 is not supported")
    z = float(z)
    if not math.isfinite(z):
        raise UsageError("argument must be finite")
    return alpha, z


def _log_max_term(alpha: float, s: float) -> float:
    """Rough natural log of the largest series term for ``|z| = s``."""
    if s <= 1.0:
        return 0.0
    # terms peak near alpha * n ~ s^(1/alpha); the sum is ~ exp(s^(1/alpha)) / alpha
    return s ** (1.0 / alpha) - math.log(alpha)


def _series_float(alpha: float, z: float, tol: float) -> float:
    terms = []
    running = 0.0
    zn = 1.0
    n = 0
    peak = abs(z) ** (1.0 / alpha)
    while True:
        try:
            term = zn / math.gamma(alpha * n + 1.0)
        except OverflowError:
            raise NotConverged(f"series for E_{alpha}({z}) overflows") from None
        terms.append(term)
        running += term
        if n > 2 and alpha * n > peak and abs(term) < 1e-17 * max(1.0, abs(running)):
            break
        n += 1
        if n > 10_000 or not math.isfinite(term):
            raise NotConverged(f"series for E_{alpha}({z}) did not converge")
        zn *= z
    return math.fsum(terms)


def _series_extended(alpha: float, z: float, tol: float) -> float:
    import mpmath as mp

    digits = 30 + int(_log_max_term(alpha, abs(z)) / math.log(10.0))
    if digits > _MAX_DIGITS:
        raise NotConverged(
            f"series for E_{alpha}({z}) needs ~{digits} digits; use the spectral branch")
    with mp.workdps(digits):
        a = mp.mpf(alpha)
        zz = mp.mpf(z)
        total = mp.mpf(0)
        zn = mp.mpf(1)
        cutoff = mp.mpf(10) ** (-20)
        n = 0
        while True:
            term = zn / mp.gamma(a * n + 1)
            total += term
            if n > 2 and abs(term) < cutoff and alpha * n > abs(z) ** (1.0 / alpha):
                break
            n += 1
            zn *= zz
        return float(total)


def _series(alpha: float, z: float, tol: float) -> float:
    if z >= 0 or _log_max_term(alpha, -z) <= math.log(_FLOAT_CANCELLATION_LIMIT):
        return _series_float(alpha, z, tol)
    return _series_extended(alpha, z, tol)


def _spectral(alpha: float, z: float, tol: float) -> float:
    if z >= 0:
        raise UsageError("spectral representation requires a negative argument")
    s = -z
    sa = math.sin(alpha * math.pi)
    ca = math.cos(alpha * math.pi)
    p = 1.0 / alpha
    y_max = 745.0**alpha  # exp(-y^(1/alpha)) underflows beyond

    def integrand(y: float) -> float:
        return math.exp(-(y**p)) * s / (y * y + 2.0 * s * y * ca + s * s)

    points = [s] if s < y_max else None
    value, err = integrate.quad(integrand, 0.0, y_max, epsabs=0.0,
                                epsrel=max(tol / 10, 1e-13), limit=500, points=points)
    value *= sa / (alpha * math.pi)
    err *= sa / (alpha * math.pi)
    if not err <= tol * max(1.0, abs(value)):
        raise NotConverged(f"quadrature for E_{alpha}({z}) reached only {err:.2e}")
    return value


def mittag_leffler(alpha: float, z: float, tol: float = DEFAULT_TOL,
                   method: str = "auto") -> float:
    """Evaluate :math:`E_\\alpha(z)` for real *z* and ``0 < alpha <= 1``.

    Parameters
    ----------
    alpha : float
        Order in ``(0, 1]``.
    z : float
        Real argument.
    tol : float
        Relative tolerance (absolute for values below 1), at least ``1e-13``.
    method : {"auto", "series", "spectral"}
        Evaluation branch; see the module docstring.

    Raises
    ------
    NotConverged
        If the selected branch cannot meet *tol*.
    """
    alpha, z = _check(alpha, z, tol)
    if z == 0.0:
        return 1.0
    if method == "auto":
        if alpha == 1.0:
            return math.exp(z)
        method = "series" if z >= SERIES_SWITCH else "spectral"
    if method == "series":
        return _series(alpha, z, tol)
    if method == "spectral":
        if alpha == 1.0:
            raise UsageError("spectral density degenerates at alpha = 1")
        return _spectral(alpha, z, tol)
    raise UsageError(f"unknown method {method!r}")


def mittag_leffler_array(alpha: float, z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Elementwise :func:`mittag_leffler` over an array of arguments."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape)
    flat = out.reshape(-1)
    for i, zi in enumerate(z.reshape(-1)):
        flat[i] = mittag_leffler(alpha, zi, tol)
    return out


def mlf_decay_bound(alpha: float, mu: float, t, tol: float = DEFAULT_TOL):
    """Decay envelope :math:`E_\\alpha(-2\\mu t^\\alpha)`; accepts scalar or array *t*."""
    if not mu > 0:
        raise UsageError("mu must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise UsageError("time must be nonnegative")
    values = mittag_leffler_array(alpha, -2.0 * mu * t_arr**alpha, tol)
    return float(values) if np.ndim(t) == 0 else values
