"""Proximal operators :math:`\\mathrm{prox}_{\\tau\\phi}(w) = \\arg\\min_u \\tfrac{1}{2\\tau}\\|u-w\\|^2 + \\phi(u)`.

Every operator acts on 1-D arrays (vectors); scalar functionals are applied
componentwise and summed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ProxFailure, UsageError

__all__ = [
    "ProxOperator",
    "prox_box",
    "prox_huber",
    "prox_l1",
    "prox_quadratic",
    "prox_quadratic_form",
    "prox_quartic",
    "prox_quadratic_quartic",
    "prox_smooth",
    "prox_zero",
]

PROX_TOL = 1e-12
MAX_ITERS = 100


@dataclass(frozen=True)
class ProxOperator:
    """A convex functional together with its proximal map.

    ``grad`` is supplied for differentiable functionals and used by
    diagnostics only; the solver needs ``prox`` and ``phi``.
    """

    prox: Callable[[np.ndarray, float], np.ndarray]
    phi: Callable[[np.ndarray], float]
    mu: Optional[float] = None
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    minimizer: Optional[np.ndarray] = None
    name: str = "custom"

    def __call__(self, w, tau: float) -> np.ndarray:
        if not tau > 0:
            raise UsageError("prox step tau must be positive")
        return self.prox(np.atleast_1d(np.asarray(w, dtype=float)), float(tau))

    @property
    def phi_star(self) -> Optional[float]:
        return None if self.minimizer is None else float(self.phi(self.minimizer))


def prox_zero() -> ProxOperator:
    return ProxOperator(prox=lambda w, tau: w.copy(), phi=lambda u: 0.0, mu=0.0,
                        grad=np.zeros_like, name="zero")


def prox_quadratic(mu: float = 1.0) -> ProxOperator:
    """:math:`\\phi(u) = \\tfrac{\\mu}{2}\\|u\\|^2`; prox is ``w / (1 + tau mu)``."""
    if mu < 0:
        raise UsageError("mu must be nonnegative")
    return ProxOperator(prox=lambda w, tau: w / (1.0 + tau * mu),
                        phi=lambda u: 0.5 * mu * float(np.dot(u, u)),
                        mu=mu, grad=lambda u: mu * u, minimizer=np.zeros(1), name="quadratic")


def prox_quadratic_form(A, b) -> ProxOperator:
    """:math:`\\phi(u) = \\tfrac12 u^\\top A u - b^\\top u` for symmetric positive semidefinite *A*."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape != (b.size, b.size) or not np.allclose(A, A.T):
        raise UsageError("A must be a symmetric matrix matching b")
    eig = np.linalg.eigvalsh(A)
    if eig.min() < -1e-12:
        raise UsageError("A must be positive semidefinite")
    eye = np.eye(b.size)
    mu = float(eig.min())
    return ProxOperator(
        prox=lambda w, tau: np.linalg.solve(eye + tau * A, w + tau * b),
        phi=lambda u: float(0.5 * u @ A @ u - b @ u),
        mu=mu, grad=lambda u: A @ u - b,
        minimizer=np.linalg.solve(A, b) if mu > 0 else None, name="quadratic_form")


def prox_l1() -> ProxOperator:
    """:math:`\\phi(u) = \\|u\\|_1`; prox is soft thresholding."""
    return ProxOperator(prox=lambda w, tau: np.sign(w) * np.maximum(np.abs(w) - tau, 0.0),
                        phi=lambda u: float(np.sum(np.abs(u))),
                        mu=0.0, minimizer=np.zeros(1), name="l1")


def prox_box(lo: float, hi: float) -> ProxOperator:
    """Indicator of ``[lo, hi]^d``; prox is the projection."""
    if not lo <= hi:
        raise UsageError("box needs lo <= hi")
    return ProxOperator(prox=lambda w, tau: np.clip(w, lo, hi),
                        phi=lambda u: 0.0 if np.all((u >= lo) & (u <= hi)) else np.inf,
                        mu=0.0, name="box")


def prox_huber(delta: float = 1.0) -> ProxOperator:
    """Huber functional, quadratic on ``|u| <= delta`` and linear beyond."""
    if not delta > 0:
        raise UsageError("delta must be positive")

    def phi(u):
        a = np.abs(u)
        return float(np.sum(np.where(a <= delta, 0.5 * a**2, delta * (a - 0.5 * delta))))

    def prox(w, tau):
        return np.where(np.abs(w) <= delta * (1 + tau), w / (1 + tau), w - tau * delta * np.sign(w))

    return ProxOperator(prox=prox, phi=phi, mu=0.0,
                        grad=lambda u: np.clip(u, -delta, delta), minimizer=np.zeros(1),
                        name="huber")


def _monotone_root(g, dg, w: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                   start: np.ndarray) -> np.ndarray:
    """Root of an increasing componentwise map ``g - w``, Newton then bisection.

    With ``dg=None`` only the bisection on ``[lo, hi]`` runs.
    """
    u = start.copy()
    for _ in range(MAX_ITERS if dg is not None else 0):
        r = g(u) - w
        if np.all(np.abs(r) <= PROX_TOL * (1.0 + np.abs(w))):
            return u
        u = u - r / dg(u)
    # bracketed bisection for whatever Newton left behind
    lo, hi = lo.copy(), hi.copy()
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        pos = g(mid) - w > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= 1e-15 * (1.0 + np.abs(mid))):
            return 0.5 * (lo + hi)
    raise ProxFailure("componentwise prox did not converge")


def prox_quartic() -> ProxOperator:
    """:math:`\\phi(u) = \\tfrac14 \\sum u_i^4`; prox solves ``u + tau u^3 = w``.

    Newton started at ``u = w`` converges monotonically because the cubic is
    convex on the side of the root where it starts.
    """

    def prox(w, tau):
        bound = np.abs(w) + 1.0
        return _monotone_root(lambda u: u + tau * u**3, lambda u: 1 + 3 * tau * u**2,
                              w, -bound, bound, w)

    return ProxOperator(prox=prox, phi=lambda u: 0.25 * float(np.sum(u**4)), mu=0.0,
                        grad=lambda u: u**3, minimizer=np.zeros(1), name="quartic")


def prox_quadratic_quartic() -> ProxOperator:
    """:math:`\\phi(u) = \\sum \\tfrac12 u_i^2 + \\tfrac14 u_i^4`, strongly convex with ``mu = 1``."""

    def prox(w, tau):
        bound = np.abs(w) + 1.0
        return _monotone_root(lambda u: (1 + tau) * u + tau * u**3,
                              lambda u: 1 + tau + 3 * tau * u**2, w, -bound, bound, w)

    return ProxOperator(prox=prox, phi=lambda u: float(np.sum(0.5 * u**2 + 0.25 * u**4)),
                        mu=1.0, grad=lambda u: u + u**3, minimizer=np.zeros(1),
                        name="quadratic_quartic")


def prox_smooth(phi, grad, hess=None, *, mu: float | None = None,
                minimizer=None) -> ProxOperator:
    """Prox of a convex differentiable functional via Newton on ``u + tau grad(u) = w``.

    Without *hess* the Jacobian is formed by forward differences. Steps are
    halved until the residual decreases.
    """

    def jac(u, tau):
        if hess is not None:
            return np.eye(u.size) + tau * np.atleast_2d(hess(u))
        g0 = grad(u)
        J = np.empty((u.size, u.size))
        for j in range(u.size):
            h = 1e-7 * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += h
            J[:, j] = (grad(up) - g0) / h
        return np.eye(u.size) + tau * J

    def prox(w, tau):
        u = w.copy()
        r = u + tau * grad(u) - w
        for _ in range(MAX_ITERS):
            nr = np.linalg.norm(r)
            if nr <= PROX_TOL * (1.0 + np.linalg.norm(w)):
                return u
            step = np.linalg.solve(jac(u, tau), r)
            lam = 1.0
            while True:
                cand = u - lam * step
                rc = cand + tau * grad(cand) - w
                if np.linalg.norm(rc) < nr or lam < 1e-8:
                    break
                lam *= 0.5
            u, r = cand, rc
        if u.size == 1:
            g = lambda v: v + tau * np.asarray(grad(v), dtype=float)
            bound = np.abs(w) + tau * np.abs(grad(np.zeros(1))) + 1.0
            return _monotone_root(g, None, w, w - bound, w + bound, u)
        raise ProxFailure(f"smooth prox residual {np.linalg.norm(r):.2e} after {MAX_ITERS} steps")

    return ProxOperator(prox=prox, phi=lambda u: float(phi(u)), mu=mu, grad=grad,
                        minimizer=None if minimizer is None else np.atleast_1d(minimizer),
                        name="smooth")
