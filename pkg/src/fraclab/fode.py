r"""Implicit solver for :math:`D_c^\alpha X = f(t, X)` and its test machinery.

The scheme is the backward (implicit) one for the deconvolution
discretization: at each step solve

.. math::

    c_0 X_n - k^\alpha f(t_n, X_n) = \sum_{i=1}^{n-1} c_i X_{n-i} + c^n_n X_0

for :math:`X_n`. History sums are evaluated directly, so a solve over
*N* steps costs :math:`O(N^2)`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GridMismatch, NewtonDiverged, StabilityViolation, UsageError
from .fracops import (
    CoefficientTable,
    Grid,
    Path,
    caputo_coefficients,
    check_order,
    discrete_caputo,
    integral_weights,
)
from .mlf import mittag_leffler

__all__ = [
    "RhsFunction",
    "SolverOptions",
    "comparison_check",
    "convex_functional_check",
    "exact_linear_solution",
    "observed_order",
    "solve_implicit",
    "solve_implicit_integral",
    "solve_linear_implicit",
    "step_constraint",
    "step_doubling_check",
]

COMPARISON_SLACK = 1e-10


@dataclass(frozen=True)
class RhsFunction:
    """Right-hand side ``f(t, x)`` of a fractional ODE.

    ``jac(t, x)`` returns the Jacobian matrix of ``f`` in ``x``; when absent
    a forward-difference Jacobian is used. ``lipschitz_L`` is a caller-supplied
    bound on the Lipschitz constant over the region the solution visits.
    """

    eval: Callable[[float, np.ndarray], np.ndarray]
    lipschitz_L: Optional[float] = None
    monotone_nonincreasing: bool = False
    jac: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.eval(t, x), dtype=float))

    def jacobian(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.jac is not None:
            return np.atleast_2d(np.asarray(self.jac(t, x), dtype=float))
        f0 = self(t, x)
        J = np.empty((f0.size, x.size))
        for j in range(x.size):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (self(t, xp) - f0) / h
        return J


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-12
    max_newton_iters: int = 50
    fallback: str = "bisection"

    def __post_init__(self) -> None:
        if not self.newton_tol > 0:
            raise UsageError("newton_tol must be positive")
        if self.fallback not in ("bisection", "fixed_point"):
            raise UsageError(f"unknown fallback {self.fallback!r}")


def _as_rhs(f) -> RhsFunction:
    return f if isinstance(f, RhsFunction) else RhsFunction(f)


def step_constraint(alpha: float, L: float | None, k: float) -> bool:
    """True iff :math:`k^\\alpha L < \\Gamma(1+\\alpha) = c_0`."""
    if L is None:
        return True
    if L < 0 or k <= 0:
        raise UsageError("need L >= 0 and k > 0")
    return k**alpha * L < math.gamma(1.0 + alpha)


# {{{ per-step nonlinear solve


def _newton(resid, jac, x, opts: SolverOptions):
    for _ in range(opts.max_newton_iters):
        r = resid(x)
        if np.max(np.abs(r)) <= opts.newton_tol:
            return x
        try:
            dx = np.linalg.solve(jac(x), r)
        except np.linalg.LinAlgError:
            return None
        x = x - dx
        if not np.all(np.isfinite(x)):
            return None
    return x if np.max(np.abs(resid(x))) <= opts.newton_tol else None


def _fixed_point(resid, scale: float, x, opts: SolverOptions):
    # x <- x - r(x)/c0 is a contraction when k^alpha L < c0
    for _ in range(20 * opts.max_newton_iters):
        r = resid(x)
        if np.max(np.abs(r)) <= opts.newton_tol:
            return x
        x = x - r / scale
        if not np.all(np.isfinite(x)):
            return None
    return None


def _bisection(resid, x, opts: SolverOptions):
    """Scalar root of an increasing residual, bracketed by expansion."""
    g = lambda v: float(resid(np.array([v]))[0])  # noqa: E731
    x0 = float(x[0])
    width = max(1.0, abs(x0))
    lo, hi = x0 - width, x0 + width
    for _ in range(200):
        if g(lo) <= 0 <= g(hi):
            break
        width *= 2
        lo, hi = x0 - width, x0 + width
    else:
        return None
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= opts.newton_tol:
            return np.array([mid])
        if gm > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 4 * np.spacing(abs(mid)):
            break
    mid = 0.5 * (lo + hi)
    return np.array([mid]) if abs(g(mid)) <= opts.newton_tol else None


def solve_step(resid, jac, x_guess: np.ndarray, scale: float,
               opts: SolverOptions) -> np.ndarray:
    """Solve ``resid(x) = 0`` by Newton with fixed-point and bisection fallbacks.

    *scale* is the diagonal of the residual's leading linear part (``c_0``
    for the differential form, ``1`` for the integral form).
    """
    x = _newton(resid, jac, x_guess.copy(), opts)
    if x is None:
        x = _fixed_point(resid, scale, x_guess.copy(), opts)
    if x is None and opts.fallback == "bisection" and x_guess.size == 1:
        x = _bisection(resid, x_guess, opts)
    if x is None:
        raise NewtonDiverged("per-step solve failed after all fallbacks")
    return x


# }}}


# {{{ solvers


def _table_for(alpha: float, grid: Grid, table: CoefficientTable | None) -> CoefficientTable:
    if table is None:
        return caputo_coefficients(alpha, grid.N)
    table.require(grid.N)
    return table


def solve_linear_implicit(alpha: float, lam: float, x0: float, grid: Grid,
                          table: CoefficientTable | None = None) -> Path:
    """Implicit scheme for :math:`D_c^\\alpha X = \\lambda X`; one linear solve per step.

    Raises
    ------
    StabilityViolation
        If ``lam > 0`` and :math:`k^\\alpha \\lambda > c_0/2`.
    """
    alpha = check_order(alpha)
    table = _table_for(alpha, grid, table)
    c = table.c
    ka = grid.k**alpha
    if lam > 0 and ka * lam > 0.5 * c[0]:
        raise StabilityViolation(
            f"k^alpha * lambda = {ka * lam:.4g} exceeds c_0/2 = {0.5 * c[0]:.4g}")

    return _linear_unchecked(table, lam, x0, grid)


def solve_implicit(alpha: float, f, x0, grid: Grid,
                   opts: SolverOptions | None = None, *,
                   table: CoefficientTable | None = None,
                   forcing: np.ndarray | None = None) -> Path:
    """Implicit scheme for :math:`(\\mathcal{D}^\\alpha X)_n = f(t_n, X_n) + g_n`.

    Parameters
    ----------
    f : RhsFunction or callable ``f(t, x)``
    x0 : scalar or vector initial value.
    forcing : optional array ``g`` of shape ``(N + 1,)`` or ``(N + 1, dim)``
        added to the right-hand side; used to build sub- and supersolutions.

    Raises
    ------
    StabilityViolation
        If ``f.lipschitz_L`` is given and violates :func:`step_constraint`.
    NewtonDiverged
        If a step cannot be solved to ``opts.newton_tol``.
    """
    alpha = check_order(alpha)
    f = _as_rhs(f)
    opts = opts or SolverOptions()
    table = _table_for(alpha, grid, table)
    ka = grid.k**alpha
    if not step_constraint(alpha, f.lipschitz_L, grid.k):
        raise StabilityViolation("k^alpha * L must be below c_0")

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    N, dim = grid.N, x0.size
    g = np.zeros((N + 1, dim)) if forcing is None else np.broadcast_to(
        np.asarray(forcing, dtype=float).reshape(N + 1, -1), (N + 1, dim))
    c = table.c
    X = np.empty((N + 1, dim))
    X[0] = x0
    eye = np.eye(dim)
    for n in range(1, N + 1):
        t = grid.t(n)
        rhs = c[1:n] @ X[n - 1 : 0 : -1] + table.c_tail[n] * x0 + ka * g[n]

        def resid(x, t=t, rhs=rhs):
            return c[0] * x - ka * f(t, x) - rhs

        def jac(x, t=t):
            return c[0] * eye - ka * f.jacobian(t, x)

        X[n] = solve_step(resid, jac, X[n - 1], c[0], opts)
    return Path(grid, X)


def solve_implicit_integral(alpha: float, f, x0, grid: Grid,
                            opts: SolverOptions | None = None) -> Path:
    """Integral form :math:`X_n = X_0 + k^\\alpha \\sum_{m=1}^n a_{n-m} f(t_m, X_m)`.

    Uses only the weights :math:`a`, never the deconvolved coefficients, so it
    serves as an independent check of :func:`solve_implicit`.
    """
    alpha = check_order(alpha)
    f = _as_rhs(f)
    opts = opts or SolverOptions()
    a = integral_weights(alpha, grid.N)
    ka = grid.k**alpha
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    N, dim = grid.N, x0.size
    X = np.empty((N + 1, dim))
    F = np.zeros((N + 1, dim))
    X[0] = x0
    eye = np.eye(dim)
    for n in range(1, N + 1):
        t = grid.t(n)
        rhs = x0 + ka * (a[n - 1 : 0 : -1] @ F[1:n])

        def resid(x, t=t, rhs=rhs):
            return x - ka * a[0] * f(t, x) - rhs

        def jac(x, t=t):
            return eye - ka * a[0] * f.jacobian(t, x)

        X[n] = solve_step(resid, jac, X[n - 1], 1.0, opts)
        F[n] = f(t, X[n])
    return Path(grid, X)


def exact_linear_solution(alpha: float, lam: float, x0: float, t):
    """:math:`x_0 E_\\alpha(\\lambda t^\\alpha)`, scalar or elementwise over *t*."""
    t_arr = np.asarray(t, dtype=float)
    vals = np.array([x0 * mittag_leffler(alpha, lam * ti**alpha) for ti in t_arr.reshape(-1)])
    return float(vals[0]) if t_arr.ndim == 0 else vals.reshape(t_arr.shape)


# }}}


# {{{ checks


def comparison_check(sub: Path, sol: Path, sup: Path,
                     slack: float = COMPARISON_SLACK) -> bool:
    """True iff ``sub <= sol <= sup`` at every node, up to *slack* per comparison.

    Raises
    ------
    GridMismatch
        If the paths are not on the same grid.
    """
    if not (sub.grid == sol.grid == sup.grid):
        raise GridMismatch("comparison paths must share a grid")
    lower = np.all(sub.values <= sol.values + slack)
    upper = np.all(sol.values + slack <= sup.values + 2 * slack)
    return bool(lower and upper)


def convex_functional_check(alpha: float, X: Path, E, grad_E,
                            table: CoefficientTable | None = None,
                            slack: float = COMPARISON_SLACK) -> bool:
    """Check :math:`(\\mathcal{D}^\\alpha E(X))_n \\le (\\mathcal{D}^\\alpha X)_n \\cdot \\nabla E(X_n)`.

    *E* maps a state vector to a scalar and *grad_E* to a (sub)gradient.
    """
    table = _table_for(alpha, X.grid, table)
    EX = Path(X.grid, np.array([E(x) for x in X.values]))
    lhs = discrete_caputo(table, EX).scalar
    DX = discrete_caputo(table, X).values
    rhs = np.array([np.dot(d, grad_E(x)) for d, x in zip(DX, X.values)])
    return bool(np.all(lhs[1:] <= rhs[1:] + slack))


def piecewise_constant_dominates(coarse: Path, fine: Path, slack: float = 1e-12) -> bool:
    """True iff the left-open step interpolant of *coarse* dominates that of *fine*.

    The fine grid must refine the coarse one by an integer factor.
    """
    factor, rem = divmod(fine.grid.N, coarse.grid.N)
    if rem or abs(coarse.grid.T - fine.grid.T) > 1e-12 * coarse.grid.T:
        raise GridMismatch("fine grid must refine the coarse grid")
    n = np.arange(1, fine.grid.N + 1)
    coarse_vals = coarse.values[(n + factor - 1) // factor]
    return bool(np.all(coarse_vals >= fine.values[n] - slack))


def step_doubling_check(alpha: float, lam: float, x0: float, k: float,
                        T: float = 1.0) -> bool:
    """Compare step-:math:`2k` and step-:math:`k` solutions of the linear scheme.

    Returns True iff :math:`\\bar X_{2k}(t) \\ge \\bar X_k(t) - 10^{-12}` on
    :math:`(0, T]`, where :math:`\\bar X` is the piecewise-constant
    interpolant taking the value :math:`X_n` on :math:`(t_{n-1}, t_n]`.
    """
    if not lam > 0:
        raise UsageError("step doubling applies to lambda > 0")
    if not (2 * k) ** alpha * lam < math.gamma(1 + alpha):
        raise StabilityViolation("(2k)^alpha * lambda must be below c_0")
    fine_grid = Grid.from_step(k, T)
    if fine_grid.N % 2:
        raise UsageError("T must be a multiple of 2k")
    coarse_grid = Grid(fine_grid.T, fine_grid.N // 2)
    table = caputo_coefficients(alpha, fine_grid.N)
    # the claim only needs k^alpha lambda < c0, wider than the c0/2 window
    coarse = _linear_unchecked(table, lam, x0, coarse_grid)
    fine = _linear_unchecked(table, lam, x0, fine_grid)
    return piecewise_constant_dominates(coarse, fine)


def _linear_unchecked(table: CoefficientTable, lam: float, x0: float, grid: Grid) -> Path:
    c = table.c
    denom = c[0] - grid.k**table.alpha * lam
    X = np.empty(grid.N + 1)
    X[0] = x0
    for n in range(1, grid.N + 1):
        X[n] = (np.dot(c[1:n], X[n - 1 : 0 : -1]) + table.c_tail[n] * x0) / denom
    return Path(grid, X)


def observed_order(errs: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log(err)`` against ``log(k)``."""
    if len(errs) < 2:
        raise UsageError("need at least two (k, error) pairs")
    k = np.array([e[0] for e in errs], dtype=float)
    err = np.array([e[1] for e in errs], dtype=float)
    if np.any(np.diff(k) >= 0):
        raise UsageError("step sizes must be strictly decreasing")
    if np.any(err <= 0):
        raise UsageError("errors must be positive")
    slope, _ = np.polyfit(np.log(k), np.log(err), 1)
    return float(slope)


# }}}
