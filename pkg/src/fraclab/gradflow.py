r"""Time-fractional gradient flows :math:`D_c^\alpha u \in -\partial\phi(u)` by minimizing movements.

Each step minimizes

.. math::

    \frac{1}{2k^\alpha}\Big(c_0\|u\|^2 - 2\sum_{j=1}^{n-1} c_j\langle u, U_{n-j}\rangle
        - 2 c_n^n\langle u, U_0\rangle\Big) + \phi(u)

over *u*. Since :math:`\sum_{j=1}^{n-1} c_j + c_n^n = c_0`, completing the
square turns this into :math:`\frac{c_0}{2k^\alpha}\|u - w_n\|^2 + \phi(u)` up to a
constant, where :math:`w_n` is the c-weighted average of the history.
The step is therefore one prox evaluation with :math:`\tau = k^\alpha/c_0`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, ProxFailure, UsageError
from .fracops import (CoefficientTable, Grid, Path, caputo_coefficients, check_order,
                      discrete_frac_integral)
from .mlf import mittag_leffler_array
from .prox import ProxOperator

__all__ = [
    "GradFlowState",
    "decay_check",
    "degiorgi_step",
    "dissipation_check",
    "fractional_dissipation",
    "holder_exponent",
    "interpolate_continuous",
    "solve_gradflow",
    "two_step_comparison",
]


@dataclass
class GradFlowState:
    """Discrete trajectory with ``xi[n] = -(D^alpha U)_n``; ``xi[0]`` is unused and zero."""

    alpha: float
    grid: Grid
    U: np.ndarray
    xi: np.ndarray
    energies: np.ndarray
    table: CoefficientTable


def _history_average(table: CoefficientTable, history: np.ndarray) -> np.ndarray:
    n = history.shape[0]
    c = table.c
    w = float(table.c_tail[n]) * history[0]
    if n > 1:
        w = w + c[1:n] @ history[n - 1 : 0 : -1]
    return w / table.c0


def degiorgi_step(table: CoefficientTable, history, prox: ProxOperator, k: float) -> np.ndarray:
    """Next state ``U[n] = prox(w_n, k^alpha / c_0)`` from ``history = U[0..n-1]``."""
    history = np.asarray(history, dtype=float)
    if history.ndim == 1:  # scalar states
        history = history[:, None]
    n = history.shape[0]
    if n < 1:
        raise UsageError("history must contain U[0]")
    table.require(n)
    tau = k**table.alpha / table.c0
    out = prox(_history_average(table, history), tau)
    if not np.all(np.isfinite(out)):
        raise ProxFailure("prox returned a non-finite state")
    return out


def solve_gradflow(alpha: float, prox: ProxOperator, u0, grid: Grid, *,
                   table: CoefficientTable | None = None) -> GradFlowState:
    alpha = check_order(alpha)
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    N = grid.N
    table = table or caputo_coefficients(alpha, N)
    table.require(N)
    tau = grid.k**alpha / table.c0
    U = np.empty((N + 1, u0.size))
    xi = np.zeros((N + 1, u0.size))
    U[0] = u0
    for n in range(1, N + 1):
        w = _history_average(table, U[:n])
        U[n] = prox(w, tau)
        if not np.all(np.isfinite(U[n])):
            raise ProxFailure(f"prox returned a non-finite state at step {n}")
        xi[n] = (w - U[n]) / tau
    energies = np.array([prox.phi(u) for u in U])
    return GradFlowState(alpha=alpha, grid=grid, U=U, xi=xi, energies=energies, table=table)


def interpolate_continuous(state: GradFlowState, t):
    """Continuous extension :math:`U(t) = U_0 + J^\\alpha V` with ``V = -xi[m]`` on each cell.

    The integral of the piecewise-constant *V* is exact. Scalar *t* gives a
    vector; an array of times gives shape ``(len(t), dim)``.
    """
    g = state.grid
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < -1e-14) or np.any(t_arr > g.T * (1 + 1e-14)):
        raise UsageError(f"times must lie in [0, {g.T}]")
    tm = g.times
    a = state.alpha
    left = np.clip(t_arr[:, None] - tm[None, :-1], 0.0, None) ** a
    right = np.clip(t_arr[:, None] - tm[None, 1:], 0.0, None) ** a
    W = (left - right) / math.gamma(1.0 + a)
    out = state.U[0] + W @ (-state.xi[1:])
    return out[0] if np.ndim(t) == 0 else out


def fractional_dissipation(state: GradFlowState) -> np.ndarray:
    """:math:`(J_k\\|\\xi\\|^2)_n`, the exact fractional integral of :math:`\\|V\\|^2` at each node."""
    sq = np.sum(state.xi**2, axis=1)
    return discrete_frac_integral(state.table, Path(state.grid, sq)).scalar


def dissipation_check(state: GradFlowState, slack: float = 1e-8) -> bool:
    """True iff :math:`\\phi(U_n) - \\phi(U_0) \\le -(J_k\\|\\xi\\|^2)_n` + *slack* for every *n*."""
    lhs = state.energies - state.energies[0]
    return bool(np.all(lhs <= -fractional_dissipation(state) + slack))


def holder_exponent(state: GradFlowState, lag_range: tuple[float, float] | None = None,
                    *, n_lags: int = 8, n_probe: int = 513) -> float:
    """Least-squares slope of :math:`\\log\\sup_t\\|U(t+\\delta) - U(t)\\|` against :math:`\\log\\delta`.

    Returns ``inf`` when every increment vanishes (constant trajectory).
    """
    T = state.grid.T
    lo, hi = lag_range if lag_range is not None else (4 * state.grid.k, T / 4)
    if not 0 < lo < hi <= T / 4 * (1 + 1e-12):
        raise UsageError("lags must satisfy 0 < lo < hi <= T/4")
    lags = np.geomspace(lo, hi, n_lags)
    sups = []
    for d in lags:
        t = np.linspace(0.0, T - d, n_probe)
        inc = interpolate_continuous(state, t + d) - interpolate_continuous(state, t)
        sups.append(np.max(np.linalg.norm(inc, axis=1)))
    sups = np.asarray(sups)
    if np.all(sups == 0.0):
        return math.inf
    if np.any(sups == 0.0):
        raise UsageError("increments vanish at some lags only; choose another lag range")
    return float(np.polyfit(np.log(lags), np.log(sups), 1)[0])


def decay_tolerance(state: GradFlowState, phi_star: float) -> float:
    gap = state.energies[0] - phi_star
    return 1e-6 + 0.05 * gap * state.grid.k**state.alpha


def decay_check(state: GradFlowState, u_star, phi_star: float, mu: float) -> bool:
    """Energy gap against :math:`(\\phi(U_0) - \\phi^*) E_\\alpha(-2\\mu t_n^\\alpha)` plus a slack
    ``1e-6 + 0.05 (phi(U0) - phi*) k^alpha``.

    *u_star* is only used to assert it is a minimizer candidate of the same dimension.
    """
    if not mu > 0:
        raise UsageError("decay check needs mu > 0")
    if np.atleast_1d(u_star).size != state.U.shape[1]:
        raise UsageError("u_star dimension does not match the state")
    gap0 = state.energies[0] - phi_star
    bound = gap0 * mittag_leffler_array(state.alpha, -2.0 * mu * state.grid.times**state.alpha)
    return bool(np.all(state.energies - phi_star <= bound + decay_tolerance(state, phi_star)))


def _is_dyadic(T: float, k: float) -> bool:
    m = math.log2(T / k)
    return m >= 0 and abs(m - round(m)) < 1e-9


def two_step_comparison(alpha: float, prox: ProxOperator, u0, k: float, *, T: float = 1.0,
                        n_probe: int = 2049) -> float:
    """:math:`\\sup_t \\|U_k(t) - U_{k/2}(t)\\|` over *n_probe* uniform times, for ``k = 2^{-m} T``."""
    if not _is_dyadic(T, k):
        raise GridMismatch(f"step {k} is not of the form 2^-m T for T = {T}")
    coarse = solve_gradflow(alpha, prox, u0, Grid.from_step(k, T))
    fine = solve_gradflow(alpha, prox, u0, Grid.from_step(k / 2, T))
    t = np.linspace(0.0, T, n_probe)
    diff = interpolate_continuous(coarse, t) - interpolate_continuous(fine, t)
    return float(np.max(np.linalg.norm(diff, axis=1)))
