r"""Overdamped generalized Langevin equation driven by fractional noise.

The equation is taken in integral form,

.. math::

    X(t) = X_0 + \frac{1}{\Gamma(\alpha)} \int_0^t (t-s)^{\alpha-1} b(X(s))\,ds + G(t),
    \qquad b = -\nabla V,

and discretized by the backward scheme

.. math::

    X_n = X_0 + k^\alpha \sum_{m=1}^n a_{n-m}\, b(X_m) + G(t_n).

Ensembles are solved as one batch: every sample advances one step at a time
with a vectorized Newton iteration, so the cost is :math:`O(N^2 S)` array
work for *S* samples.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import NewtonDiverged, UsageError
from .fbm import check_hurst, sample_fbm_batch
from .fode import SolverOptions, solve_step
from .fracops import CoefficientTable, Grid, Path, caputo_coefficients, check_order, integral_weights
from .mlf import mittag_leffler_array
from .rng import RngSeed, generator

__all__ = [
    "ContractionTable",
    "EnsembleResult",
    "NoiseSpec",
    "Potential",
    "beta_hurst",
    "contraction_experiment",
    "coupled_pair",
    "ensemble",
    "gibbs_moment",
    "driver_hurst",
    "noise_batch",
    "noise_from_fbm",
    "noise_path_general",
    "noise_path_physical",
    "physical_sigma",
    "quadratic_potential",
    "quadratic_quartic_potential",
    "quartic_potential",
    "potential_from_expression",
    "sample_gibbs",
    "solve_batch",
    "solve_fsde",
    "wasserstein2_1d",
]

INIT_STREAM_OFFSET = 1 << 32
DEFAULT_CHUNK = 1000


# {{{ potentials


@dataclass(frozen=True)
class Potential:
    """Energy :math:`V` with gradient; functions act on the last array axis.

    ``grad`` maps ``(..., d) -> (..., d)``; ``hess`` (optional) maps
    ``(..., d) -> (..., d, d)``. ``mu`` is the strong-convexity modulus and
    ``lipschitz_L`` a Lipschitz constant of ``grad``, when known.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    mu: Optional[float] = None
    lipschitz_L: Optional[float] = None
    name: str = "custom"

    def drift(self, x: np.ndarray) -> np.ndarray:
        return -self.grad(x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        if self.hess is not None:
            return self.hess(x)
        d = x.shape[-1]
        g0 = self.grad(x)
        H = np.empty(x.shape + (d,))
        for j in range(d):
            h = 1e-7 * np.maximum(1.0, np.abs(x[..., j]))
            xp = x.copy()
            xp[..., j] += h
            H[..., :, j] = (self.grad(xp) - g0) / h[..., None]
        return H

    def audit_convexity(self, rng: np.random.Generator, n_probe: int = 1000,
                        dim: int = 1, scale: float = 3.0) -> bool:
        """Randomized check of :math:`(x-y)\\cdot(\\nabla V(x)-\\nabla V(y)) \\ge \\mu|x-y|^2`."""
        mu = self.mu or 0.0
        x = scale * rng.standard_normal((n_probe, dim))
        y = scale * rng.standard_normal((n_probe, dim))
        lhs = np.sum((x - y) * (self.grad(x) - self.grad(y)), axis=-1)
        rhs = mu * np.sum((x - y) ** 2, axis=-1)
        return bool(np.all(lhs >= rhs - 1e-10 * (1 + rhs)))


def _diag_hess(second):
    def hess(x):
        out = np.zeros(x.shape + (x.shape[-1],))
        idx = np.arange(x.shape[-1])
        out[..., idx, idx] = second(x)
        return out
    return hess


def quadratic_potential(mu: float = 1.0) -> Potential:
    """:math:`V(x) = \\tfrac{\\mu}{2}|x|^2`."""
    return Potential(
        phi=lambda x: 0.5 * mu * np.sum(x**2, axis=-1),
        grad=lambda x: mu * x,
        hess=_diag_hess(lambda x: np.full_like(x, mu)),
        mu=mu, lipschitz_L=mu, name="quadratic")


def quartic_potential() -> Potential:
    """:math:`V(x) = \\tfrac14 \\sum_i x_i^4`; convex but not strongly convex."""
    return Potential(
        phi=lambda x: 0.25 * np.sum(x**4, axis=-1),
        grad=lambda x: x**3,
        hess=_diag_hess(lambda x: 3 * x**2),
        mu=0.0, name="quartic")


def quadratic_quartic_potential() -> Potential:
    """:math:`V(x) = \\tfrac12 |x|^2 + \\tfrac14 \\sum_i x_i^4`, strongly convex with ``mu = 1``."""
    return Potential(
        phi=lambda x: np.sum(0.5 * x**2 + 0.25 * x**4, axis=-1),
        grad=lambda x: x + x**3,
        hess=_diag_hess(lambda x: 1 + 3 * x**2),
        mu=1.0, name="quadratic_quartic")


def potential_from_expression(expr: str, mu: float | None = None) -> Potential:
    """One-dimensional potential from a SymPy expression in ``x``, e.g. ``"x**4/4"``."""
    import sympy

    x = sympy.Symbol("x", real=True)
    try:
        V = sympy.sympify(expr, locals={"x": x})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise UsageError(f"cannot parse potential {expr!r}") from exc
    if V.free_symbols - {x}:
        raise UsageError("potential may depend on x only")
    f0 = sympy.lambdify(x, V, "numpy")
    f1 = sympy.lambdify(x, sympy.diff(V, x), "numpy")
    f2 = sympy.lambdify(x, sympy.diff(V, x, 2), "numpy")

    def _vec(f):
        return lambda a: np.broadcast_to(np.asarray(f(a), dtype=float), np.shape(a)).copy()

    d1, d2 = _vec(f1), _vec(f2)
    return Potential(
        phi=lambda a: _vec(f0)(a)[..., 0],
        grad=d1,
        hess=_diag_hess(d2),
        mu=mu, name=f"expr:{expr}")


# }}}


# {{{ noise


def beta_hurst(H: float) -> float:
    """:math:`\\beta_H = \\sqrt{2/\\Gamma(3 - 2H)}`."""
    return math.sqrt(2.0 / math.gamma(3.0 - 2.0 * H))


@dataclass(frozen=True)
class NoiseSpec:
    """Fractional noise :math:`G(t) = \\frac{\\sigma}{\\Gamma(\\alpha)}\\int_0^t (t-s)^{\\alpha-1}dB_H(s)`.

    ``mode="physical"`` requires ``alpha = 2 - 2H`` and samples
    :math:`G = \\beta_H B_{1-H}` exactly; ``mode="general"`` convolves fBm
    increments with the exactly integrated kernel.
    """

    H: float
    sigma: float
    alpha: float
    mode: str = "general"

    def __post_init__(self) -> None:
        check_hurst(self.H)
        check_order(self.alpha, allow_one=True)
        if not self.sigma >= 0:
            raise UsageError("sigma must be nonnegative")
        if self.mode not in ("physical", "general"):
            raise UsageError(f"unknown noise mode {self.mode!r}")
        if self.mode == "physical":
            if abs(self.alpha - (2 - 2 * self.H)) > 1e-12:
                raise UsageError("physical mode requires alpha = 2 - 2H")
            if abs(self.sigma - physical_sigma(self.H)) > 1e-12:
                raise UsageError("physical mode fixes sigma = sqrt(2 / Gamma(2H + 1))")

    @classmethod
    def physical(cls, H: float) -> NoiseSpec:
        return cls(H=H, sigma=physical_sigma(H), alpha=2 - 2 * H, mode="physical")


def physical_sigma(H: float) -> float:
    return math.sqrt(2.0) / math.sqrt(math.gamma(2.0 * H + 1.0))


def _kernel_matrix(alpha: float, N: int) -> np.ndarray:
    """Lower-triangular ``K[n-1, m-1] = a[n-m]`` for ``1 <= m <= n <= N``."""
    a = integral_weights(alpha, N)
    idx = np.arange(N)
    diff = idx[:, None] - idx[None, :]
    return np.where(diff >= 0, a[np.clip(diff, 0, None)], 0.0)


def general_noise_from_increments(alpha: float, sigma: float, dB: np.ndarray, k: float) -> np.ndarray:
    """Noise values from increments ``dB`` of shape ``(S, N)``; returns ``(S, N + 1)``.

    With :math:`w(n, m) = [(t_n - t_{m-1})^\\alpha - (t_n - t_m)^\\alpha]/(\\alpha k)`,
    :math:`G_n = \\frac{\\sigma}{\\Gamma(\\alpha)}\\sum_m w(n,m)\\,dB_m
    = \\sigma k^{\\alpha-1} \\sum_m a_{n-m}\\,dB_m`.
    """
    S, N = dB.shape
    G = np.zeros((S, N + 1))
    G[:, 1:] = sigma * k ** (alpha - 1.0) * (dB @ _kernel_matrix(alpha, N).T)
    return G


def driver_hurst(spec: NoiseSpec) -> float:
    """Hurst index of the fBm that is actually sampled for *spec*."""
    return 1.0 - spec.H if spec.mode == "physical" else spec.H


def noise_from_fbm(spec: NoiseSpec, grid: Grid, B: np.ndarray) -> np.ndarray:
    """Noise values from driver paths ``B`` of shape ``(S, N + 1)`` (Hurst :func:`driver_hurst`)."""
    if spec.mode == "physical":
        return beta_hurst(spec.H) * B
    return general_noise_from_increments(spec.alpha, spec.sigma, np.diff(B, axis=1), grid.k)


def noise_batch(spec: NoiseSpec, grid: Grid, master: int, streams: Sequence[int]) -> np.ndarray:
    """Noise paths for each stream, shape ``(len(streams), N + 1)``."""
    return noise_from_fbm(spec, grid, sample_fbm_batch(driver_hurst(spec), grid, master, streams))


def noise_path_physical(H: float, grid: Grid, seed: RngSeed | int) -> Path:
    """:math:`G = \\beta_H B_{1-H}` sampled on *grid*."""
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    return Path(grid, noise_batch(NoiseSpec.physical(H), grid, seed.master, [seed.stream])[0])


def noise_path_general(alpha: float, sigma: float, H: float, grid: Grid,
                       seed: RngSeed | int) -> Path:
    """Fractional noise with independent ``(alpha, H)``; see :func:`general_noise_from_increments`."""
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    spec = NoiseSpec(H=H, sigma=sigma, alpha=alpha, mode="general")
    return Path(grid, noise_batch(spec, grid, seed.master, [seed.stream])[0])


# }}}


# {{{ solver


def _batched_newton(potential: Potential, kappa: float, rhs: np.ndarray, x: np.ndarray,
                    opts: SolverOptions) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``x + kappa * grad V(x) = rhs`` rowwise; returns ``(x, converged)``."""
    d = x.shape[-1]
    eye = np.eye(d)
    for _ in range(opts.max_newton_iters):
        r = x + kappa * potential.grad(x) - rhs
        done = np.max(np.abs(r), axis=-1) <= opts.newton_tol
        if np.all(done):
            return x, done
        if d == 1:
            J = 1.0 + kappa * potential.hessian(x)[..., 0, 0]
            step = r / J[..., None]
        else:
            J = eye + kappa * potential.hessian(x)
            step = np.linalg.solve(J, r[..., None])[..., 0]
        x = np.where(done[:, None], x, x - step)
        x = np.where(np.isfinite(x), x, rhs)
    r = x + kappa * potential.grad(x) - rhs
    return x, np.max(np.abs(r), axis=-1) <= opts.newton_tol


def solve_batch(table: CoefficientTable, grid: Grid, potential: Potential,
                 x0: np.ndarray, G: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """Backward scheme for a batch: ``x0`` is ``(S, d)``, ``G`` is ``(S, N+1, d)``."""
    S, d = x0.shape
    N = grid.N
    a = table.a
    ka = grid.k**table.alpha
    kappa = ka * a[0]
    X = np.empty((S, N + 1, d))
    F = np.zeros((S, N + 1, d))
    X[:, 0] = x0
    F[:, 0] = 0.0
    for n in range(1, N + 1):
        if n > 1:
            hist = np.tensordot(F[:, 1:n, :], a[n - 1 : 0 : -1], axes=([1], [0]))
        else:
            hist = 0.0
        rhs = x0 + ka * hist + G[:, n]
        guess = X[:, n - 1] + (G[:, n] - G[:, n - 1])
        x, ok = _batched_newton(potential, kappa, rhs, guess, opts)
        for i in np.flatnonzero(~ok):
            def resid(v, i=i):
                return v + kappa * potential.grad(v[None])[0] - rhs[i]

            def jac(v):
                return np.eye(d) + kappa * potential.hessian(v[None])[0]

            x[i] = solve_step(resid, jac, guess[i], 1.0, opts)
        X[:, n] = x
        F[:, n] = potential.drift(x)
    return X


def solve_fsde(alpha: float, potential: Potential, x0, noise: Path, grid: Grid,
               opts: SolverOptions | None = None, *,
               table: CoefficientTable | None = None) -> Path:
    """Solve one path of the backward scheme for a given noise realization.

    Raises
    ------
    StabilityViolation
        Never raised here; the step constraint is checked by callers when
        ``potential.lipschitz_L`` is known (see :func:`fraclab.fode.step_constraint`).
    NewtonDiverged
        If a step cannot be solved.
    """
    alpha = check_order(alpha)
    opts = opts or SolverOptions()
    if noise.grid != grid:
        raise UsageError("noise path must live on the solver grid")
    table = table or caputo_coefficients(alpha, grid.N)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    G = np.broadcast_to(noise.values, (grid.N + 1, x0.size))
    X = solve_batch(table, grid, potential, x0[None, :], G[None], opts)
    return Path(grid, X[0])


# }}}


# {{{ ensembles


@dataclass
class Histogram:
    t: float
    edges: np.ndarray
    masses: np.ndarray


@dataclass
class EnsembleResult:
    grid: Grid
    n_samples: int
    mean_sq: np.ndarray
    stderr_mean_sq: np.ndarray
    histograms: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    """Raw sample values at each histogram time (``t -> (S, d)`` array)."""
    seeds: dict = field(default_factory=dict)


class _MomentAccumulator:
    """Chan-style merge of per-chunk means and sums of squared deviations."""

    def __init__(self, size: int):
        self.n = 0
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, values: np.ndarray) -> None:
        nb = values.shape[0]
        mb = values.mean(axis=0)
        m2b = ((values - mb) ** 2).sum(axis=0)
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * nb / n
        self.m2 = self.m2 + m2b + delta**2 * self.n * nb / n
        self.n = n

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FRACLAB_THREADS", "1")))
    except ValueError:
        raise UsageError("FRACLAB_THREADS must be an integer") from None


def _initial_values(init, master: int, streams: np.ndarray, dim: int) -> np.ndarray:
    if callable(init):
        out = np.empty((streams.size, dim))
        for j, s in enumerate(streams):
            out[j] = np.reshape(init(generator(RngSeed(master, INIT_STREAM_OFFSET + int(s)))), (dim,))
        return out
    return np.broadcast_to(np.atleast_1d(np.asarray(init, dtype=float)), (streams.size, dim)).copy()


def _time_index(grid: Grid, t: float) -> int:
    n = int(round(t / grid.k))
    if not 0 <= n <= grid.N:
        raise UsageError(f"time {t} outside [0, {grid.T}]")
    return n


def ensemble(alpha: float, potential: Potential, init_sampler, noise_spec: NoiseSpec,
             grid: Grid, n_samples: int, master_seed: int,
             histogram_times: Sequence[float] = (), *, dim: int = 1,
             bins: int = 61, hist_range: tuple[float, float] = (-3.0, 3.0),
             chunk_size: int = DEFAULT_CHUNK, opts: SolverOptions | None = None,
             keep_samples: bool = True) -> EnsembleResult:
    """Monte Carlo ensemble of the backward scheme.

    Sample *i* uses noise stream *i* and, if *init_sampler* is callable,
    initial-value stream ``2**32 + i``; results do not depend on chunking or
    thread count. *init_sampler* is either a fixed initial value or a
    callable ``rng -> x0``.

    Histogram masses are fractions of the whole ensemble; samples outside
    *hist_range* are counted in the end bins, so masses sum to one.
    """
    alpha = check_order(alpha)
    if n_samples < 2:
        raise UsageError("need at least two samples")
    if abs(noise_spec.alpha - alpha) > 1e-12:
        raise UsageError("noise order must match the equation order")
    opts = opts or SolverOptions()
    table = caputo_coefficients(alpha, grid.N)
    hist_idx = {float(t): _time_index(grid, t) for t in histogram_times}

    chunks = [np.arange(s, min(s + chunk_size, n_samples))
              for s in range(0, n_samples, chunk_size)]

    def run(streams: np.ndarray):
        G = noise_batch(noise_spec, grid, master_seed, streams.tolist())
        x0 = _initial_values(init_sampler, master_seed, streams, dim)
        X = solve_batch(table, grid, potential, x0, np.repeat(G[:, :, None], dim, axis=2), opts)
        return X

    workers = min(_threads(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]

    acc = _MomentAccumulator(grid.N + 1)
    at_times: dict[float, list] = {t: [] for t in hist_idx}
    for X in results:  # merged in chunk order to keep results bit-reproducible
        acc.add(np.sum(X**2, axis=2))
        for t, n in hist_idx.items():
            at_times[t].append(X[:, n, :])

    out = EnsembleResult(grid=grid, n_samples=n_samples, mean_sq=acc.mean,
                         stderr_mean_sq=acc.stderr,
                         seeds={"master": master_seed, "noise_streams": [0, n_samples - 1],
                                "init_streams": ([INIT_STREAM_OFFSET, INIT_STREAM_OFFSET + n_samples - 1]
                                                 if callable(init_sampler) else None)})
    edges = np.linspace(hist_range[0], hist_range[1], bins + 1)
    for t, n in hist_idx.items():
        vals = np.concatenate(at_times[t], axis=0)
        if keep_samples:
            out.samples[t] = vals
        counts, _ = np.histogram(np.clip(vals[:, 0], edges[0], edges[-1]), bins=edges)
        out.histograms[t] = Histogram(t=grid.t(n), edges=edges, masses=counts / n_samples)
    return out


def coupled_pair(alpha: float, potential: Potential, x0_a, x0_b, noise_spec: NoiseSpec,
                 grid: Grid, seed: RngSeed | int,
                 opts: SolverOptions | None = None) -> tuple[Path, Path]:
    """Two solutions driven by the same noise realization (synchronization coupling)."""
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    G = noise_batch(noise_spec, grid, seed.master, [seed.stream])[0]
    noise = Path(grid, G)
    return (solve_fsde(alpha, potential, x0_a, noise, grid, opts),
            solve_fsde(alpha, potential, x0_b, noise, grid, opts))


@dataclass
class ContractionTable:
    t: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    discrete_bound: np.ndarray
    """Solution of the discrete linear scheme with rate ``-2 mu`` (diagnostic only)."""
    flagged: np.ndarray
    n_samples: int

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flagged))

    def rows(self) -> list[dict]:
        return [dict(t=float(t), empirical=float(e), bound=float(b), stderr=float(s),
                     discrete_bound=float(db), flagged=bool(f))
                for t, e, b, s, db, f in zip(self.t, self.empirical, self.bound, self.stderr,
                                             self.discrete_bound, self.flagged)]


def contraction_experiment(alpha: float, potential: Potential, init_a, init_b,
                           noise_spec: NoiseSpec, grid: Grid, n_samples: int, seed: int,
                           *, n_stderr: float = 3.0, abs_slack: float = 1e-8,
                           chunk_size: int = DEFAULT_CHUNK,
                           opts: SolverOptions | None = None) -> ContractionTable:
    """Coupled ensembles and the bound :math:`E|Z_n|^2 \\le E|Z_0|^2 E_\\alpha(-2\\mu t_n^\\alpha)`.

    A row is flagged when the empirical mean of :math:`|Z_n|^2` exceeds the
    bound by more than ``n_stderr`` standard errors plus *abs_slack*.
    """
    from .fode import solve_linear_implicit

    alpha = check_order(alpha)
    mu = potential.mu
    if not (mu and mu > 0):
        raise UsageError("contraction bound needs a strongly convex potential (mu > 0)")
    opts = opts or SolverOptions()
    table = caputo_coefficients(alpha, grid.N)
    acc = _MomentAccumulator(grid.N + 1)
    for start in range(0, n_samples, chunk_size):
        streams = np.arange(start, min(start + chunk_size, n_samples))
        G = noise_batch(noise_spec, grid, seed, streams.tolist())[:, :, None]
        xa = _initial_values(init_a, seed, streams, 1)
        xb = _initial_values(init_b, seed + 1, streams, 1) if callable(init_b) else \
            _initial_values(init_b, seed, streams, 1)
        Xa = solve_batch(table, grid, potential, xa, G, opts)
        Xb = solve_batch(table, grid, potential, xb, G, opts)
        acc.add(np.sum((Xa - Xb) ** 2, axis=2))
    u0 = acc.mean[0]
    t = grid.times
    bound = u0 * mittag_leffler_array(alpha, -2.0 * mu * t**alpha)
    discrete = u0 * solve_linear_implicit(alpha, -2.0 * mu, 1.0, grid, table).scalar
    stderr = acc.stderr
    flagged = acc.mean > bound + n_stderr * stderr + abs_slack
    return ContractionTable(t=t, empirical=acc.mean, bound=bound, stderr=stderr,
                            discrete_bound=discrete, flagged=flagged, n_samples=n_samples)


# }}}


# {{{ equilibrium diagnostics


def wasserstein2_1d(samples_a, samples_b) -> float:
    """Exact :math:`W_2` between two 1-D empirical measures via quantile coupling.

    For equal sizes the sorted samples are matched; otherwise the two
    piecewise-constant quantile functions are integrated exactly over the
    union of their breakpoints.
    """
    a = np.sort(np.asarray(samples_a, dtype=float).ravel())
    b = np.sort(np.asarray(samples_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise UsageError("both samples must be nonempty")
    if a.size == b.size:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    qa = np.arange(1, a.size + 1) / a.size
    qb = np.arange(1, b.size + 1) / b.size
    q = np.union1d(qa, qb)
    widths = np.diff(np.concatenate([[0.0], q]))
    # quantile on (q_{j-1}, q_j] is the first sample whose cumulative mass reaches q_j
    ia = np.minimum(np.searchsorted(qa, q - 1e-15), a.size - 1)
    ib = np.minimum(np.searchsorted(qb, q - 1e-15), b.size - 1)
    return float(np.sqrt(np.sum(widths * (a[ia] - b[ib]) ** 2)))


def _scalar_phi(V: Potential):
    return lambda x: float(V.phi(np.array([x]))) if np.ndim(V.phi(np.array([x]))) == 0 \
        else float(V.phi(np.array([x]))[()])


def gibbs_moment(V: Potential, p: int) -> float:
    """:math:`\\int x^p e^{-V} dx / \\int e^{-V} dx` for a 1-D potential."""
    if p < 0 or p % 2:
        raise UsageError("moment order must be a nonnegative even integer")
    phi = _scalar_phi(V)
    if p == 0:
        return 1.0
    opts = dict(epsabs=1e-13, epsrel=1e-10, limit=200)
    num, _ = integrate.quad(lambda x: x**p * math.exp(-phi(x)), -np.inf, np.inf, **opts)
    den, _ = integrate.quad(lambda x: math.exp(-phi(x)), -np.inf, np.inf, **opts)
    return num / den


def sample_gibbs(V: Potential, n: int, seed: RngSeed | int, *, lim: float = 8.0,
                 n_grid: int = 20001) -> np.ndarray:
    """Inverse-CDF draws from the 1-D density proportional to :math:`e^{-V}`."""
    x = np.linspace(-lim, lim, n_grid)
    dens = np.exp(-np.asarray(V.phi(x[:, None]), dtype=float).reshape(-1))
    cdf = integrate.cumulative_trapezoid(dens, x, initial=0.0)
    cdf /= cdf[-1]
    u = generator(seed).random(n)
    return np.interp(u, cdf, x)


# }}}
