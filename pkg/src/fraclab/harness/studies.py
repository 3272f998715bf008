"""Convergence studies over dyadic step families."""

from __future__ import annotations

import math
import time

import numpy as np

from .. import __version__
from ..errors import UsageError
from ..fbm import sample_fbm_batch
from ..fode import exact_linear_solution, observed_order, solve_linear_implicit
from ..fode import SolverOptions
from ..fracops import Grid, caputo_coefficients
from ..fsde import NoiseSpec, driver_hurst, noise_from_fbm, solve_batch
from ..gradflow import two_step_comparison
from .config import CriterionResult, RunConfig, RunManifest
from .emit import Table
from .registry import make_potential, make_prox

STUDIES = ("fode-linear", "fsde-self", "gradflow-two-step")


def _steps(config: RunConfig) -> list[float]:
    steps = sorted((float(k) for k in config.steps), reverse=True)
    if len(steps) < 3:
        raise UsageError("a convergence study needs at least three steps")
    for k in steps:
        m = math.log2(config.T / k)
        if m < 0 or abs(m - round(m)) > 1e-9:
            raise UsageError(f"step {k} is not of the form 2^-m T")
    return steps


def _fode_linear(config: RunConfig, steps):
    alpha = config.alpha
    lam = 1.0 if config.lam is None else config.lam
    x0 = 1.0 if config.x0 is None else config.x0[0]
    rows = []
    for k in steps:
        g = Grid.from_step(k, config.T)
        X = solve_linear_implicit(alpha, lam, x0, g).scalar
        rows.append((k, float(np.max(np.abs(X - exact_linear_solution(alpha, lam, x0, g.times))))))
    return rows, alpha - 0.1


def self_convergence_errors(alpha: float, spec: NoiseSpec, potential, x0: float, T: float,
                            steps, samples: int, seed: int):
    """``sup_n sqrt(E|X^(k) - X^(k/2)|^2)`` at the coarse nodes, for each *k* in *steps*.

    All resolutions share one driver path sampled on the finest grid, so
    each pair of solutions is driven by the same noise realization.
    """
    fine_k = steps[-1] / 2
    fine = Grid.from_step(fine_k, T)
    B = sample_fbm_batch(driver_hurst(spec), fine, seed, range(samples))
    x = np.full((samples, 1), float(x0))
    sols = {}
    for k in list(steps) + [fine_k]:
        g = Grid.from_step(k, T)
        r = fine.N // g.N
        G = noise_from_fbm(spec, g, B[:, ::r])
        sols[k] = solve_batch(caputo_coefficients(alpha, g.N), g, potential, x, G[:, :, None],
                              SolverOptions())[:, :, 0]
    rows = []
    for k in steps:
        d = sols[k] - sols[k / 2][:, ::2]
        rows.append((k, float(np.max(np.sqrt(np.mean(d**2, axis=0))))))
    return rows


def _fsde_self(config: RunConfig, steps):
    alpha, H = config.alpha, config.hurst
    if alpha is None or H is None:
        raise UsageError("fsde-self needs alpha and hurst")
    if abs(alpha - (2 - 2 * H)) < 1e-12:
        spec = NoiseSpec.physical(H)
    else:
        spec = NoiseSpec(H=H, sigma=1.0, alpha=alpha)
    V = make_potential(config.potential or "quadratic")
    x0 = 1.0 if config.x0 is None else config.x0[0]
    rows = self_convergence_errors(alpha, spec, V, x0, config.T, steps,
                                   config.samples or 200, config.seed)
    return rows, alpha + H - 1 - 0.1


def _gradflow_two_step(config: RunConfig, steps):
    prox = make_prox(config.phi or "quadratic")
    x0 = 1.0 if config.x0 is None else config.x0
    rows = [(k, two_step_comparison(config.alpha, prox, x0, k, T=config.T)) for k in steps]
    return rows, config.alpha / 4 - 0.1


def run_convergence_study(config: RunConfig) -> tuple[RunManifest, Table]:
    """Run the study named by ``config.experiment``; returns the manifest and ``(k, error)`` table."""
    if config.experiment not in STUDIES:
        raise UsageError(f"unknown study {config.experiment!r}; choose from {', '.join(STUDIES)}")
    if config.alpha is None:
        raise UsageError("a study needs alpha")
    steps = _steps(config)
    start = time.perf_counter()
    runner = {"fode-linear": _fode_linear, "fsde-self": _fsde_self,
              "gradflow-two-step": _gradflow_two_step}[config.experiment]
    rows, threshold = runner(config, steps)
    order = observed_order(rows)
    manifest = RunManifest(config=config.to_dict(), version=__version__)
    if config.experiment == "fsde-self":
        manifest.seeds.append({"master": config.seed, "streams": [0, (config.samples or 200) - 1]})
    manifest.add(CriterionResult(id=config.experiment, name="observed order",
                                 passed=bool(order >= threshold),
                                 measured={"order": order, "threshold": threshold}))
    manifest.wall_time = time.perf_counter() - start
    return manifest, Table(["k", "error"], [list(r) for r in rows])
