"""Acceptance batteries.

Each battery runs a fixed block of numbered criteria with frozen seeds and
returns a :class:`RunManifest` holding one :class:`CriterionResult` per
criterion. When an output directory is given, every criterion also writes
its measured table as CSV; these files depend only on the seeds, so
repeated runs are byte-identical.
"""

from __future__ import annotations

import filecmp
import math
import time
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Callable

import numpy as np
from scipy import special

from .. import __version__
from ..errors import UsageError
from ..fbm import fbm_covariance, sample_fbm_batch
from ..fode import (RhsFunction, comparison_check, exact_linear_solution, observed_order,
                    solve_implicit, solve_linear_implicit, step_doubling_check)
from ..fracops import (Grid, caputo_coefficients, check_complete_monotone, convolution_inverse,
                       integral_weights)
from ..fsde import (NoiseSpec, contraction_experiment, ensemble, gibbs_moment,
                    quadratic_potential, quadratic_quartic_potential, quartic_potential,
                    sample_gibbs, wasserstein2_1d)
from ..gradflow import (decay_check, dissipation_check, holder_exponent, solve_gradflow,
                        two_step_comparison)
from ..mlf import mittag_leffler
from ..prox import prox_l1, prox_quadratic, prox_quadratic_quartic, prox_quartic
from ..rng import generator
from .config import CriterionResult, RunManifest
from .emit import Table, emit

BATTERIES = ("coeffs", "fode", "fsde-small", "fsde-paper", "gradflow")

# W2 between the t = 7.5 ensemble (10^4 samples) and 10^5 Gibbs draws was
# 0.039-0.050 over master seeds 1, 2, 3, 4, 2024; a variance-matched Gaussian
# sits at 0.097. The gate lies between the two.
W2_CALIBRATION_THRESHOLD = 0.07

QUARTIC_STEP = 5 / 2**7
QUARTIC_WINDOW = (0.64, 0.72)


@dataclass
class Outcome:
    result: CriterionResult
    tables: dict


@dataclass(frozen=True)
class Mode:
    samples: int
    n_stderr: float
    small: bool


FULL = Mode(samples=10_000, n_stderr=3.0, small=False)
SMALL = Mode(samples=100, n_stderr=5.0, small=True)


# {{{ coefficient criteria


def criterion_1() -> Outcome:
    t = Table(["alpha", "delta_err", "min_c", "c0_err", "cm_ok"])
    ok = True
    n_max = 2**13
    for alpha in (0.3, 0.5, 0.8):
        tab = caputo_coefficients(alpha, n_max)
        a = integral_weights(alpha, n_max).astype(np.longdouble)
        inv = convolution_inverse(a, n_max)
        prod = np.convolve(a, inv)[: n_max + 1]
        delta = np.zeros(n_max + 1, dtype=np.longdouble)
        delta[0] = 1
        derr = float(np.max(np.abs(prod - delta)))
        min_c = float(np.min(tab.c[1:]))
        c0_err = abs(float(tab.c0) - math.gamma(1 + alpha))
        cm = check_complete_monotone(tab.c[1:], depth=12)
        ok &= derr <= 1e-12 and min_c > 0 and c0_err <= 1e-12 and cm
        t.append([alpha, derr, min_c, c0_err, cm])
    worst = max(r[1] for r in t.rows)
    return Outcome(CriterionResult("1", "coefficient identities", bool(ok),
                                   {"max_delta_err": worst}), {"coeffs": t})


def criterion_2() -> Outcome:
    t = Table(["alpha", "j", "c_ratio", "tail_ratio"])
    ok = True
    j = 10_000
    for alpha in (0.3, 0.5, 0.8):
        tab = caputo_coefficients(alpha, j)
        c_ratio = float(tab.c[j]) * j ** (1 + alpha) / (-1 / math.gamma(-alpha))
        tail_ratio = float(tab.c_tail[j]) * j**alpha / (1 / math.gamma(1 - alpha))
        ok &= abs(c_ratio - 1) <= 0.02 and abs(tail_ratio - 1) <= 0.02
        t.append([alpha, j, c_ratio, tail_ratio])
    worst = max(max(abs(r[2] - 1), abs(r[3] - 1)) for r in t.rows)
    return Outcome(CriterionResult("2", "coefficient asymptotics", bool(ok),
                                   {"max_rel_dev": worst}), {"asymptotics": t})


def criterion_5() -> Outcome:
    t = Table(["check", "alpha", "z", "value", "reference", "abs_err", "tol"])
    e_half = mittag_leffler(0.5, -1.0)
    ref = math.e * special.erfc(1.0)
    t.append(["erfc", 0.5, -1.0, e_half, ref, abs(e_half - ref), 1e-9])
    for z in np.linspace(-10.0, 3.0, 27):
        for method in ("auto", "series"):
            v = mittag_leffler(1.0, z, method=method)
            t.append([f"exp-{method}", 1.0, z, v, math.exp(z), abs(v - math.exp(z)), 1e-12])
    overlap = [(0.5, (-1.0, -2.0, -5.0, -10.0)), (0.8, (-1.0, -2.0, -5.0, -10.0)),
               (0.9, (-1.0, -2.0, -5.0, -10.0)), (0.3, (-1.0, -2.0, -3.0))]
    for alpha, zs in overlap:
        for z in zs:
            s = mittag_leffler(alpha, z, method="series")
            p = mittag_leffler(alpha, z, method="spectral")
            t.append(["overlap", alpha, z, s, p, abs(s - p), 1e-9])
    ok = all(r[5] <= r[6] for r in t.rows)
    return Outcome(CriterionResult("5", "Mittag-Leffler evaluation", bool(ok),
                                   {"erfc_err": t.rows[0][5],
                                    "max_overlap_err": max(r[5] for r in t.rows if r[0] == "overlap")}),
                   {"mlf": t})


# }}}


# {{{ fode criteria


def criterion_3() -> Outcome:
    alpha, lam, x0, T = 0.5, 1.0, 1.0, 1.0
    t = Table(["k", "sup_err", "lower_ok", "monotone_ok", "doubling_ok"])
    ok = True
    errs = []
    for m in range(6, 11):
        k = 2.0**-m
        g = Grid.from_step(k, T)
        X = solve_linear_implicit(alpha, lam, x0, g).scalar
        ex = exact_linear_solution(alpha, lam, x0, g.times)
        lower = bool(np.all(ex <= X + 1e-12))
        mono = bool(np.all(X[:-1] <= X[1:] + 1e-12))
        dbl = step_doubling_check(alpha, lam, x0, k, T)
        err = float(np.max(np.abs(X - ex)))
        errs.append((k, err))
        ok &= lower and mono and dbl
        t.append([k, err, lower, mono, dbl])
    order = observed_order(errs)
    ok &= order >= 0.4
    return Outcome(CriterionResult("3", "linear FODE bounds and order", bool(ok),
                                   {"order": order}), {"linear": t})


def criterion_4(n_triples: int = 100, seed: int = 4) -> Outcome:
    f = RhsFunction(lambda t, x: -x - x**3, jac=lambda t, x: np.atleast_2d(-1 - 3 * x**2),
                    monotone_nonincreasing=True)
    g = Grid(1.0, 64)
    t = Table(["alpha", "triples", "violations"])
    total = 0
    for j, alpha in enumerate((0.4, 0.7)):
        rng = generator(seed, j)
        bad = 0
        for _ in range(n_triples):
            x0 = rng.uniform(-2.0, 2.0)
            lo = x0 - rng.uniform(0.0, 1.0)
            hi = x0 + rng.uniform(0.0, 1.0)
            g_sub = -np.abs(rng.normal(0.0, 1.0, g.N + 1))
            g_sup = np.abs(rng.normal(0.0, 1.0, g.N + 1))
            sol = solve_implicit(alpha, f, x0, g)
            sub = solve_implicit(alpha, f, lo, g, forcing=g_sub)
            sup = solve_implicit(alpha, f, hi, g, forcing=g_sup)
            bad += not comparison_check(sub, sol, sup, slack=1e-10)
        total += bad
        t.append([alpha, n_triples, bad])
    return Outcome(CriterionResult("4", "comparison principles", total == 0,
                                   {"violations": total}), {"comparison": t})


# }}}


# {{{ fsde criteria


def criterion_6(mode: Mode, seed: int = 6) -> Outcome:
    g = Grid(2.0, 256)
    n1, n2 = 128, 256
    t = Table(["H", "paths", "var_b1", "var_exact", "var_se", "cov_b1b2", "cov_exact", "cov_se"])
    ok = True
    for j, H in enumerate((0.6, 0.8)):
        B = sample_fbm_batch(H, g, seed + j, range(mode.samples))
        v = B[:, n1] ** 2
        c = B[:, n1] * B[:, n2]
        ve, ce = fbm_covariance(H, 1.0, 1.0), fbm_covariance(H, 1.0, 2.0)
        vse = v.std(ddof=1) / math.sqrt(v.size)
        cse = c.std(ddof=1) / math.sqrt(c.size)
        ok &= abs(v.mean() - ve) <= mode.n_stderr * vse and abs(c.mean() - ce) <= mode.n_stderr * cse
        t.append([H, mode.samples, v.mean(), ve, vse, c.mean(), ce, cse])
    dev = max(max(abs(r[2] - r[3]) / r[4], abs(r[5] - r[6]) / r[7]) for r in t.rows)
    return Outcome(CriterionResult("6", "fBm covariance", bool(ok),
                                   {"max_dev_in_stderr": dev, "gate": mode.n_stderr}),
                   {"fbm": t})


def criterion_7(mode: Mode, seed: int = 2024) -> Outcome:
    V = quartic_potential()
    g = Grid.from_step(QUARTIC_STEP, 10.0)
    t_probe = 7.5
    res = ensemble(0.8, V, 1.0, NoiseSpec.physical(0.6), g, mode.samples, seed, [t_probe])
    n = int(round(t_probe / g.k))
    m, se = float(res.mean_sq[n]), float(res.stderr_mean_sq[n])
    lo, hi = QUARTIC_WINDOW
    if mode.small:
        lo, hi = lo - mode.n_stderr * se, hi + mode.n_stderr * se
    gibbs = sample_gibbs(V, 100_000, seed + 1)
    w2 = wasserstein2_1d(res.samples[t_probe][:, 0], gibbs)
    ok = lo <= m <= hi
    if not mode.small:
        # W2 gate is calibrated at 10^4 samples only
        ok &= w2 < W2_CALIBRATION_THRESHOLD
    hist = res.histograms[t_probe]
    tables = {
        "meansq": Table.from_columns(t=g.times, mean_sq=res.mean_sq, stderr=res.stderr_mean_sq),
        "hist": Table.from_columns(bin_left=hist.edges[:-1], bin_right=hist.edges[1:],
                                   mass=hist.masses),
    }
    return Outcome(CriterionResult("7", "quartic FSDE equilibrium", bool(ok),
                                   {"mean_sq": m, "stderr": se, "window_lo": lo, "window_hi": hi,
                                    "gibbs_moment": gibbs_moment(V, 2), "w2": w2,
                                    "w2_threshold": W2_CALIBRATION_THRESHOLD,
                                    "w2_gated": not mode.small}),
                   tables)


def criterion_8(mode: Mode, seed: int = 8) -> Outcome:
    g = Grid.from_step(QUARTIC_STEP, 10.0)
    pairs = 1000 if not mode.small else mode.samples
    spec = NoiseSpec.physical(0.6)
    tables = {}
    flagged = {}
    excess = {}
    for V in (quadratic_potential(), quadratic_quartic_potential()):
        c = contraction_experiment(0.8, V, 0.0, 2.0, spec, g, pairs, seed, n_stderr=mode.n_stderr)
        flagged[V.name] = c.n_flagged
        excess[V.name] = float(np.max(c.empirical - c.bound - mode.n_stderr * c.stderr))
        tables[V.name] = Table.from_columns(t=c.t, empirical=c.empirical, bound=c.bound,
                                            stderr=c.stderr, discrete_bound=c.discrete_bound,
                                            flagged=c.flagged)
    ok = all(v == 0 for v in flagged.values())
    measured = {f"flagged_{k}": v for k, v in flagged.items()}
    measured.update({f"max_excess_{k}": v for k, v in excess.items()})
    return Outcome(CriterionResult("8", "coupled contraction bound", ok, measured), tables)


# }}}


# {{{ gradflow criterion


def criterion_9() -> Outcome:
    t = Table(["check", "value", "threshold", "passed"])

    def add(name, value, threshold, passed):
        t.append([name, float(value), float(threshold), bool(passed)])

    alpha = 0.5
    errs = []
    for m in range(6, 11):
        g = Grid(1.0, 2**m)
        s = solve_gradflow(alpha, prox_quadratic(1.0), 1.0, g)
        errs.append((g.k, float(np.max(np.abs(s.U[:, 0] - exact_linear_solution(alpha, -1.0, 1.0, g.times))))))
    order = observed_order(errs)
    add("quadratic_order", order, alpha - 0.1, order >= alpha - 0.1)

    alpha = 0.6
    g = Grid(1.0, 256)
    for name, prox in (("quadratic", prox_quadratic(1.0)), ("l1", prox_l1()),
                       ("quartic", prox_quartic())):
        s = solve_gradflow(alpha, prox, 1.0, g)
        add(f"dissipation_{name}", float(dissipation_check(s)), 1.0, dissipation_check(s))
        if name in ("quadratic", "l1"):
            h = holder_exponent(s)
            add(f"holder_{name}", h, alpha / 2 - 0.05, h >= alpha / 2 - 0.05)

    steps = [2.0**-m for m in range(4, 9)]
    sups = [two_step_comparison(alpha, prox_quadratic(1.0), 1.0, k) for k in steps]
    trend = observed_order(list(zip(steps, sups)))
    add("two_step_trend", trend, alpha / 4 - 0.1, trend >= alpha / 4 - 0.1)
    worst_ratio = max(b / a for a, b in zip(sups, sups[1:]))
    add("two_step_ratio", worst_ratio, 2 ** (-alpha / 4) * 1.2, worst_ratio <= 2 ** (-alpha / 4) * 1.2)

    s = solve_gradflow(0.5, prox_quadratic(1.0), 1.0, Grid(1.0, 256))
    d1 = decay_check(s, 0.0, 0.0, 1.0)
    add("decay_quadratic", float(d1), 1.0, d1)
    s = solve_gradflow(0.7, prox_quadratic_quartic(), 2.0, Grid(1.0, 256))
    d2 = decay_check(s, 0.0, 0.0, 1.0)
    add("decay_quadratic_quartic", float(d2), 1.0, d2)

    ok = all(r[3] for r in t.rows)
    return Outcome(CriterionResult("9", "gradient flow diagnostics", bool(ok),
                                   {"order": order, "two_step_trend": trend}), {"gradflow": t})


# }}}


def _battery(battery: str) -> list[Callable[[], Outcome]]:
    if battery == "coeffs":
        return [criterion_1, criterion_2, criterion_5]
    if battery == "fode":
        return [criterion_3, criterion_4]
    if battery in ("fsde-small", "fsde-paper"):
        mode = SMALL if battery == "fsde-small" else FULL
        return [lambda: criterion_6(mode), lambda: criterion_7(mode), lambda: criterion_8(mode)]
    if battery == "gradflow":
        return [criterion_9]
    raise UsageError(f"unknown battery {battery!r}; choose from {', '.join(BATTERIES)}")


SEEDS = {"6": [6, 7], "7": [2024, 2025], "8": [8], "4": [4]}


def run_acceptance(battery: str, out_dir=None, *, echo: Callable[[str], None] | None = None
                   ) -> RunManifest:
    """Run one battery; writes ``<battery>_c<id>_<table>.csv`` files into *out_dir* if given."""
    runners = _battery(battery)
    manifest = RunManifest(config={"battery": battery}, version=__version__)
    start = time.perf_counter()
    out = FsPath(out_dir) if out_dir is not None else None
    for run in runners:
        outcome = run()
        manifest.add(outcome.result)
        cid = outcome.result.id
        if cid in SEEDS:
            manifest.seeds.append({"criterion": cid, "masters": SEEDS[cid]})
        if echo is not None:
            echo(outcome.result.line())
        if out is not None:
            for name, table in outcome.tables.items():
                p = emit(table, out / f"{battery}_c{cid}_{name}.csv")
                manifest.outputs.append(p.name)
    manifest.wall_time = time.perf_counter() - start
    if out is not None:
        (out / f"{battery}_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def compare_outputs(dir_a, dir_b) -> list[str]:
    """Names of CSV files that differ (or are missing) between two output directories."""
    a, b = FsPath(dir_a), FsPath(dir_b)
    names = sorted({p.name for p in a.glob("*.csv")} | {p.name for p in b.glob("*.csv")})
    return [n for n in names
            if not ((a / n).exists() and (b / n).exists() and filecmp.cmp(a / n, b / n, shallow=False))]
