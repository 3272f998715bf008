"""Command-line entry point ``fraclab``.

Exit codes: 0 success, 1 an acceptance criterion or study gate failed,
2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path as FsPath

import numpy as np

from .. import __version__
from ..errors import FraclabError, NumericalFailure, UsageError
from ..fbm import sample_fbm
from ..fode import RhsFunction, exact_linear_solution, solve_implicit, solve_linear_implicit
from ..fracops import Grid, caputo_coefficients
from ..fsde import NoiseSpec, ensemble
from ..gradflow import solve_gradflow
from ..mlf import mittag_leffler, mlf_decay_bound
from ..rng import RngSeed
from .acceptance import BATTERIES, QUARTIC_STEP, compare_outputs, run_acceptance
from .config import RunConfig, RunManifest
from .emit import Table, emit
from .registry import POTENTIALS, PROXES, make_potential, make_prox
from .studies import STUDIES, run_convergence_study

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _out(path: str | None, table: Table) -> None:
    if path is None or path == "-":
        from .emit import render

        sys.stdout.write(render(table, "csv"))
    else:
        emit(table, path)


# {{{ subcommands


def cmd_coeffs(args) -> int:
    tab = caputo_coefficients(args.alpha, args.n_max)
    n = np.arange(args.n_max + 1)
    _out(args.out, Table.from_columns(n=n, a=tab.a, a_inv=tab.a_inv.astype(float),
                                      c=tab.c.astype(float), c_tail=tab.c_tail.astype(float)))
    return EXIT_OK


def cmd_mlf(args) -> int:
    for z in args.z:
        print(f"{mittag_leffler(args.alpha, z, method=args.method):.12g}")
    return EXIT_OK


def cmd_fode(args) -> int:
    g = Grid(args.T, args.n)
    if args.rhs == "linear":
        X = solve_linear_implicit(args.alpha, args.lam, args.x0, g).scalar
        exact = exact_linear_solution(args.alpha, args.lam, args.x0, g.times)
    else:
        f = RhsFunction(lambda t, x: args.lam * x - x**3,
                        jac=lambda t, x: np.atleast_2d(args.lam - 3 * x**2))
        X = solve_implicit(args.alpha, f, args.x0, g).scalar
        exact = np.full(g.N + 1, np.nan)
    _out(args.out, Table.from_columns(n=np.arange(g.N + 1), t=g.times, X_n=X, exact=exact,
                                      error=np.abs(X - exact)))
    return EXIT_OK


def cmd_fbm(args) -> int:
    g = Grid(args.T, args.n)
    B = sample_fbm(args.hurst, g, RngSeed(args.seed, args.stream)).B
    _out(args.out, Table.from_columns(n=np.arange(g.N + 1), t=g.times, B=B))
    return EXIT_OK


def cmd_fsde(args) -> int:
    V = make_potential(args.potential, args.expr)
    g = Grid.from_step(args.k, args.T)
    if args.mode == "physical":
        spec = NoiseSpec.physical(args.hurst)
        if abs(spec.alpha - args.alpha) > 1e-12:
            raise UsageError("physical noise needs alpha = 2 - 2H; pass --mode general otherwise")
    else:
        spec = NoiseSpec(H=args.hurst, sigma=args.sigma, alpha=args.alpha, mode="general")
    res = ensemble(args.alpha, V, args.x0, spec, g, args.samples, args.seed, args.hist_times,
                   keep_samples=False)
    prefix = args.out_prefix
    emit(Table.from_columns(t=g.times, mean_sq=res.mean_sq, stderr=res.stderr_mean_sq),
         f"{prefix}_meansq.csv")
    for t, h in res.histograms.items():
        emit(Table.from_columns(bin_left=h.edges[:-1], bin_right=h.edges[1:], mass=h.masses),
             f"{prefix}_hist_{t:g}.csv")
    cfg = RunConfig(experiment="fsde", alpha=args.alpha, hurst=args.hurst,
                    potential=args.potential if args.expr is None else f"expr:{args.expr}",
                    x0=[args.x0], T=args.T, k=args.k, samples=args.samples, seed=args.seed,
                    hist_times=list(args.hist_times), out_prefix=prefix)
    manifest = RunManifest(config=cfg.to_dict(), version=__version__,
                           seeds=[res.seeds],
                           outputs=[f"{prefix}_meansq.csv"] +
                           [f"{prefix}_hist_{t:g}.csv" for t in res.histograms])
    manifest.config["noise"] = {"mode": spec.mode, "sigma": spec.sigma}
    if abs(args.k - QUARTIC_STEP) < 1e-15:
        manifest.config["step"] = {"used": QUARTIC_STEP, "alternate_reading": 0.391}
    FsPath(f"{prefix}_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return EXIT_OK


def cmd_gradflow(args) -> int:
    prox = make_prox(args.phi)
    g = Grid(args.T, args.n)
    s = solve_gradflow(args.alpha, prox, args.u0, g)
    cols = {"n": np.arange(g.N + 1), "t": g.times}
    if s.U.shape[1] == 1:
        cols["U"] = s.U[:, 0]
    else:
        for j in range(s.U.shape[1]):
            cols[f"U{j}"] = s.U[:, j]
    cols["phi"] = s.energies
    cols["xi_norm"] = np.linalg.norm(s.xi, axis=1)
    mu = args.mu if args.mu is not None else (prox.mu if prox.mu else None)
    if mu:
        phi_star = prox.phi_star if prox.phi_star is not None else 0.0
        cols["decay_bound"] = phi_star + (s.energies[0] - phi_star) * mlf_decay_bound(args.alpha, mu, g.times)
    _out(args.out, Table.from_columns(**cols))
    return EXIT_OK


def cmd_study(args) -> int:
    if args.config:
        cfg = RunConfig.from_json(FsPath(args.config).read_text(encoding="utf-8"))
    else:
        cfg = RunConfig(experiment=args.experiment, alpha=args.alpha, hurst=args.hurst,
                        potential=args.potential, phi=args.phi, T=args.T, steps=args.steps,
                        samples=args.samples, seed=args.seed)
    manifest, table = run_convergence_study(cfg)
    _out(args.out, table)
    if args.manifest:
        FsPath(args.manifest).write_text(manifest.to_json(), encoding="utf-8")
    for c in manifest.criteria:
        print(c.line(), file=sys.stderr)
    return EXIT_OK if manifest.passed else EXIT_FAIL


def cmd_accept(args) -> int:
    names = BATTERIES if args.battery == "all" else (args.battery,)
    ok = True
    for name in names:
        ok &= run_acceptance(name, args.out_dir, echo=print).passed
    if args.check_determinism:
        if args.out_dir is None:
            raise UsageError("--check-determinism needs --out-dir")
        again = FsPath(args.out_dir) / "rerun"
        for name in names:
            run_acceptance(name, again)
        diff = compare_outputs(args.out_dir, again)
        print(f"[{'PASS' if not diff else 'FAIL'}] criterion 10: byte-identical CSVs"
              + (f" (differing: {', '.join(diff)})" if diff else ""))
        ok &= not diff
    return EXIT_OK if ok else EXIT_FAIL


# }}}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fraclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("coeffs", help="coefficient table")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("mlf", help="Mittag-Leffler function")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--z", type=_floats, required=True)
    s.add_argument("--method", choices=("auto", "series", "spectral"), default="auto")
    s.set_defaults(func=cmd_mlf)

    s = sub.add_parser("fode", help="implicit fractional ODE solve")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--rhs", choices=("linear", "cubic"), default="linear")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fode)

    s = sub.add_parser("fbm", help="fractional Brownian motion path")
    s.add_argument("--hurst", type=float, required=True)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fbm)

    s = sub.add_parser("fsde", help="fractional SDE ensemble")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--hurst", type=float, required=True)
    s.add_argument("--potential", choices=sorted(POTENTIALS) + ["expr"], default="quartic")
    s.add_argument("--expr", help="SymPy expression in x for --potential expr")
    s.add_argument("--mode", choices=("physical", "general"), default="physical")
    s.add_argument("--sigma", type=float, default=1.0, help="noise amplitude in general mode")
    s.add_argument("--x0", type=float, default=1.0)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--hist-times", type=_floats, default=[])
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_fsde)

    s = sub.add_parser("gradflow", help="fractional gradient flow")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--phi", choices=sorted(PROXES), default="quadratic")
    s.add_argument("--u0", type=_floats, required=True)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mu", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gradflow)

    s = sub.add_parser("study", help="convergence study")
    s.add_argument("--config", help="RunConfig JSON file; overrides the flags below")
    s.add_argument("--experiment", choices=STUDIES)
    s.add_argument("--alpha", type=float)
    s.add_argument("--hurst", type=float)
    s.add_argument("--potential")
    s.add_argument("--phi")
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--steps", type=_floats, default=[])
    s.add_argument("--samples", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("accept", help="acceptance batteries")
    s.add_argument("battery", choices=BATTERIES + ("all",))
    s.add_argument("--out-dir")
    s.add_argument("--check-determinism", action="store_true")
    s.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "study" and not args.config and not args.experiment:
        print("fraclab study: need --config or --experiment", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"fraclab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FraclabError, OSError, json.JSONDecodeError) as exc:
        print(f"fraclab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
