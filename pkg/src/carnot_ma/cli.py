"""Command-line front end.

Subcommands: solve, suites, barriers, characteristic, info.
Exit codes: 0 ok, 1 usage, 2 validation, 3 nonconvergence, 4 suite failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import load_problem
from .constructions import lower_barrier, upper_barrier
from .errors import (CarnotMAError, ConfigError, ConstructionError,
                     PerronEmptyError)
from .grids import write_csv
from .harness import SUITE_NAMES, run_suites
from .solver import characteristic_points, solve_dirichlet

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_SUITE_FAILURE = 4

REPORT_SCHEMA_VERSION = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="carnot-ma",
                     description="Subelliptic Monge-Ampere toolkit")
    parser.add_argument("--version", action="version",
                        version=f"carnot-ma {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="path to a JSON problem configuration")
        p.add_argument("--out", default=".",
                       help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for sampling diagnostics")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for Jacobi sweeps "
                            "(CARNOT_MA_THREADS as fallback)")
        p.add_argument("--h", type=float, default=None,
                       help="override the grid spacing")

    common(sub.add_parser("solve", help="solve the Dirichlet problem"))
    suites = sub.add_parser("suites", help="run verification suites")
    common(suites, config_required=False)
    suites.add_argument("names", nargs="*", metavar="SUITE",
                        help=f"suites to run (default: all of "
                             f"{', '.join(SUITE_NAMES)})")
    common(sub.add_parser("barriers",
                          help="construct lower/upper barriers"))
    common(sub.add_parser("characteristic",
                          help="detect characteristic boundary points"))
    common(sub.add_parser("info", help="summarize a problem configuration"))
    return parser


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CARNOT_MA_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(
                f"CARNOT_MA_THREADS must be an integer, got {env!r}")
    return 1


def _ensure_out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _cmd_solve(args):
    problem = load_problem(args.config, h_override=args.h,
                           threads=_threads(args))
    out_dir = _ensure_out(args)
    gf, report = solve_dirichlet(problem)

    csv_name = problem.outputs.grid_csv or "solution.csv"
    csv_path = os.path.join(out_dir, csv_name)
    write_csv(gf, csv_path)

    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "h": report.h,
        "mode": report.mode,
        "n_nodes": report.n_nodes,
        "iterations": report.iterations,
        "converged": report.converged,
        "final_max_update": report.final_max_update,
        "final_max_residual": report.final_max_residual,
        "monotonicity_violations": report.monotonicity_violations,
        "oracle_error": report.oracle_error,
        "characteristic_points":
            np.asarray(report.characteristic_points).tolist()
            if report.characteristic_points is not None else [],
        "runtime_seconds": report.runtime_seconds,
        "grid_csv": csv_name,
    }
    report_name = problem.outputs.report or "report.json"
    with open(os.path.join(out_dir, report_name), "w") as fh:
        json.dump(payload, fh, indent=2)

    print(report.summary())
    print(f"grid written to {csv_path}")
    return EXIT_OK if report.converged else EXIT_NONCONVERGENCE


def _cmd_suites(args):
    names = args.names or list(SUITE_NAMES)
    unknown = [n for n in names if n not in SUITE_NAMES]
    if unknown:
        raise ConfigError(f"unknown suites: {', '.join(unknown)}")
    results = run_suites(names)
    for result in results:
        print(result.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_SUITE_FAILURE


def _cmd_barriers(args):
    problem = load_problem(args.config, h_override=args.h)
    out_dir = _ensure_out(args)
    rng = np.random.default_rng(args.seed)
    w, params = lower_barrier(problem.domain, problem.boundary_g,
                              problem.family, problem.hamiltonian, rng=rng)
    upper = upper_barrier(problem.domain, problem.boundary_g, problem.family,
                          mode="constant", rng=rng)

    samples = problem.domain.sample_interior(500, rng)
    path = os.path.join(out_dir, "barrier.csv")
    with open(path, "w") as fh:
        n = problem.domain.n
        fh.write(",".join([f"x{a + 1}" for a in range(n)]
                          + ["lower", "upper"]) + "\n")
        lows = np.asarray(w(samples), dtype=float)
        ups = np.asarray(upper.function(samples), dtype=float)
        for p, lo, hi in zip(samples, lows, ups):
            coords = ",".join(f"{c:.17g}" for c in p)
            fh.write(f"{coords},{lo:.17g},{hi:.17g}\n")
    payload = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "lower": {"mu": params.mu, "lambda": params.lam, "c": params.c,
                  "gamma": params.gamma, "K": params.K},
        "upper": {"case": upper.case, "lambda": upper.lam},
        "samples_csv": "barrier.csv",
    }
    with open(os.path.join(out_dir, "barrier.json"), "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"lower barrier: {params}")
    print(f"upper barrier: {upper}")
    print(f"samples written to {path}")
    return EXIT_OK


def _cmd_characteristic(args):
    problem = load_problem(args.config, h_override=args.h)
    rng = np.random.default_rng(args.seed)
    pts = characteristic_points(problem.domain, problem.family, rng=rng)
    if len(pts) == 0:
        print("no characteristic boundary points detected")
    else:
        for p in pts:
            print(" ".join(f"{c:+.9f}" for c in p))
    return EXIT_OK


def _cmd_info(args):
    problem = load_problem(args.config, h_override=args.h)
    print(problem.summary())

    from .operators import growth_check, lipschitz_root_check
    rng = np.random.default_rng(args.seed)
    samples = problem.domain.sample_interior(200, rng)
    bnd = problem.domain.sample_boundary(100, rng)
    r_level = float(np.max(np.asarray(problem.boundary_g(bnd), dtype=float)))
    growth = growth_check(problem.hamiltonian, r_level, samples,
                          problem.family.m, rng=rng)
    lip = lipschitz_root_check(problem.hamiltonian, max(abs(r_level), 1.0),
                               samples, problem.family.m, rng=rng)
    print(str(growth))
    print(str(lip))
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "suites": _cmd_suites,
    "barriers": _cmd_barriers,
    "characteristic": _cmd_characteristic,
    "info": _cmd_info,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError,) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConstructionError, PerronEmptyError) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CarnotMAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
