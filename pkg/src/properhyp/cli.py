"""Command-line front end.

Exit codes: 0 pass, 1 mathematical failure, 2 usage or input error.
Reports are JSON on stdout with floats rounded to 10 significant digits
and sorted keys, so equal inputs and seeds give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .coeff_expr import ExprEvalError
from .hyperpoly import NotHyperbolic, monic_tau_derivative
from .hypotheses import check_hypotheses
from .problemfile import ProblemFileError, load_problem, problem_to_dict
from .solver import (
    CFLViolation,
    NonFinite,
    derived_operator,
    nuij_sweep,
    solve,
    verify_energy_estimate,
)
from .symmetrizer import assemble_block_system, jannelli_q, verify_bounds

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DIGITS = 10


def _clean(obj):
    """Round floats and make the structure JSON-safe (inf/nan become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        v = float(f"{v:.{DIGITS}g}")
        return 0.0 if v == 0 else v
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out=None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_check(args, problem, settings) -> int:
    n_x = args.grid or settings.n_x
    rep = check_hypotheses(problem, n_x=n_x, n_t=settings.n_t)
    _emit(dumps(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_symmetrizer(args, problem, settings) -> int:
    n_x = args.grid or settings.n_x
    xs = np.linspace(*problem.base, n_x)
    bs = assemble_block_system(problem, xgrid=xs)
    report = verify_bounds(bs, xs, n_random_v=settings.n_random, tgrid=np.linspace(0, problem.T, settings.n_t),
                           seed=args.seed, exact=settings.exact)
    samples = []
    for x in np.linspace(*problem.base, min(5, n_x)):
        blocks = []
        for d in range(1, problem.m + 1):
            p = monic_tau_derivative(problem.principal, d, float(x)).point
            Q, psi = jannelli_q(p)
            blocks.append({"d": d, "roots": p.roots, "Q": Q, "psi": psi})
        samples.append({"x": float(x), "blocks": blocks})
    _emit(dumps({"samples": samples, "bounds": report.to_dict()}), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_solve(args, problem, settings) -> int:
    if not args.force:
        rep = check_hypotheses(problem, n_x=args.grid or settings.n_x, n_t=settings.n_t, with_l1=False)
        if not rep.base_passed:
            sys.stderr.write("hypothesis check failed (use --force to solve anyway)\n")
            sys.stderr.write(dumps(rep.to_dict()))
            return EXIT_FAIL
    grid = settings.grid
    trace, _ = solve(problem, grid)
    refined = None
    if not args.no_refine:
        refined, _ = solve(problem, replace(grid, dx=grid.dx / 2, dt=None if grid.dt is None else grid.dt / 2))
    chk = verify_energy_estimate(trace, refined)
    summary = chk.to_dict()
    summary.update(
        drift=trace.drift,
        steps=len(trace.t) - 1,
        dt=trace.dt,
        dx=trace.dx,
        tau_max=trace.tau_max,
        weak_coercivity=trace.gamma,
        energy_final=trace.energy[-1],
    )
    csv_text = trace.to_csv(DIGITS)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        sys.stdout.write(dumps(summary))
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(dumps(summary))
    ok = chk.passed and chk.time_derivative_ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args, problem, settings) -> int:
    if not settings.epsilons:
        sys.stderr.write("error: no [sweep] epsilons in problem file\n")
        return EXIT_USAGE
    rep = nuij_sweep(problem, settings.grid, settings.epsilons, n_check=args.grid or settings.n_x)
    _emit(dumps(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_l1(args, problem, settings) -> int:
    der = derived_operator(problem)
    _emit(dumps(problem_to_dict(der.problem, settings, der.corrections)), args.out)
    return EXIT_OK


COMMANDS = {
    "check": (cmd_check, "check hyperbolicity, root separation and proper lower order terms"),
    "symmetrizer": (cmd_symmetrizer, "dump symmetrizer blocks and bound constants"),
    "solve": (cmd_solve, "integrate and verify the energy estimate; CSV trace"),
    "sweep": (cmd_sweep, "solve along Nuij approximants of the principal part"),
    "l1": (cmd_l1, "emit the problem satisfied by u_x"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="properhyp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="problem file (.toml or .json)")
        p.add_argument("--grid", type=int, default=None, metavar="N", help="number of sampled x points for checks")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for random test vectors (default 0)")
        p.add_argument("--out", default=None, help="output path (CSV for solve, JSON otherwise)")
        if name == "solve":
            p.add_argument("--force", action="store_true", help="solve even if the hypothesis check fails")
            p.add_argument("--no-refine", action="store_true", help="skip the half-mesh run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.grid is not None and args.grid < 2:
        sys.stderr.write("error: --grid needs at least 2 points\n")
        return EXIT_USAGE
    try:
        problem, settings = load_problem(args.file)
    except (ProblemFileError, CFLViolation) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    handler = COMMANDS[args.command][0]
    try:
        return handler(args, problem, settings)
    except CFLViolation as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except NonFinite as exc:
        sys.stderr.write(f"failure: {exc}\n")
        return EXIT_FAIL
    except (NotHyperbolic, ExprEvalError) as exc:
        sys.stderr.write(f"failure: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
