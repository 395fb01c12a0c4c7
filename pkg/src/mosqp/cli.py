"""Command-line front end.

``mosqp run`` solves a benchmark and writes its front, ``mosqp metrics``
compares front files, ``mosqp reference`` emits a benchmark's reference
front. Exit codes: 0 success, 2 usage or input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from mosqp import metrics
from mosqp.frontio import FORMATS, FrontParseError, format_csv, read_front, write_front
from mosqp.problems import PROBLEM_NAMES, get_problem, reference_front
from mosqp.qp import QPNumericalError
from mosqp.solver import InitializationError, SolverConfig, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3

# flag dest -> SolverConfig field
_OVERRIDES = {
    "seed": "seed",
    "n_points": "n_points",
    "spreads": "spreads",
    "k": "k_exp",
    "b": "b_shape",
    "sigma": "sigma",
    "growth": "penalty_growth",
    "backtrack": "backtrack",
    "eps0": "eps0",
    "pi0": "pi0",
    "crowding_min": "crowding_min",
    "d_tol": "d_tol",
    "max_iters": "max_iters",
}

# problems with a closed-form front that joins the default metrics reference
_ANALYTIC = ("zdt1", "zdt2")


@dataclass
class RunSpec:
    problem: str
    overrides: dict = field(default_factory=dict)
    out: Path | None = None
    fmt: str | None = None


def _error(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_run(spec: RunSpec) -> int:
    try:
        problem = get_problem(spec.problem)
    except KeyError as exc:
        _error(exc.args[0])
        return EXIT_USAGE
    try:
        cfg = SolverConfig(**spec.overrides)
    except (TypeError, ValueError) as exc:
        _error(f"invalid solver configuration: {exc}")
        return EXIT_USAGE
    try:
        result = solve(problem, cfg)
    except (InitializationError, QPNumericalError) as exc:
        _error(f"solver failed: {exc}")
        return EXIT_SOLVER
    front = result.front
    counters = result.counters.as_dict()
    if spec.out is not None:
        try:
            write_front(front, spec.out, spec.fmt, problem.maximize,
                        dataclasses.asdict(cfg), counters)
        except OSError as exc:
            _error(f"cannot write {spec.out}: {exc.strerror or exc}")
            return EXIT_USAGE
    print(f"problem: {problem.name}")
    print(f"front size: {len(front)}")
    print(f"converged: {result.converged_count}")
    print("evaluations: " + " ".join(f"{k}={v}" for k, v in counters.items()))
    if spec.out is not None:
        print(f"written: {spec.out}")
    return EXIT_OK


def _default_reference(fronts):
    names = {fr.problem_name for fr in fronts}
    pool = list(fronts)
    if len(names) == 1 and (name := names.pop()) in _ANALYTIC:
        pool.append(reference_front(name))
    return metrics.build_reference_front(pool)


def cmd_metrics(front_paths, reference_path=None, match_tol: float = 1e-6) -> int:
    if match_tol < 0:
        _error("--match-tol must be nonnegative")
        return EXIT_USAGE
    try:
        fronts = [read_front(p) for p in front_paths]
        reference = read_front(reference_path) if reference_path is not None else None
    except FrontParseError as exc:
        _error(str(exc))
        return EXIT_USAGE
    for path, fr in zip(front_paths, fronts):
        if len(fr) == 0:
            _error(f"{path}: front has no points")
            return EXIT_USAGE
    if len({fr.m for fr in fronts}) > 1:
        _error("input fronts have different numbers of objectives")
        return EXIT_USAGE
    if reference is None:
        reference = _default_reference(fronts)
    elif len(reference) == 0:
        _error(f"{reference_path}: reference front has no points")
        return EXIT_USAGE
    elif reference.m != fronts[0].m:
        _error("reference and input fronts have different numbers of objectives")
        return EXIT_USAGE

    reports = [metrics.evaluate(fr, reference, match_tol) for fr in fronts]
    width = max(len(str(p)) for p in front_paths)
    print(f"{'front':<{width}}  {'purity':>10}  {'gamma':>10}  {'delta':>10}  {'size':>5}  {'ref':>5}")
    for path, rep in zip(front_paths, reports):
        print(f"{str(path):<{width}}  {rep.purity:>10.4f}  {rep.gamma:>10.4f}  {rep.delta:>10.4f}"
              f"  {rep.front_size:>5d}  {rep.reference_size:>5d}")
    rows = [{"front": str(p), **rep.as_dict()} for p, rep in zip(front_paths, reports)]
    # json has no inf; report it as a string
    for row in rows:
        for key in ("purity", "gamma", "delta"):
            if row[key] != row[key] or abs(row[key]) == float("inf"):
                row[key] = str(row[key])
    print(json.dumps(rows))
    return EXIT_OK


def cmd_reference(problem_name: str, out=None, fmt=None, resolution: int = 200) -> int:
    try:
        problem = get_problem(problem_name)
    except KeyError as exc:
        _error(exc.args[0])
        return EXIT_USAGE
    if resolution < 2:
        _error("--resolution must be at least 2")
        return EXIT_USAGE
    front = reference_front(problem.name, resolution)
    if out is None:
        sys.stdout.write(format_csv(front, problem.maximize))
    else:
        write_front(front, out, fmt, problem.maximize)
        print(f"reference points: {len(front)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mosqp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a benchmark problem")
    run.add_argument("--problem", required=True, help=f"one of {', '.join(PROBLEM_NAMES)}")
    run.add_argument("--seed", type=int)
    run.add_argument("--n-points", type=int, help="start points N")
    run.add_argument("--spreads", type=int, help="spread rounds K")
    run.add_argument("--k", type=float, help="kernel exponent k")
    run.add_argument("--b", type=float, help="kernel shape b")
    run.add_argument("--sigma", type=float, help="Armijo constant")
    run.add_argument("--growth", type=float, help="penalty growth factor M")
    run.add_argument("--backtrack", type=float, help="step and smoothing shrink factor A")
    run.add_argument("--eps0", type=float, help="initial smoothing parameter")
    run.add_argument("--pi0", type=float, help="initial penalty parameter")
    run.add_argument("--crowding-min", type=float, help="crowding distance threshold")
    run.add_argument("--d-tol", type=float, help="stage-2 step tolerance")
    run.add_argument("--max-iters", type=int, help="stage-2 iteration cap per point")
    run.add_argument("--out", type=Path)
    run.add_argument("--format", choices=FORMATS)

    met = sub.add_parser("metrics", help="purity and spread of front files")
    met.add_argument("fronts", nargs="+", type=Path)
    met.add_argument("--reference", type=Path)
    met.add_argument("--match-tol", type=float, default=1e-6)

    ref = sub.add_parser("reference", help="emit a benchmark's reference front")
    ref.add_argument("--problem", required=True)
    ref.add_argument("--resolution", type=int, default=200)
    ref.add_argument("--out", type=Path)
    ref.add_argument("--format", choices=FORMATS)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "run":
        overrides = {
            field_name: getattr(args, dest)
            for dest, field_name in _OVERRIDES.items()
            if getattr(args, dest) is not None
        }
        return cmd_run(RunSpec(args.problem, overrides, args.out, args.format))
    if args.command == "metrics":
        return cmd_metrics(args.fronts, args.reference, args.match_tol)
    return cmd_reference(args.problem, args.out, args.format, args.resolution)


if __name__ == "__main__":
    sys.exit(main())
