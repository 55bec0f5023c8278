"""Command line interface: ``cpmp-cs solve|bench|oracle|check``.

Exit codes: 0 success, 1 solution failed ``check``, 2 parse error,
3 infeasible instance, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import read_best_known, run_benchmark, write_reports
from .cuckoo import SolverParams
from .errors import CPMPError, InfeasibleInstanceError, ParameterError, ParseError
from .formats import CANONICAL_SUFFIXES, OrlibLayout, load_problems, read_solution
from .instance import Nest, build_distance_matrix, check_feasibility, evaluate_cost, reported_cost
from .oracle import OracleLimits, enumerate_optimal

EXIT_OK, EXIT_CHECK_FAILED, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 1, 2, 3, 4

log = logging.getLogger("cpmp_cs")


def _add_instance_args(p):
    p.add_argument("--format", choices=["auto", "canonical", "orlib"], default="auto",
                   help="instance format (auto: canonical for .cpmp/.inst, orlib otherwise)")
    p.add_argument("--orlib-columns", default="id,x,y,demand",
                   help="column order of ORLibrary node records")


def _add_solver_args(p):
    d = SolverParams()
    p.add_argument("--generations", type=int, default=d.generations)
    p.add_argument("--nests", type=int, default=d.n_nests)
    p.add_argument("--lambda", dest="levy_lambda", type=float, default=d.levy_lambda)
    p.add_argument("--pa", type=float, default=d.pa,
                   help="probability that a nest faces the egg-detection test each generation")
    p.add_argument("--mutation-k", type=int, default=d.mutation_k)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--distance-mode", choices=["float", "floor"], default=d.distance_mode.value)
    p.add_argument("--max-local-iters", type=int, default=d.max_local_iters)
    p.add_argument("--assign-orders", type=int, default=d.n_assign_orders)
    p.add_argument("--no-refine", action="store_true",
                   help="disable shift/swap polishing of assignments in local improvement")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--time-in-summary", action="store_true",
                   help="fill the summary time_s column (breaks byte-identical reruns)")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")


def _params(args) -> SolverParams:
    return SolverParams(
        n_nests=args.nests, generations=args.generations, levy_lambda=args.levy_lambda, pa=args.pa,
        mutation_k=args.mutation_k, seed=args.seed, distance_mode=args.distance_mode,
        max_local_iters=args.max_local_iters, n_assign_orders=args.assign_orders,
        refine_assignment=not args.no_refine,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpmp-cs", description="Cuckoo Search + K-means for the capacitated p-median problem")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance and write reports")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--problem", type=int, default=1, help="1-based problem index in a multi-problem file")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--best-known", type=Path, default=None)
    _add_instance_args(p)
    _add_solver_args(p)

    p = sub.add_parser("bench", help="run every instance of a suite directory")
    p.add_argument("--suite", type=Path, required=True, help="directory of instance files (or a single file)")
    p.add_argument("--best-known", type=Path, default=None, help="CSV instance,best_known (packaged table if omitted)")
    p.add_argument("--seeds", type=int, default=5)
    _add_instance_args(p)
    _add_solver_args(p)

    p = sub.add_parser("oracle", help="exact optimum of a tiny instance by enumeration")
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--problem", type=int, default=1)
    p.add_argument("--distance-mode", choices=["float", "floor"], default="float")
    p.add_argument("--max-n", type=int, default=OracleLimits.max_n)
    p.add_argument("--max-p", type=int, default=OracleLimits.max_p)
    _add_instance_args(p)

    p = sub.add_parser("check", help="re-evaluate and feasibility-check a stored solution")
    p.add_argument("--solution", type=Path, required=True)
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--problem", type=int, default=None,
                   help="problem index; defaults to the one named in the solution file")
    _add_instance_args(p)
    return parser


def _problems(path: Path, args):
    return load_problems(path, args.format, OrlibLayout.from_string(args.orlib_columns))


def _pick(problems, index: int):
    if not 1 <= index <= len(problems):
        raise ParseError(f"problem {index} requested, file holds {len(problems)}")
    return problems[index - 1]


def cmd_solve(args) -> int:
    prob = _pick(_problems(args.instance, args), args.problem)
    table = read_best_known(args.best_known)
    fallback = {prob.instance.name: prob.best_known} if prob.best_known else {}
    reports = run_benchmark([prob.instance], _params(args), table, args.seeds, fallback)
    return _finish(reports, args)


def _suite_files(root: Path) -> list[Path]:
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise FileNotFoundError(f"suite {root} does not exist")
    return sorted(
        p for p in root.iterdir()
        if p.is_file() and (p.suffix.lower() in CANONICAL_SUFFIXES or p.suffix.lower() == ".txt")
    )


def cmd_bench(args) -> int:
    suite, fallback = [], {}
    for path in _suite_files(args.suite):
        for prob in _problems(path, args):
            suite.append(prob.instance)
            if prob.best_known:
                fallback[prob.instance.name] = prob.best_known
    if not suite:
        raise ParseError(f"no instance files found in {args.suite}")
    reports = run_benchmark(suite, _params(args), read_best_known(args.best_known), args.seeds, fallback)
    return _finish(reports, args)


def _finish(reports, args) -> int:
    paths = write_reports(reports, args.out, include_time=args.time_in_summary, figures=not args.no_figures)
    for r in reports:
        if r.error:
            print(f"{r.instance}: FAILED {r.error}")
        else:
            ref = "" if r.best_known is None else f"  best-known {r.best_known}  dev {r.dev_percent:.2f}%"
            print(f"{r.instance}: best {r.best_cost}  mean {r.mean_cost:.2f}  max time {r.wall_time_seconds:.2f}s{ref}")
    print(f"summary: {paths['summary']}")
    return EXIT_SOLVER if any(r.error for r in reports) else EXIT_OK


def cmd_oracle(args) -> int:
    instance = _pick(_problems(args.instance, args), args.problem).instance
    dm = build_distance_matrix(instance, args.distance_mode)
    nest = enumerate_optimal(instance, dm, OracleLimits(max_n=args.max_n, max_p=args.max_p))
    print(json.dumps({"instance": instance.name, "cost": nest.cost, "reported_cost": reported_cost(nest.cost),
                      "medians": list(nest.medians), "assignment": list(nest.assignment)}))
    return EXIT_OK


def cmd_check(args) -> int:
    doc = read_solution(args.solution)
    problems = _problems(args.instance, args)
    if args.problem is not None:
        instance = _pick(problems, args.problem).instance
    else:
        named = [p.instance for p in problems if p.instance.name == doc.get("instance")]
        instance = named[0] if named else problems[0].instance
    dm = build_distance_matrix(instance, doc.get("distance_mode", "float"))
    if len(doc["assignment"]) != instance.n:
        print(f"assignment covers {len(doc['assignment'])} nodes, instance has {instance.n}")
        return EXIT_CHECK_FAILED
    assignment = tuple(int(a) for a in doc["assignment"])
    nest = Nest(tuple(int(m) for m in doc["medians"]), assignment, (), 0.0)
    report = check_feasibility(instance, nest)
    if any(not 0 <= a < instance.n for a in assignment):
        for v in report.violations:
            print(f"{v.constraint.value} [{v.index}]: {v.detail}")
        return EXIT_CHECK_FAILED
    cost = evaluate_cost(dm, assignment)
    ok = report.feasible
    print(f"instance {instance.name}: cost {cost:.6f} (reported {reported_cost(cost)})")
    if "cost" in doc and abs(float(doc["cost"]) - cost) > 1e-6 * max(1.0, abs(cost)):
        print(f"stored cost {doc['cost']} does not match re-evaluated cost {cost}")
        ok = False
    for v in report.violations:
        print(f"{v.constraint.value} [{v.index}]: {v.detail}")
    print("feasible" if report.feasible else "INFEASIBLE")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "oracle": cmd_oracle, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleInstanceError as exc:
        print(f"infeasible instance: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ParameterError, CPMPError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
