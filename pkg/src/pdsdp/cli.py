"""Command-line interface: solve, gen, check and bench subcommands.

Exit codes: 0 success/optimal, 1 usage or parse error, 2 iteration or time
limit, 3 diverged, 4 solution check failed.

The environment variable PDSDP_NUM_THREADS, when set before launch, pins
the thread count of the underlying linear-algebra kernels.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import logging
import os
import sys
from pathlib import Path

logger = logging.getLogger("pdsdp")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LIMIT = 2
EXIT_DIVERGED = 3
EXIT_CHECK_FAILED = 4

_BENCH_COLUMNS = [
    "n",
    "instance",
    "algorithm",
    "status",
    "objective",
    "iterations",
    "final_rank",
    "wall_seconds",
]


def _apply_thread_env() -> None:
    count = os.environ.get("PDSDP_NUM_THREADS")
    if count:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, count)


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdsdp", description=__doc__.splitlines()[0])
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug-level logging"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="warnings only"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a problem file")
    solve.add_argument("input", type=Path)
    solve.add_argument("--algo", choices=["pd", "lr"], default="lr")
    solve.add_argument(
        "--format", choices=["auto", "sdpa", "extended"], default="auto"
    )
    solve.add_argument("-o", "--output", type=Path, default=None,
                       help="solution path (default: input stem + .sol)")
    _add_solver_flags(solve)

    gen = sub.add_parser("gen", help="generate a case-study instance")
    gen.add_argument("family", choices=["equipartition", "sensor", "mimo"])
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", type=Path, default=None,
                     help="output prefix (default: family + parameters)")
    gen.add_argument("--n", type=int, default=10,
                     help="vertices (equipartition) or signal length (mimo)")
    gen.add_argument("--prob", type=float, default=0.5,
                     help="equipartition edge probability")
    gen.add_argument("--sigma", type=float, default=0.0, help="mimo noise level")
    gen.add_argument("--sensors", type=int, default=5)
    gen.add_argument("--anchors", type=int, default=3)
    gen.add_argument("--noise", type=float, default=0.0,
                     help="sensor multiplicative distance noise")
    gen.add_argument("--range", dest="max_range", type=float, default=None,
                     help="sensor distance cutoff (default: all pairs)")

    check = sub.add_parser("check", help="check a solution against a problem")
    check.add_argument("problem", type=Path)
    check.add_argument("solution", type=Path)
    check.add_argument("--format", choices=["auto", "sdpa", "extended"],
                       default="auto")
    check.add_argument("--tol", type=float, default=1e-3)

    bench = sub.add_parser("bench", help="run a benchmark manifest")
    bench.add_argument("manifest", type=Path)
    bench.add_argument("--csv", type=Path, default=None,
                       help="CSV output path (default: manifest stem + .csv)")
    _add_solver_flags(bench)
    return parser


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol", type=float, default=None,
                     help="combined-residual tolerance (default 1e-3)")
    sub.add_argument("--eps-lambda", type=float, default=None,
                     help="rank-certificate tolerance (default 0.05 * n)")
    sub.add_argument("--window", type=int, default=None,
                     help="stall-detection window (default 500)")
    sub.add_argument("--max-iter", type=int, default=None)
    sub.add_argument("--time-limit", type=float, default=None,
                     help="seconds (default 1200)")
    sub.add_argument("--alpha-safety", type=float, default=None)
    sub.add_argument("--initial-rank", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--absolute", action="store_true",
                     help="use absolute instead of relative residual "
                          "termination")
    sub.add_argument("--progress-every", type=int, default=None,
                     help="progress log cadence in iterations (default 100)")


def _make_config(args):
    from .pdhg import SolverConfig

    config = SolverConfig()
    if getattr(args, "tol", None) is not None:
        config.eps_tol = args.tol
    if getattr(args, "eps_lambda", None) is not None:
        config.eps_lambda = args.eps_lambda
    if getattr(args, "window", None) is not None:
        config.window_ell = args.window
    if getattr(args, "max_iter", None) is not None:
        config.max_iter = args.max_iter
    if getattr(args, "time_limit", None) is not None:
        config.time_limit_s = args.time_limit
    if getattr(args, "alpha_safety", None) is not None:
        config.alpha_safety = args.alpha_safety
    if getattr(args, "initial_rank", None) is not None:
        config.initial_rank = args.initial_rank
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "absolute", False):
        config.relative_residuals = False
    if getattr(args, "progress_every", None) is not None:
        config.progress_every = args.progress_every
    return config


def _progress_logger(objective_sign: float):
    def log(info):
        logger.info(
            "iter=%-7d eps_primal=%.3e eps_dual=%.3e eps_comb=%.3e "
            "rank=%-4d objective=%+.8e",
            info.k,
            info.eps_primal,
            info.eps_dual,
            info.eps_comb,
            info.rank,
            objective_sign * info.objective,
        )

    return log


def _solve_one(prob, algo: str, config, callback=None):
    from .lowrank import solve_lr_pd_sdp
    from .pdhg import solve_pd_sdp

    solver = solve_pd_sdp if algo == "pd" else solve_lr_pd_sdp
    return solver(prob, config, callback=callback)


def _status_exit_code(status) -> int:
    from .pdhg import SolveStatus

    return {
        SolveStatus.OPTIMAL: EXIT_OK,
        SolveStatus.MAX_ITERATIONS: EXIT_LIMIT,
        SolveStatus.TIME_LIMIT: EXIT_LIMIT,
        SolveStatus.DIVERGED: EXIT_DIVERGED,
    }[status]


def run_solve(args) -> int:
    from . import io as sdpio
    from .problem import check_solution

    try:
        prob = sdpio.load_problem(args.input, args.format)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = _make_config(args)
        result = _solve_one(
            prob, args.algo, config, _progress_logger(prob.objective_sign)
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = check_solution(prob, result.X, result.y, config.eps_tol)
    out = args.output or args.input.with_suffix(args.input.suffix + ".sol")
    out.write_text(sdpio.write_solution(result, report))
    print(
        f"{prob.name}: status={result.status.value} "
        f"objective={result.reported_objective:.8e} "
        f"iterations={result.iterations} "
        f"wall={result.wall_time_s:.2f}s -> {out}"
    )
    return _status_exit_code(result.status)


def run_gen(args) -> int:
    from . import instances
    from . import io as sdpio

    try:
        if args.family == "equipartition":
            graph = instances.random_graph(args.n, args.prob, args.seed)
            prob = instances.gen_equipartition(graph)
            truth = graph.to_dict()
            default = f"equipartition_n{args.n}_seed{args.seed}"
        elif args.family == "sensor":
            scene = instances.random_sensor_scene(
                args.sensors,
                args.anchors,
                args.seed,
                noise=args.noise,
                max_range=args.max_range,
            )
            prob = instances.gen_sensor_localization(scene)
            truth = scene.to_dict()
            default = f"sensor_s{args.sensors}_a{args.anchors}_seed{args.seed}"
        else:
            inst = instances.random_mimo_instance(args.n, args.sigma, args.seed)
            prob = instances.gen_mimo(inst)
            truth = inst.to_dict()
            default = f"mimo_n{args.n}_seed{args.seed}"
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    prefix = args.output or Path(default)
    problem_path = Path(f"{prefix}.sdp.json")
    truth_path = Path(f"{prefix}.truth.json")
    problem_path.write_text(sdpio.write_extended(prob))
    truth = {"family": args.family, "seed": args.seed, **truth}
    truth_path.write_text(json.dumps(truth, indent=1))
    print(f"wrote {problem_path} and {truth_path}")
    return EXIT_OK


def run_check(args) -> int:
    from . import io as sdpio
    from .problem import check_solution

    try:
        prob = sdpio.load_problem(args.problem, args.format)
        sol = sdpio.read_solution(args.solution.read_text())
        report = check_solution(prob, sol["X"], sol["y"], args.tol)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"problem               {prob.name}")
    print(f"primal objective      {report.primal_objective:+.10e}")
    print(f"dual objective        {report.dual_objective:+.10e}")
    print(f"duality gap           {report.duality_gap:+.3e}")
    print(f"equality violation    {report.equality_violation:.3e}")
    print(f"inequality violation  {report.inequality_violation:.3e}")
    print(f"min eigenvalue        {report.min_eigenvalue:+.3e}")
    ok = (
        report.equality_violation <= args.tol
        and report.inequality_violation <= args.tol
        and report.min_eigenvalue >= -args.tol
    )
    print(f"feasible within {args.tol:.1e}: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_bench(args) -> int:
    from . import io as sdpio

    try:
        manifest = json.loads(args.manifest.read_text())
        instances_list = list(manifest.get("instances", []))
        algorithms = list(manifest.get("algorithms", ["pd", "lr"]))
    except (OSError, ValueError) as exc:
        print(f"error: cannot read manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config_overrides = manifest.get("config", {})
    rows = []
    base = args.manifest.parent
    for inst_path in instances_list:
        path = Path(inst_path)
        if not path.is_absolute():
            path = base / path
        for algo in algorithms:
            row = {c: "" for c in _BENCH_COLUMNS}
            row["instance"] = Path(inst_path).name
            row["algorithm"] = algo
            try:
                prob = sdpio.load_problem(path)
                config = _make_config(args)
                for key, value in config_overrides.items():
                    setattr(config, key, value)
                result = _solve_one(prob, algo, config)
                row["n"] = prob.n
                row["status"] = result.status.value
                row["objective"] = f"{result.reported_objective:.8e}"
                row["iterations"] = result.iterations
                row["final_rank"] = result.rank_path[-1][1]
                row["wall_seconds"] = f"{result.wall_time_s:.3f}"
            except (OSError, ValueError) as exc:
                row["status"] = "error"
                logger.warning("bench row %s/%s failed: %s", inst_path, algo, exc)
            rows.append(row)
    csv_path = args.csv or args.manifest.with_suffix(".csv")
    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_BENCH_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    csv_path.write_text(buf.getvalue())
    _print_table(rows)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _print_table(rows: list[dict]) -> None:
    widths = {
        c: max(len(c), *(len(str(r[c])) for r in rows)) if rows else len(c)
        for c in _BENCH_COLUMNS
    }
    header = "  ".join(c.ljust(widths[c]) for c in _BENCH_COLUMNS)
    print(header)
    print("-" * len(header))
    for row in rows:
        print("  ".join(str(row[c]).ljust(widths[c]) for c in _BENCH_COLUMNS))


def main(argv: list[str] | None = None) -> int:
    _apply_thread_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    handlers = {
        "solve": run_solve,
        "gen": run_gen,
        "check": run_check,
        "bench": run_bench,
    }
    return handlers[args.command](args)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
