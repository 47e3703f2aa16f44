"""Command line interface: solve, gen, validate, bench.

Exit codes for ``solve``: 0 feasible, 1 infeasible, 2 unknown, 3 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assignment import assignment_from_json
from .bench import bench
from .generate import GenParams, generate
from .instance import InstanceError, parse_instance, serialize_instance
from .pipeline import SolverConfig, SolveStatus, solve
from .scheduling import schedule_from_json
from .validation import ValidationInputError, validate


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comsat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve an instance file")
    p_solve.add_argument("--instance", required=True, type=Path)
    p_solve.add_argument("--max-paths", type=int, default=10)
    p_solve.add_argument("--max-route-iters", type=int, default=10)
    p_solve.add_argument("--timeout", type=float, default=300.0)
    p_solve.add_argument("--stage-timeout", type=float, default=60.0)
    p_solve.add_argument("--strict-pairwise-edges", action="store_true")
    p_solve.add_argument("--output", type=Path, help="write the schedule JSON here")
    p_solve.add_argument("--assignment-output", type=Path, help="write the assignment JSON here")
    p_solve.add_argument("--stats", type=Path, help="write run statistics JSON here")

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--nodes", type=int, required=True)
    p_gen.add_argument("--vehicles", type=int, required=True)
    p_gen.add_argument("--jobs", type=int, required=True)
    p_gen.add_argument("--edge-reduction", type=int, default=0, choices=(0, 25, 50))
    p_gen.add_argument("--horizon", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("-o", "--output", type=Path, required=True)

    p_val = sub.add_parser("validate", help="replay-check a schedule")
    p_val.add_argument("--instance", required=True, type=Path)
    p_val.add_argument("--schedule", required=True, type=Path)
    p_val.add_argument("--assignment", required=True, type=Path)

    p_bench = sub.add_parser("bench", help="run a benchmark grid")
    p_bench.add_argument("--grid", required=True, type=Path)
    p_bench.add_argument("--out", required=True, type=Path)
    return parser


def _cmd_solve(args) -> int:
    inst = parse_instance(args.instance.read_text())
    cfg = SolverConfig(
        max_paths=args.max_paths,
        max_route_iters=args.max_route_iters,
        stage_timeout=args.stage_timeout,
        total_timeout=args.timeout,
        strict_pairwise_edges=args.strict_pairwise_edges,
    )
    result = solve(inst, cfg)
    if args.stats:
        args.stats.write_text(json.dumps(result.stats, indent=2))
    print(result.status.value)
    if result.status == SolveStatus.SAT:
        if args.output:
            args.output.write_text(result.schedule.to_json())
        if args.assignment_output:
            args.assignment_output.write_text(result.assignment.to_json())
        return 0
    return 1 if result.status == SolveStatus.UNSAT else 2


def _cmd_gen(args) -> int:
    params = GenParams(
        nodes=args.nodes,
        vehicles=args.vehicles,
        jobs=args.jobs,
        edge_reduction=args.edge_reduction,
        horizon=args.horizon,
        seed=args.seed,
    )
    inst = generate(params)
    args.output.write_text(serialize_instance(inst))
    print(f"wrote {args.output}")
    return 0


def _cmd_validate(args) -> int:
    inst = parse_instance(args.instance.read_text())
    sched = schedule_from_json(args.schedule.read_text(), inst)
    asg = assignment_from_json(args.assignment.read_text())
    report = validate(inst, sched, asg)
    if report.ok:
        print("ok: no violations")
        return 0
    for v in report.violations:
        at = f" at t={v.time}" if v.time is not None else ""
        print(f"{v.kind}{at}: {', '.join(v.entities)}")
    return 1


def _cmd_bench(args) -> int:
    doc = json.loads(args.grid.read_text())
    grid = []
    for entry in doc["classes"]:
        for seed in entry["seeds"]:
            grid.append(
                GenParams(
                    nodes=entry["nodes"],
                    vehicles=entry["vehicles"],
                    jobs=entry["jobs"],
                    edge_reduction=entry.get("edge_reduction", 0),
                    horizon=entry["horizon"],
                    seed=seed,
                )
            )
    cfg = SolverConfig(
        max_paths=doc.get("max_paths", 10),
        max_route_iters=doc.get("max_route_iters", 10),
        stage_timeout=doc.get("stage_timeout", 60.0),
        total_timeout=doc.get("timeout", 300.0),
    )
    results = bench(grid, cfg)
    args.out.write_text(results.to_csv())
    for row in results.aggregates:
        print(
            f"{row['class']}: feasible {row['feasible']} (avg {row['avg_feasible_time']}s), "
            f"infeasible {row['infeasible']} (avg {row['avg_infeasible_time']}s), "
            f"unknown {row['unknown']}"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return 3
    except (InstanceError, ValidationInputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
