"""The compositional solve loop with backtracking.

Path selection feeds routing, routing feeds assignment, assignment feeds
scheduling.  Whenever a stage comes back infeasible the loop backtracks:
assignment or scheduling failures ask the router for a different route set
(previous ones are blocked); a routing failure asks for a new path
combination -- unless no route set was ever produced for the current
combination, in which case the instance is declared infeasible outright,
because any remaining combination only has longer paths.  Iteration caps
and timeouts surface as "unknown", never as a false "unsat".
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

from .assignment import Assignment, assign
from .instance import Instance
from .paths import PathCombination, UsedPaths, enumerate_paths, pathfinder
from .routing import RouteSet, router
from .scheduling import Schedule, expand_routes, scheduler
from .validation import validate


class SolveStatus(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverConfig:
    max_paths: int = 10
    max_route_iters: int = 10
    stage_timeout: float = 60.0
    total_timeout: float = 300.0
    strict_pairwise_edges: bool = False

    def __post_init__(self) -> None:
        if min(self.max_paths, self.max_route_iters) < 1:
            raise ValueError("iteration limits must be positive")
        if min(self.stage_timeout, self.total_timeout) <= 0:
            raise ValueError("timeouts must be positive")


@dataclass
class SolveResult:
    status: SolveStatus
    schedule: Schedule | None = None
    assignment: Assignment | None = None
    routes: RouteSet | None = None
    paths: PathCombination | None = None
    stats: dict = field(default_factory=dict)


def solve(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    """Run the full loop until a validated schedule, infeasibility, or a cap."""
    cfg = cfg or SolverConfig()
    started = time.monotonic()
    deadline = started + cfg.total_timeout
    stats = {
        "pathfinder_calls": 0,
        "router_calls": 0,
        "router_solutions": 0,
        "assign_calls": 0,
        "scheduler_calls": 0,
        "combinations": 0,
        "truncated": False,
        "time_paths": 0.0,
        "time_router": 0.0,
        "time_assign": 0.0,
        "time_scheduler": 0.0,
    }

    def out(status: SolveStatus, **kw) -> SolveResult:
        stats["wall_time"] = time.monotonic() - started
        return SolveResult(status=status, stats=stats, **kw)

    def stage_budget() -> float | None:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return None
        return min(cfg.stage_timeout, remaining)

    t0 = time.monotonic()
    table = enumerate_paths(inst, cfg.max_paths)
    stats["time_paths"] += time.monotonic() - t0
    used = UsedPaths()
    truncated = False

    while True:
        budget = stage_budget()
        if budget is None:
            stats["truncated"] = True
            return out(SolveStatus.UNKNOWN)
        stats["pathfinder_calls"] += 1
        t0 = time.monotonic()
        try:
            combo = pathfinder(table, used, timeout=budget)
        except TimeoutError:
            stats["truncated"] = True
            return out(SolveStatus.UNKNOWN)
        finally:
            stats["time_paths"] += time.monotonic() - t0
        if combo is None:
            # Every path combination has been tried.
            if truncated:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            return out(SolveStatus.UNSAT)
        used.add(combo)
        stats["combinations"] += 1
        previous_routes: list[RouteSet] = []
        iterations = 0

        while True:
            budget = stage_budget()
            if budget is None:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            stats["router_calls"] += 1
            t0 = time.monotonic()
            try:
                routes = router(inst, combo, previous_routes, timeout=budget)
            except TimeoutError:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            finally:
                stats["time_router"] += time.monotonic() - t0
            if routes is None:
                if not previous_routes:
                    # First routing attempt failed: longer paths cannot help,
                    # so the verdict is final unless the search was cut short.
                    if truncated:
                        stats["truncated"] = True
                        return out(SolveStatus.UNKNOWN)
                    return out(SolveStatus.UNSAT)
                break  # try the next path combination
            previous_routes.append(routes)
            iterations += 1
            stats["router_solutions"] += 1

            budget = stage_budget()
            if budget is None:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            stats["assign_calls"] += 1
            t0 = time.monotonic()
            try:
                asg = assign(inst, routes, timeout=budget)
            except TimeoutError:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            finally:
                stats["time_assign"] += time.monotonic() - t0
            if asg is None:
                if iterations >= cfg.max_route_iters:
                    truncated = True
                    break
                continue

            budget = stage_budget()
            if budget is None:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            stats["scheduler_calls"] += 1
            t0 = time.monotonic()
            try:
                traces = expand_routes(routes, combo, asg)
                sched = scheduler(
                    inst, traces, asg,
                    strict_pairwise=cfg.strict_pairwise_edges,
                    timeout=budget,
                )
            except TimeoutError:
                stats["truncated"] = True
                return out(SolveStatus.UNKNOWN)
            finally:
                stats["time_scheduler"] += time.monotonic() - t0
            if sched is None:
                if iterations >= cfg.max_route_iters:
                    truncated = True
                    break
                continue

            report = validate(inst, sched, asg)
            if not report.ok:
                raise RuntimeError(
                    "internal error: emitted schedule failed validation: "
                    + "; ".join(f"{v.kind}{v.entities}" for v in report.violations[:5])
                )
            return out(SolveStatus.SAT, schedule=sched, assignment=asg, routes=routes, paths=combo)
