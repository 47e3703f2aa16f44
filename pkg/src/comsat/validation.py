"""Independent schedule validation by discrete replay.

The validator re-checks a finished schedule against the ground rules only:
task windows, one vehicle per job with job blocks executed back to back,
precedence inside jobs, linear battery discharge with recharge gaps between
routes, depot return, unit occupancy of non-depot nodes, edge capacities,
and no head-on or position-swap events.  It shares no code with the
constraint models, so it serves as the soundness oracle for everything the
solver emits.

Structurally broken inputs (unknown vehicles, mismatched trace shapes)
raise :class:`ValidationInputError`; rule violations are reported, not
raised.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .assignment import Assignment
from .instance import END_JOB, START_JOB, Instance, Job
from .scheduling import Schedule, ScheduledTrace


class ValidationInputError(ValueError):
    """The schedule/assignment do not structurally fit the instance."""


@dataclass(frozen=True)
class Violation:
    kind: str  # window | node-capacity | edge-capacity | swap | charge |
    #            eligibility | continuity | precedence
    time: int | None
    entities: tuple[str, ...]


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def _structure_check(inst: Instance, sched: Schedule, asg: Assignment) -> None:
    n_routes = len(asg.vehicles)
    if not (len(asg.starts) == len(asg.ends) == n_routes):
        raise ValidationInputError("assignment columns have inconsistent lengths")
    for v in asg.vehicles:
        if v not in inst.fleet.vehicles:
            raise ValidationInputError(f"unknown vehicle {v!r} in assignment")
    edge_map = inst.graph.edge_map()
    for st in sched.traces:
        t = st.trace
        if t.route_index >= n_routes:
            raise ValidationInputError(f"trace references unknown route {t.route_index}")
        if t.vehicle not in inst.fleet.vehicles:
            raise ValidationInputError(f"unknown vehicle {t.vehicle!r} in schedule")
        if len(t.edges) != max(0, len(t.nodes) - 1):
            raise ValidationInputError("trace edge list length must be node list length - 1")
        if len(st.node_times) != len(t.nodes) or len(st.edge_times) != len(t.edges):
            raise ValidationInputError("trace timing arrays do not match its shape")
        for n in t.nodes:
            if n not in inst.graph.nodes:
                raise ValidationInputError(f"unknown node {n} in trace")
        for p, e in enumerate(t.edges):
            if (e.source, e.sink) not in edge_map:
                raise ValidationInputError(f"unknown edge ({e.source}, {e.sink}) in trace")
            if e.source != t.nodes[p] or e.sink != t.nodes[p + 1]:
                raise ValidationInputError("trace edges do not connect consecutive nodes")
        for (pos, job, task) in t.serves:
            inst.task(job, task)  # raises KeyError if absent
            if pos >= len(t.nodes):
                raise ValidationInputError("serve mark beyond trace length")


def _node_intervals(st: ScheduledTrace) -> list[tuple[int, int, int]]:
    """(node, arrival, departure) per position; the last position departs never."""
    out = []
    for p, node in enumerate(st.trace.nodes):
        arrive = st.node_times[p]
        depart = st.edge_times[p] if p < len(st.trace.edges) else arrive
        out.append((node, arrive, depart))
    return out


def validate(inst: Instance, sched: Schedule, asg: Assignment) -> ValidationReport:
    """Replay the schedule and report every broken requirement."""
    _structure_check(inst, sched, asg)
    violations: list[Violation] = []
    depot = inst.graph.depot
    horizon = inst.horizon

    # Continuity of each trace: times fit travel, routes anchor at the depot.
    for st in sched.traces:
        t = st.trace
        name = f"route{t.route_index}"
        if t.nodes and (t.nodes[0] != depot or t.nodes[-1] != depot):
            violations.append(Violation("continuity", None, (name, "not depot-anchored")))
        for p, edge in enumerate(t.edges):
            if st.edge_times[p] < st.node_times[p]:
                violations.append(Violation("continuity", st.edge_times[p], (name, f"edge {p} before node")))
            if st.node_times[p + 1] != st.edge_times[p] + edge.length:
                violations.append(Violation("continuity", st.node_times[p + 1], (name, f"arrival {p + 1} off travel time")))
        if st.node_times and (st.node_times[0] < 0 or st.node_times[-1] > horizon):
            violations.append(Violation("window", st.node_times[-1], (name, "outside horizon")))

    # Serve marks: either carried by the traces or inferred from the replay.
    marks, streams = _collect_marks(inst, sched, violations)

    _check_windows_and_sequencing(inst, sched, marks, streams, violations)
    _check_charge(inst, sched, violations)
    _check_eligibility(inst, sched, marks, violations)
    _check_node_occupancy(inst, sched, violations)
    _check_edges(inst, sched, violations)

    return ValidationReport(ok=not violations, violations=violations)


def _collect_marks(inst, sched, violations):
    """Marks (job, task) -> (trace, position, time) plus per-vehicle streams.

    A stream lists the job of every serve in execution order, used for the
    job-block discipline check; it comes straight from the route order so
    that zero-duration ties cannot reshuffle it.
    """
    carried: dict[tuple[str, str], tuple[int, int, int]] = {}
    streams: dict[str, list[str]] = {}
    any_marks = any(st.trace.serves for st in sched.traces)
    if any_marks:
        order = sorted(range(len(sched.traces)), key=lambda ti: (sched.traces[ti].node_times[0], ti))
        for ti in order:
            st = sched.traces[ti]
            for pos, job, task in st.trace.serves:
                if (job, task) in carried:
                    violations.append(Violation("precedence", None, (job, task, "served twice")))
                carried[(job, task)] = (ti, pos, st.node_times[pos])
                streams.setdefault(st.trace.vehicle, []).append(job)
        return carried, streams
    inferred = _infer_marks(inst, sched)
    for (job, _task), (ti, _pos, _t) in inferred.items():
        streams.setdefault(sched.traces[ti].trace.vehicle, []).append(job)
    return inferred, streams


def _infer_marks(inst, sched) -> dict[tuple[str, str], tuple[int, int, int]]:
    """Search a rule-consistent interpretation of which positions serve what.

    Used when a schedule arrives without serve annotations (e.g. re-read
    from JSON).  Greedy earliest matching per candidate task order is
    complete for a fixed order, so the search only branches over job-to-
    vehicle choices and per-vehicle job/task orders.
    """
    from .routing import _precedence_orderings

    jobs = inst.customer_jobs()
    if not jobs:
        return {}
    events_by_vehicle: dict[str, list[tuple[int, int, int, int]]] = {}
    trace_order: dict[str, list[int]] = {}
    for ti, st in enumerate(sched.traces):
        events_by_vehicle.setdefault(st.trace.vehicle, [])
        trace_order.setdefault(st.trace.vehicle, []).append(ti)
    for v, tis in trace_order.items():
        tis.sort(key=lambda ti: sched.traces[ti].node_times[0])
        for ti in tis:
            st = sched.traces[ti]
            for pos, node in enumerate(st.trace.nodes):
                events_by_vehicle[v].append((st.node_times[pos], node, ti, pos))
        events_by_vehicle[v].sort(key=lambda e: e[0])

    best: dict[tuple[str, str], tuple[int, int, int]] = {}

    def match_vehicle(vehicle: str, its_jobs: list[Job]) -> dict | None:
        events = events_by_vehicle.get(vehicle, [])
        for block_order in itertools.permutations(its_jobs):
            orders = [_precedence_orderings(j) or [tuple(t.name for t in j.tasks)] for j in block_order]
            for task_orders in itertools.product(*orders):
                sequence = [
                    (job.name, t) for job, order in zip(block_order, task_orders) for t in order
                ]
                used: dict[tuple[str, str], tuple[int, int, int]] = {}
                cursor = 0
                ok = True
                for job_name, task_name in sequence:
                    task = inst.task(job_name, task_name)
                    found = None
                    for k in range(cursor, len(events)):
                        t, node, ti, pos = events[k]
                        if node == task.location and task.window_lo <= t <= task.window_hi:
                            found = (k, ti, pos, t)
                            break
                    if found is None:
                        ok = False
                        break
                    cursor = found[0]  # co-located next task may reuse this instant
                    used[(job_name, task_name)] = (found[1], found[2], found[3])
                if ok:
                    return used
        return None

    def assign_jobs(idx: int, pools: dict[str, list[Job]]) -> bool:
        if idx == len(jobs):
            for vehicle, pool in pools.items():
                matched = match_vehicle(vehicle, pool)
                if matched is None:
                    return False
                best.update(matched)
            return True
        job = jobs[idx]
        for vehicle in inst.fleet.vehicles:
            if vehicle not in job.eligible:
                continue
            pools.setdefault(vehicle, []).append(job)
            if assign_jobs(idx + 1, pools):
                return True
            pools[vehicle].pop()
        return False

    assign_jobs(0, {})
    return best


def _check_windows_and_sequencing(inst, sched, marks, streams, violations) -> None:
    for job in inst.customer_jobs():
        closure = {t.name: t.predecessors for t in job.tasks}
        vehicles = set()
        for task in job.tasks:
            mark = marks.get((job.name, task.name))
            if mark is None:
                violations.append(Violation("window", None, (job.name, task.name, "never served")))
                continue
            ti, pos, t = mark
            vehicles.add(sched.traces[ti].trace.vehicle)
            if not (task.window_lo <= t <= task.window_hi):
                violations.append(Violation("window", t, (job.name, task.name)))
            for p in closure[task.name]:
                pm = marks.get((job.name, p))
                if pm is not None and pm[2] > t:
                    violations.append(Violation("precedence", t, (job.name, p, task.name)))
        if len(vehicles) > 1:
            violations.append(Violation("precedence", None, (job.name, "split across vehicles")))

    # Job blocks must not interleave on a vehicle.
    for vehicle, stream in streams.items():
        seen_blocks: list[str] = []
        for job in stream:
            if seen_blocks and seen_blocks[-1] == job:
                continue
            if job in seen_blocks:
                violations.append(Violation("precedence", None, (vehicle, job, "job block interleaved")))
            seen_blocks.append(job)


def _check_charge(inst, sched, violations) -> None:
    discharge = inst.fleet.discharge_coeff
    charge = inst.fleet.charge_coeff
    cap = Fraction(inst.fleet.operating_range)
    by_vehicle: dict[str, list[ScheduledTrace]] = {}
    for st in sched.traces:
        by_vehicle.setdefault(st.trace.vehicle, []).append(st)
    for vehicle, sts in by_vehicle.items():
        sts.sort(key=lambda st: st.node_times[0])
        for st in sts:
            length = sum(e.length for e in st.trace.edges)
            if discharge * length > cap:
                violations.append(
                    Violation("charge", st.node_times[0], (vehicle, f"route{st.trace.route_index} exceeds range"))
                )
        for prev, nxt in zip(sts, sts[1:]):
            gap = nxt.node_times[0] - prev.node_times[-1]
            if gap < 0:
                violations.append(Violation("continuity", nxt.node_times[0], (vehicle, "overlapping routes")))
            need = charge * sum(e.length for e in nxt.trace.edges)
            if Fraction(gap) < need:
                violations.append(Violation("charge", nxt.node_times[0], (vehicle, "recharge gap too short")))


def _check_eligibility(inst, sched, marks, violations) -> None:
    for (job_name, _task), (ti, _pos, _t) in marks.items():
        vehicle = sched.traces[ti].trace.vehicle
        if vehicle not in inst.job(job_name).eligible:
            violations.append(Violation("eligibility", None, (vehicle, job_name)))


def _check_node_occupancy(inst, sched, violations) -> None:
    depot = inst.graph.depot
    per_node: dict[int, list[tuple[int, int, int]]] = {}
    for ti, st in enumerate(sched.traces):
        for node, arrive, depart in _node_intervals(st):
            if node == depot:
                continue
            per_node.setdefault(node, []).append((arrive, depart, ti))
    for node, intervals in per_node.items():
        for (a1, d1, t1), (a2, d2, t2) in itertools.combinations(intervals, 2):
            if t1 == t2:
                continue
            lo, hi = max(a1, a2), min(d1, d2)
            if lo < hi:
                violations.append(Violation("node-capacity", lo, (f"node {node}", f"trace{t1}", f"trace{t2}")))
            elif lo == hi:
                # Boundary handoff: one enters the instant the other leaves.
                violations.append(Violation("swap", lo, (f"node {node}", f"trace{t1}", f"trace{t2}")))


def _check_edges(inst, sched, violations) -> None:
    edge_map = inst.graph.edge_map()
    occupancy: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for ti, st in enumerate(sched.traces):
        for p, edge in enumerate(st.trace.edges):
            t0 = st.edge_times[p]
            occupancy.setdefault((edge.source, edge.sink), []).append((t0, t0 + edge.length, ti))
    for (u, v), intervals in occupancy.items():
        cap = edge_map[(u, v)].capacity
        times = sorted({t for t0, t1, _ in intervals for t in (t0, t1)})
        for t in times:
            active = [ti for t0, t1, ti in intervals if t0 <= t < t1]
            if len(active) > cap:
                violations.append(
                    Violation("edge-capacity", t, (f"edge ({u}, {v})",) + tuple(f"trace{t}" for t in active))
                )
                break
        reverse = occupancy.get((v, u))
        if reverse and (u, v) < (v, u):
            # Opposite directions share the physical segment: any overlap
            # exceeds what the segment can carry.
            for (a0, a1, ta), (b0, b1, tb) in itertools.product(intervals, reverse):
                if ta != tb and max(a0, b0) < min(a1, b1):
                    violations.append(
                        Violation("edge-capacity", max(a0, b0), (f"edge ({u}, {v})", f"trace{ta}", f"trace{tb}"))
                    )
