"""Exhaustive discrete-time feasibility oracle for tiny instances.

Vehicles move one distance unit per time step (stay at a node or advance
along an edge), serve a task at the instant they arrive inside its window,
keep one job's tasks together before taking another job, discharge
linearly while driving, recharge at the depot, and must end at the depot
with everything served by the horizon.  The search enumerates all joint
behaviours, so the verdict is ground truth for the ground rules -- at
tiny-instance scale only.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .instance import Instance, transitive_predecessors

MAX_NODES = 6
MAX_VEHICLES = 2
MAX_JOBS = 2
MAX_HORIZON = 15
_STATE_CAP = 10_000_000

# Vehicle state tuple: (node | None, edge | None, steps_left, charge, current_job, arrived)


def brute_oracle(inst: Instance) -> bool:
    """True iff some joint behaviour serves everything within the rules."""
    jobs = inst.customer_jobs()
    if (
        len(inst.graph.nodes) > MAX_NODES
        or len(inst.fleet.vehicles) > MAX_VEHICLES
        or len(jobs) > MAX_JOBS
        or inst.horizon > MAX_HORIZON
    ):
        raise ValueError("instance exceeds the oracle size caps")

    depot = inst.graph.depot
    horizon = inst.horizon
    adj = inst.graph.successors()
    cap = Fraction(inst.fleet.operating_range)
    discharge = inst.fleet.discharge_coeff
    charge_coeff = inst.fleet.charge_coeff
    rate = None if charge_coeff == 0 else discharge / charge_coeff
    n_vehicles = len(inst.fleet.vehicles)

    tasks = [(ji, t) for ji, job in enumerate(jobs) for t in job.tasks]
    task_index = {(jobs[ji].name, t.name): k for k, (ji, t) in enumerate(tasks)}
    pred_masks = []
    for ji, t in tasks:
        closure = transitive_predecessors(jobs[ji])[t.name]
        mask = 0
        for p in closure:
            mask |= 1 << task_index[(jobs[ji].name, p)]
        pred_masks.append(mask)
    job_masks = [0] * len(jobs)
    for k, (ji, _t) in enumerate(tasks):
        job_masks[ji] |= 1 << k
    eligible = [
        frozenset(vi for vi, v in enumerate(inst.fleet.vehicles) if v in job.eligible)
        for job in jobs
    ]
    full_mask = (1 << len(tasks)) - 1
    edge_caps = {(e.source, e.sink): e.capacity for e in inst.graph.edges}

    def serve_branches(vstates, served, owners, t):
        """Closure of zero or more instant serves; returns all outcomes."""
        seen = {(vstates, served, owners)}
        stack = [(vstates, served, owners)]
        while stack:
            vs, sv, ow = stack.pop()
            for vi in range(n_vehicles):
                node, _edge, _left, _charge, current, arrived = vs[vi]
                if node is None or not arrived:
                    continue
                for k, (ji, task) in enumerate(tasks):
                    if sv >> k & 1:
                        continue
                    if task.location != node or not (task.window_lo <= t <= task.window_hi):
                        continue
                    if current not in (-1, ji) or ow[ji] not in (-1, vi):
                        continue
                    if vi not in eligible[ji]:
                        continue
                    if pred_masks[k] & ~sv:
                        continue
                    sv2 = sv | (1 << k)
                    ow2 = tuple(vi if idx == ji else o for idx, o in enumerate(ow))
                    done = (sv2 & job_masks[ji]) == job_masks[ji]
                    v2 = list(vs)
                    v2[vi] = (node, None, 0, _charge, -1 if done else ji, True)
                    state = (tuple(v2), sv2, ow2)
                    if state not in seen:
                        seen.add(state)
                        stack.append(state)
        return seen

    def vehicle_moves(vstate):
        """(next state, edge occupied this step) options for one vehicle."""
        node, edge, left, charge, current, _arrived = vstate
        if node is None:
            nxt_charge = charge - discharge
            if nxt_charge < 0:
                return []
            if left == 1:
                return [((edge[1], None, 0, nxt_charge, current, True), edge)]
            return [((None, edge, left - 1, nxt_charge, current, False), edge)]
        options = []
        stay_charge = charge
        if node == depot:
            stay_charge = cap if rate is None else min(cap, charge + rate)
        options.append(((node, None, 0, stay_charge, current, False), None))
        for e in adj[node]:
            if charge < discharge * e.length:
                continue
            nxt_charge = charge - discharge
            if e.length == 1:
                options.append(((e.sink, None, 0, nxt_charge, current, True), (e.source, e.sink)))
            else:
                options.append(
                    ((None, (e.source, e.sink), e.length - 1, nxt_charge, current, False),
                     (e.source, e.sink))
                )
        return options

    def joint_ok(states, used_edges):
        nodes_seen = set()
        for node, _e, _l, _c, _j, _a in states:
            if node is not None and node != depot:
                if node in nodes_seen:
                    return False
                nodes_seen.add(node)
        counts: dict[tuple[int, int], int] = {}
        for e in used_edges:
            if e is not None:
                counts[e] = counts.get(e, 0) + 1
        for (u, v), n in counts.items():
            if n > edge_caps[(u, v)]:
                return False
            if counts.get((v, u)):
                return False  # head-on transit, including position swaps
        return True

    start = (depot, None, 0, cap, -1, True)
    frontier = {(tuple([start] * n_vehicles), 0, tuple([-1] * len(jobs)))}
    visited = 0
    for t in range(horizon + 1):
        if not frontier:
            return False
        next_frontier = set()
        for vstates, served, owners in frontier:
            for vs2, sv2, ow2 in serve_branches(vstates, served, owners, t):
                if sv2 == full_mask and all(v[0] == depot for v in vs2):
                    return True
                if t == horizon:
                    continue
                # A task whose window closes by t can never be served later.
                if any(
                    not (sv2 >> k & 1) and tasks[k][1].window_hi <= t for k in range(len(tasks))
                ):
                    continue
                for combo in itertools.product(*[vehicle_moves(v) for v in vs2]):
                    states = tuple(c[0] for c in combo)
                    used = tuple(c[1] for c in combo)
                    if not joint_ok(states, used):
                        continue
                    key = (states, sv2, ow2)
                    if key not in next_frontier:
                        next_frontier.add(key)
                        visited += 1
                        if visited > _STATE_CAP:
                            raise RuntimeError("oracle state cap exceeded")
        frontier = next_frontier
    return False
