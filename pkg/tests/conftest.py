from __future__ import annotations

import json

import pytest

import comsat
from comsat.instance import Instance, parse_instance


@pytest.fixture(scope="session")
def plant21() -> Instance:
    return comsat.example_instance()


def make_instance(
    *,
    nodes,
    depot,
    segments,
    jobs,
    vehicles=("R1",),
    horizon=30,
    operating_range=100,
    charge_coeff=0,
    discharge_coeff=1,
    directed=False,
) -> Instance:
    """Compact instance builder for fixtures.

    ``segments``: (u, v, len, cap) tuples, undirected unless ``directed``.
    ``jobs``: {name: {"eligible": [...], "tasks": {tname: (loc, lo, hi, [preds])}}}
    """
    doc = {
        "nodes": list(nodes),
        "depot": depot,
        "edges": [
            {"u": u, "v": v, "len": ln, "cap": cap, "directed": directed}
            for (u, v, ln, cap) in segments
        ],
        "horizon": horizon,
        "vehicles": list(vehicles),
        "operating_range": operating_range,
        "charge_coeff": charge_coeff,
        "discharge_coeff": discharge_coeff,
        "jobs": {
            name: {
                "eligible": body.get("eligible", list(vehicles)),
                "tasks": {
                    tname: {
                        "location": spec[0],
                        "window": [spec[1], spec[2]],
                        "precedes": list(spec[3]) if len(spec) > 3 else [],
                    }
                    for tname, spec in body["tasks"].items()
                },
            }
            for name, body in jobs.items()
        },
    }
    return parse_instance(json.dumps(doc))


@pytest.fixture()
def line3() -> Instance:
    """Depot 0 -- 1 -- 2, unit lengths, one two-stop job."""
    return make_instance(
        nodes=[0, 1, 2],
        depot=0,
        segments=[(0, 1, 1, 1), (1, 2, 1, 1)],
        jobs={
            "J": {
                "eligible": ["R1"],
                "tasks": {"1": (1, 0, None), "2": (2, 0, None, ["1"])},
            }
        },
        horizon=20,
    )
