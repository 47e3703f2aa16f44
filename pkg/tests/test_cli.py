from __future__ import annotations

import json

import pytest

from comsat.cli import main


def test_gen_solve_validate_round_trip(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    sched_path = tmp_path / "sched.json"
    asg_path = tmp_path / "asg.json"
    stats_path = tmp_path / "stats.json"

    assert main([
        "gen", "--nodes", "10", "--vehicles", "2", "--jobs", "3",
        "--edge-reduction", "0", "--horizon", "25", "--seed", "4",
        "-o", str(inst_path),
    ]) == 0
    assert inst_path.exists()

    code = main([
        "solve", "--instance", str(inst_path),
        "--max-paths", "10", "--max-route-iters", "10",
        "--timeout", "60", "--stage-timeout", "30",
        "--output", str(sched_path),
        "--assignment-output", str(asg_path),
        "--stats", str(stats_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip().splitlines()[-1] == "sat"
    stats = json.loads(stats_path.read_text())
    assert "router_calls" in stats

    sched = json.loads(sched_path.read_text())
    assert "traces" in sched and "makespan" in sched
    assert main([
        "validate",
        "--instance", str(inst_path),
        "--schedule", str(sched_path),
        "--assignment", str(asg_path),
    ]) == 0


def test_solve_unsat_exit_code(tmp_path):
    doc = {
        "nodes": [0, 1],
        "depot": 0,
        "edges": [{"u": 0, "v": 1, "len": 9, "cap": 1, "directed": False}],
        "horizon": 30,
        "vehicles": ["R1"],
        "operating_range": 100,
        "charge_coeff": 0,
        "discharge_coeff": 1,
        "jobs": {"J": {"eligible": ["R1"], "tasks": {"1": {"location": 1, "window": [0, 5], "precedes": []}}}},
    }
    path = tmp_path / "late.json"
    path.write_text(json.dumps(doc))
    assert main(["solve", "--instance", str(path)]) == 1


def test_error_exit_code_on_bad_instance(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["solve", "--instance", str(path)]) == 3
    assert "error" in capsys.readouterr().err


def test_bench_writes_csv_with_aggregates(tmp_path, capsys):
    grid = {
        "classes": [
            {"nodes": 8, "vehicles": 2, "jobs": 2, "edge_reduction": 0, "horizon": 20, "seeds": [1, 2, 3]}
        ],
        "timeout": 20,
        "stage_timeout": 10,
    }
    grid_path = tmp_path / "grid.json"
    out_path = tmp_path / "results.csv"
    grid_path.write_text(json.dumps(grid))
    assert main(["bench", "--grid", str(grid_path), "--out", str(out_path)]) == 0
    text = out_path.read_text()
    assert "class,nodes,vehicles,jobs" in text
    assert "feasible" in text
    stdout = capsys.readouterr().out
    assert "feasible" in stdout
