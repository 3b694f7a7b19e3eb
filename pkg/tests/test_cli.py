import copy
import json

import pytest

from spreadcontrol.cli import main
from spreadcontrol.network import EdgeParams
from spreadcontrol.resources import log_beta_from_investment

TINY_DOC = {
    "meta": {"name": "tiny", "seed": 0},
    "network": {
        "nodes": [
            {"delta": 0.2, "cost": 1.0, "likelihood": 0.5},
            {"delta": 0.2, "cost": 0.0, "likelihood": 1.0},
        ],
        "edges": [{"i": 0, "j": 1, "beta": 0.5, "beta_lo": 0.05, "beta_hi": 0.5}],
    },
    "params": {"r": 3.5},
    "solve": {"problem": 1, "model": "log", "budget": 0.5},
}

PATCH_DOC = {
    "meta": {"name": "patch"},
    "landscape": {
        "rows": 2,
        "cols": 3,
        "cells": ["GGG", "GGC"],
        "wind": {"speed": 4.0, "direction_deg": 45.0},
        "likelihood": [[0.9, 0.2, 0.2], [0.2, 0.2, 0.01]],
    },
    "params": {"r": 3.5, "delta": 0.2, "beta_lo": 1e-3},
    "solve": {"problem": 1, "model": "log", "budget": 2.0},
}


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_impact_csv(tmp_path, capsys):
    path = write(tmp_path, TINY_DOC)
    assert main(["impact", str(path)]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "node,impact,likelihood,risk"
    row0 = lines[1].split(",")
    assert float(row0[1]) == pytest.approx(1.0 / 3.7, rel=1e-9)
    assert float(row0[3]) == pytest.approx(0.5 / 3.7, rel=1e-9)
    row1 = lines[2].split(",")
    assert float(row1[1]) == pytest.approx(0.5 / 3.7**2, rel=1e-9)


def test_impact_reports_instability(tmp_path, capsys):
    doc = copy.deepcopy(TINY_DOC)
    doc["network"]["edges"] = [
        {"i": 0, "j": 1, "beta": 5.0},
        {"i": 1, "j": 0, "beta": 5.0},
    ]
    path = write(tmp_path, doc)
    assert main(["impact", str(path)]) == 1
    err = capsys.readouterr().err
    assert "unstable" in err and "margin" in err


def test_solve_writes_artifacts_and_round_trips(tmp_path, capsys):
    path = write(tmp_path, TINY_DOC)
    out_dir = tmp_path / "out"
    assert main(["solve", str(path), "--out", str(out_dir)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["status"] == "optimal"
    assert report["scenario"] == "tiny"
    edges_csv = (out_dir / "allocation_edges.csv").read_text().splitlines()
    assert edges_csv[0] == "i,j,u,beta_before,beta_after"
    i, j, u, before, after = edges_csv[1].split(",")
    par = EdgeParams(beta=0.5, beta_lo=0.05, beta_hi=0.5)
    assert float(after) == pytest.approx(
        log_beta_from_investment(par, float(u)), rel=1e-9
    )
    assert not (out_dir / "map.svg").exists()  # no landscape geometry


def test_solve_outputs_are_deterministic(tmp_path):
    path = write(tmp_path, PATCH_DOC)
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["solve", str(path), "--out", str(first)]) == 0
    assert main(["solve", str(path), "--out", str(second)]) == 0
    for name in ("allocation_edges.csv", "allocation_nodes.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_solve_landscape_svg(tmp_path):
    path = write(tmp_path, PATCH_DOC)
    out_dir = tmp_path / "out"
    assert main(["solve", str(path), "--out", str(out_dir)]) == 0
    svg = (out_dir / "map.svg").read_text()
    assert svg.startswith("<svg")
    assert "<line" in svg  # at least one active edge drawn
    assert "<rect" in svg


def test_solve_zero_budget_empty_allocation(tmp_path):
    doc = copy.deepcopy(TINY_DOC)
    doc["solve"]["budget"] = 0.0
    path = write(tmp_path, doc)
    out_dir = tmp_path / "out"
    assert main(["solve", str(path), "--out", str(out_dir)]) == 0
    lines = (out_dir / "allocation_edges.csv").read_text().splitlines()
    assert lines == ["i,j,u,beta_before,beta_after"]


def test_solve_infeasible_exit_code(tmp_path, capsys):
    doc = copy.deepcopy(TINY_DOC)
    doc["solve"] = {"problem": 2, "model": "log", "risk_bound": 1e-6}
    path = write(tmp_path, doc)
    assert main(["solve", str(path), "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "infeasible" in err
    assert "achievable" in err


def test_schema_error_exits_before_solve(tmp_path, capsys):
    doc = copy.deepcopy(TINY_DOC)
    doc["solve"]["typo"] = True
    path = write(tmp_path, doc)
    assert main(["solve", str(path), "--out", str(tmp_path / "out")]) == 1
    assert "unknown key 'typo'" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["impact", str(tmp_path / "nope.json")]) == 1


def test_sweep_single_zero_budget_matches_impact(tmp_path, capsys):
    path = write(tmp_path, TINY_DOC)
    assert main(["sweep", str(path), "--param", "budget", "--values", "0"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "value,objective,active_edges,wall_time,status"
    value, objective, actives, _, status = out[1].split(",")
    assert status == "optimal"
    assert float(objective) == pytest.approx(0.5 / 3.7, rel=1e-6)
    assert actives == "0"


def reducible_doc() -> dict:
    # all outbreak likelihood on the upstream node, so investment always helps
    doc = copy.deepcopy(TINY_DOC)
    doc["network"]["nodes"][0]["likelihood"] = 0.0
    doc["network"]["nodes"][1]["likelihood"] = 1.0
    return doc


def test_sweep_monotone_and_marks_infeasible(tmp_path, capsys):
    doc = reducible_doc()
    doc["solve"] = {"problem": 2, "model": "log", "risk_bound": 0.03}
    path = write(tmp_path, doc)
    # middle value is below the achievable floor -> marked, sweep continues
    assert main([
        "sweep", str(path), "--param", "risk_bound", "--values", "0.02,1e-6,0.03",
    ]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.strip().splitlines()[1:]]
    assert rows[1][4] == "infeasible"
    assert rows[1][1] == ""
    spends = [float(rows[0][1]), float(rows[2][1])]
    assert spends[1] <= spends[0] + 1e-9  # larger bound never costs more


def test_sweep_budget_objective_non_increasing(tmp_path, capsys):
    path = write(tmp_path, reducible_doc())
    assert main(["sweep", str(path), "--param", "budget", "--values", "0,0.4,0.9"]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.strip().splitlines()[1:]]
    objectives = [float(r[1]) for r in rows]
    assert objectives[1] < objectives[0]
    assert objectives[2] < objectives[1]


def test_sweep_parameter_must_match_problem(tmp_path, capsys):
    path = write(tmp_path, TINY_DOC)
    assert main(["sweep", str(path), "--param", "risk_bound", "--values", "0.1"]) == 1
    assert main(["sweep", str(path), "--param", "budget", "--values", "abc"]) == 1
