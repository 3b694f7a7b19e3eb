"""Scenario files: strict JSON schema, validation, and solve dispatch.

A scenario document has sections ``meta``, exactly one of ``network`` or
``landscape``, ``params``, and (for the solve commands) ``solve``. Unknown
keys are rejected everywhere, so typos fail before any solve begins.

Network edges are given as ``{"i": target, "j": source, ...}``: the edge
carries spread from node ``j`` to node ``i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .allocate import (
    SolveReport,
    minimize_dominant_eigenvalue,
    minimize_investment,
    minimize_investment_reweighted,
    minimize_max_risk,
    minimize_max_risk_with_count,
)
from .network import EdgeParams, NodeParams, SpreadingNetwork
from .resources import ResourceModel
from .wildfire import (
    CellType,
    CompileConfig,
    Landscape,
    SpreadRateTable,
    Wind,
    compile_landscape,
)


class ScenarioError(ValueError):
    """Scenario document failed validation."""


@dataclass(frozen=True)
class ReweightSettings:
    enabled: bool = False
    max_iters: int = 10
    epsilon: float | None = None
    count_bound: float | None = None


@dataclass(frozen=True)
class SolveSettings:
    problem: int  # 1 = budget-constrained risk min, 2 = risk-constrained spend min
    model: ResourceModel
    objective: str = "risk"  # "risk" | "eigenvalue" (problem 1 only)
    budget: float | None = None
    risk_bound: float | None = None
    reweighted: ReweightSettings = ReweightSettings()


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int | None
    net: SpreadingNetwork
    landscape: Landscape | None
    solve: SolveSettings | None


def _check_keys(
    obj: Any, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()
) -> Mapping[str, Any]:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object, got {type(obj).__name__}")
    for key in required:
        if key not in obj:
            raise ScenarioError(f"{path}: missing required key {key!r}")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{path}: unknown key {key!r}")
    return obj


def _number(obj: Mapping, key: str, path: str, default: float | None = None) -> float:
    if key not in obj:
        if default is None:
            raise ScenarioError(f"{path}: missing required key {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}.{key}: expected a number, got {value!r}")
    return float(value)


def _parse_network(section: Any) -> SpreadingNetwork | tuple:
    sec = _check_keys(section, "network", ("nodes", "edges"))
    if not isinstance(sec["nodes"], list) or not sec["nodes"]:
        raise ScenarioError("network.nodes: expected a non-empty list")
    if not isinstance(sec["edges"], list):
        raise ScenarioError("network.edges: expected a list")
    nodes = []
    for idx, raw in enumerate(sec["nodes"]):
        path = f"network.nodes[{idx}]"
        obj = _check_keys(
            raw, path, ("delta",),
            ("delta_lo", "delta_hi", "weight", "cost", "likelihood"),
        )
        try:
            nodes.append(
                NodeParams(
                    delta=_number(obj, "delta", path),
                    delta_lo=obj.get("delta_lo"),
                    delta_hi=obj.get("delta_hi"),
                    weight=_number(obj, "weight", path, 1.0),
                    cost=_number(obj, "cost", path, 0.0),
                    likelihood=_number(obj, "likelihood", path, 0.0),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    edges = []
    for idx, raw in enumerate(sec["edges"]):
        path = f"network.edges[{idx}]"
        obj = _check_keys(raw, path, ("i", "j", "beta"), ("beta_lo", "beta_hi", "weight"))
        if not isinstance(obj["i"], int) or not isinstance(obj["j"], int):
            raise ScenarioError(f"{path}: endpoints i, j must be integers")
        try:
            edges.append(
                (
                    obj["i"], obj["j"],
                    EdgeParams(
                        beta=_number(obj, "beta", path),
                        beta_lo=obj.get("beta_lo"),
                        beta_hi=obj.get("beta_hi"),
                        weight=_number(obj, "weight", path, 1.0),
                    ),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    return nodes, edges


def _parse_landscape(section: Any) -> Landscape:
    sec = _check_keys(section, "landscape", ("rows", "cols", "cells", "wind", "likelihood"))
    rows, cols = sec["rows"], sec["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise ScenarioError("landscape: rows and cols must be positive integers")
    cells = sec["cells"]
    if not (isinstance(cells, list) and len(cells) == rows
            and all(isinstance(line, str) for line in cells)):
        raise ScenarioError(f"landscape.cells: expected {rows} row strings")
    wind_obj = _check_keys(sec["wind"], "landscape.wind", ("speed", "direction_deg"))
    wind = Wind(
        speed=_number(wind_obj, "speed", "landscape.wind"),
        from_deg=_number(wind_obj, "direction_deg", "landscape.wind"),
    )
    lik = sec["likelihood"]
    if not (isinstance(lik, list) and len(lik) == rows):
        raise ScenarioError(f"landscape.likelihood: expected {rows} rows")
    try:
        return Landscape.from_rows(cells, wind, lik)
    except ValueError as exc:
        raise ScenarioError(f"landscape: {exc}") from None


_NETWORK_ONLY = ("r",)
_LANDSCAPE_KEYS = ("delta", "delta_lo", "delta_hi", "beta_lo", "weights", "costs", "spread")


def _parse_params_landscape(section: Any) -> tuple[CompileConfig, SpreadRateTable]:
    sec = _check_keys(section, "params", ("r", "delta", "beta_lo"), _LANDSCAPE_KEYS[1:])
    costs = _check_keys(
        sec.get("costs", {"city": 1.0, "other": 0.01}), "params.costs", (), ("city", "other")
    )
    config = CompileConfig(
        discount_rate=_number(sec, "r", "params"),
        delta=_number(sec, "delta", "params"),
        delta_lo=sec.get("delta_lo"),
        delta_hi=sec.get("delta_hi"),
        beta_lo=_number(sec, "beta_lo", "params"),
        cost_city=_number(costs, "city", "params.costs", 1.0),
        cost_other=_number(costs, "other", "params.costs", 0.01),
        edge_weight=_number(sec, "weights", "params", 1.0),
        node_weight=_number(sec, "weights", "params", 1.0),
    )
    spread = _check_keys(
        sec.get("spread", {}), "params.spread", (),
        ("beta_base", "vegetation", "wind_c1", "wind_c2", "diagonal_factor"),
    )
    veg_obj = _check_keys(
        spread.get("vegetation", {}), "params.spread.vegetation", (),
        ("desert", "grassland", "forest", "city"),
    )
    vegetation = {
        CellType.DESERT: _number(veg_obj, "desert", "params.spread.vegetation", 0.1),
        CellType.GRASSLAND: _number(veg_obj, "grassland", "params.spread.vegetation", 1.0),
        CellType.FOREST: _number(veg_obj, "forest", "params.spread.vegetation", 1.4),
        CellType.CITY: _number(veg_obj, "city", "params.spread.vegetation", 1.0),
    }
    table = SpreadRateTable(
        beta_base=_number(spread, "beta_base", "params.spread", 0.5),
        vegetation=vegetation,
        wind_c1=_number(spread, "wind_c1", "params.spread", 0.045),
        wind_c2=_number(spread, "wind_c2", "params.spread", 0.131),
        diagonal_factor=_number(spread, "diagonal_factor", "params.spread", 0.785),
    )
    return config, table


def _parse_solve(section: Any) -> SolveSettings:
    sec = _check_keys(
        section, "solve", ("problem", "model"),
        ("budget", "risk_bound", "objective", "reweighted", "tolerances"),
    )
    problem = sec["problem"]
    if problem not in (1, 2):
        raise ScenarioError(f"solve.problem: expected 1 or 2, got {problem!r}")
    try:
        model = ResourceModel(sec["model"])
    except ValueError:
        raise ScenarioError(
            f"solve.model: expected 'log' or 'inverse', got {sec['model']!r}"
        ) from None
    objective = sec.get("objective", "risk")
    if objective not in ("risk", "eigenvalue"):
        raise ScenarioError(f"solve.objective: expected 'risk' or 'eigenvalue', got {objective!r}")
    if objective == "eigenvalue" and problem != 1:
        raise ScenarioError("solve.objective: 'eigenvalue' requires problem 1")
    rw_obj = _check_keys(
        sec.get("reweighted", {}), "solve.reweighted", (),
        ("enabled", "max_iters", "epsilon", "count_bound"),
    )
    reweighted = ReweightSettings(
        enabled=bool(rw_obj.get("enabled", False)),
        max_iters=int(rw_obj.get("max_iters", 10)),
        epsilon=rw_obj.get("epsilon"),
        count_bound=rw_obj.get("count_bound"),
    )
    _check_keys(sec.get("tolerances", {}), "solve.tolerances", (), ("feas",))
    budget = _number(sec, "budget", "solve") if "budget" in sec else None
    risk_bound = _number(sec, "risk_bound", "solve") if "risk_bound" in sec else None
    if problem == 1:
        if budget is None:
            raise ScenarioError("solve: problem 1 requires 'budget'")
        if risk_bound is not None:
            raise ScenarioError("solve: problem 1 does not accept 'risk_bound'")
        if reweighted.enabled and reweighted.count_bound is None:
            raise ScenarioError("solve.reweighted: problem 1 requires 'count_bound'")
    else:
        if risk_bound is None:
            raise ScenarioError("solve: problem 2 requires 'risk_bound'")
        if budget is not None:
            raise ScenarioError("solve: problem 2 does not accept 'budget'")
        if objective == "eigenvalue":
            raise ScenarioError("solve.objective: 'eigenvalue' requires problem 1")
    return SolveSettings(
        problem=problem, model=model, objective=objective,
        budget=budget, risk_bound=risk_bound, reweighted=reweighted,
    )


def scenario_from_dict(doc: Any) -> Scenario:
    top = _check_keys(doc, "scenario", ("meta", "params"), ("network", "landscape", "solve"))
    meta = _check_keys(top["meta"], "meta", ("name",), ("seed",))
    name = meta["name"]
    if not isinstance(name, str) or not name:
        raise ScenarioError("meta.name: expected a non-empty string")
    seed = meta.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ScenarioError("meta.seed: expected an integer")

    has_net = "network" in top
    has_land = "landscape" in top
    if has_net == has_land:
        raise ScenarioError("scenario: exactly one of 'network' or 'landscape' is required")

    if has_land:
        landscape = _parse_landscape(top["landscape"])
        config, table = _parse_params_landscape(top["params"])
        net = compile_landscape(landscape, table, config)
    else:
        params = _check_keys(top["params"], "params", ("r",))
        nodes, edges = _parse_network(top["network"])
        try:
            net = SpreadingNetwork(nodes, edges, discount_rate=_number(params, "r", "params"))
        except ValueError as exc:
            raise ScenarioError(f"network: {exc}") from None
        landscape = None

    solve = _parse_solve(top["solve"]) if "solve" in top else None
    return Scenario(name=name, seed=seed, net=net, landscape=landscape, solve=solve)


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(doc)


def run_scenario(scenario: Scenario, backend=None) -> SolveReport:
    """Dispatch the scenario's solve section to the matching optimizer."""
    if scenario.solve is None:
        raise ScenarioError("scenario has no 'solve' section")
    s = scenario.solve
    net = scenario.net
    if s.objective == "eigenvalue":
        return minimize_dominant_eigenvalue(net, s.budget, backend=backend)
    if s.problem == 1:
        if s.reweighted.enabled:
            return minimize_max_risk_with_count(
                net, s.reweighted.count_bound, s.model,
                max_iters=s.reweighted.max_iters, epsilon=s.reweighted.epsilon,
                backend=backend,
            )
        return minimize_max_risk(net, s.budget, s.model, backend=backend)
    if s.reweighted.enabled:
        return minimize_investment_reweighted(
            net, s.risk_bound, s.model,
            max_iters=s.reweighted.max_iters, epsilon=s.reweighted.epsilon,
            backend=backend,
        )
    return minimize_investment(net, s.risk_bound, s.model, backend=backend)


def landscape_to_json(landscape: Landscape) -> dict:
    """Landscape section for a scenario document (row strings, nested floats)."""
    rows = []
    lik = []
    grid = np.asarray(landscape.likelihood).reshape(landscape.rows, landscape.cols)
    for r in range(landscape.rows):
        rows.append("".join(landscape.cell(r, c).value for c in range(landscape.cols)))
        lik.append([float(x) for x in grid[r]])
    return {
        "rows": landscape.rows,
        "cols": landscape.cols,
        "cells": rows,
        "wind": {"speed": landscape.wind.speed, "direction_deg": landscape.wind.from_deg},
        "likelihood": lik,
    }
