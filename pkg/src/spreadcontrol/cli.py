"""Command line interface: impact reports, allocation solves, parameter sweeps.

Exit codes for ``solve``: 0 optimal, 1 usage/scenario error, 2 infeasible,
3 solver failure. ``impact`` and ``sweep`` use 0/1/3. CSV output uses 12
significant digits so identical scenarios produce byte-identical files
(sweep wall-time columns excepted, by nature).

Set ``SPREADCONTROL_VERBOSE=1`` to enable solver logging.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .allocate import SolveReport
from .coneprog import ClarabelBackend, RetryBackend
from .impact import SolverError, check_discount_stability, impact_direct, outbreak_risk
from .network import SpreadingNetwork
from .resources import ACTIVE_THRESHOLD_REL, edge_caps, node_caps
from .scenario import Scenario, ScenarioError, load_scenario, run_scenario
from .wildfire import CellType, Landscape

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _backend() -> RetryBackend:
    verbose = os.environ.get("SPREADCONTROL_VERBOSE", "") not in ("", "0")
    if not verbose:
        return RetryBackend()
    return RetryBackend(backends=(
        ClarabelBackend(verbose=True),
        ClarabelBackend(max_step_fraction=0.8, max_iter=2000, verbose=True),
        ClarabelBackend(max_step_fraction=0.7, max_iter=5000, verbose=True),
    ))


def cmd_impact(scenario: Scenario, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    net = scenario.net
    stability = check_discount_stability(net)
    if not stability.stable:
        print(
            f"unstable: spectral abscissa {_fmt(stability.spectral_abscissa)} "
            f"exceeds discount rate (margin {_fmt(stability.margin)})",
            file=err,
        )
        return EXIT_USAGE
    p = impact_direct(net, verify_stability=False)
    risk = outbreak_risk(net, p)
    print("node,impact,likelihood,risk", file=out)
    for i in range(net.n):
        print(
            f"{i},{_fmt(p[i])},{_fmt(net.likelihood[i])},{_fmt(risk.values[i])}",
            file=out,
        )
    print(
        f"{scenario.name}: n={net.n} edges={net.n_edges} "
        f"stability_margin={_fmt(stability.margin)} "
        f"max_risk={_fmt(risk.max_risk)} (node {risk.argmax}) "
        f"total_risk={_fmt(risk.total_risk)}",
        file=err,
    )
    return EXIT_OK


def _active_entries(net: SpreadingNetwork, report: SolveReport):
    e_caps = edge_caps(net, report.model)
    n_caps = node_caps(net, report.model)
    edges = []
    for k, e in enumerate(net.edges):
        u = report.allocation.u[(e.target, e.source)]
        if u > ACTIVE_THRESHOLD_REL * e_caps[k]:
            edges.append((e.target, e.source, u, e.params.beta_hi, float(report.beta[k])))
    nodes = []
    for i, par in enumerate(net.nodes):
        v = report.allocation.v[i]
        if v > ACTIVE_THRESHOLD_REL * n_caps[i]:
            nodes.append((i, v, par.delta_lo, float(report.delta[i])))
    return edges, nodes


def _write_allocation_csvs(net: SpreadingNetwork, report: SolveReport, out_dir: Path):
    edges, nodes = _active_entries(net, report)
    with (out_dir / "allocation_edges.csv").open("w", encoding="utf-8", newline="\n") as f:
        f.write("i,j,u,beta_before,beta_after\n")
        for i, j, u, before, after in edges:
            f.write(f"{i},{j},{_fmt(u)},{_fmt(before)},{_fmt(after)}\n")
    with (out_dir / "allocation_nodes.csv").open("w", encoding="utf-8", newline="\n") as f:
        f.write("i,v,delta_before,delta_after\n")
        for i, v, before, after in nodes:
            f.write(f"{i},{_fmt(v)},{_fmt(before)},{_fmt(after)}\n")


_CELL_FILL = {
    CellType.WATER: "#5b9bd5",
    CellType.DESERT: "#e7d8a1",
    CellType.GRASSLAND: "#a9d18e",
    CellType.FOREST: "#2e7d32",
    CellType.CITY: "#8c8c8c",
}


def _edge_color(fraction: float) -> str:
    """Blue (light investment) to red (full reduction)."""
    f = min(max(fraction, 0.0), 1.0)
    return f"#{int(round(255 * f)):02x}20{int(round(255 * (1 - f))):02x}"


def _write_svg_map(
    landscape: Landscape, net: SpreadingNetwork, report: SolveReport, path: Path
) -> None:
    cell = 20
    width, height = landscape.cols * cell, landscape.rows * cell + 40
    e_caps = edge_caps(net, report.model)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- spreadcontrol allocation map -->",
    ]
    for r in range(landscape.rows):
        for c in range(landscape.cols):
            fill = _CELL_FILL[landscape.cell(r, c)]
            lines.append(
                f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#ffffff" stroke-width="0.5"/>'
            )
    for k, e in enumerate(net.edges):
        u = report.allocation.u[(e.target, e.source)]
        if e_caps[k] <= 0.0 or u <= ACTIVE_THRESHOLD_REL * e_caps[k]:
            continue
        sr, sc = divmod(e.source, landscape.cols)
        tr, tc = divmod(e.target, landscape.cols)
        color = _edge_color(u / e_caps[k])
        lines.append(
            f'<line x1="{sc * cell + cell // 2}" y1="{sr * cell + cell // 2}" '
            f'x2="{tc * cell + cell // 2}" y2="{tr * cell + cell // 2}" '
            f'stroke="{color}" stroke-width="2.2" stroke-opacity="0.9"/>'
        )
    legend_y = landscape.rows * cell + 14
    lines.append(
        f'<text x="4" y="{legend_y}" font-size="12" font-family="sans-serif">'
        f"investment on spread rate: blue = light, red = full reduction</text>"
    )
    for idx, frac in enumerate(np.linspace(0.0, 1.0, 24)):
        lines.append(
            f'<rect x="{4 + idx * 10}" y="{legend_y + 8}" width="10" height="10" '
            f'fill="{_edge_color(float(frac))}"/>'
        )
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _report_json(scenario: Scenario, report: SolveReport) -> dict:
    doc = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "kind": report.kind,
        "model": report.model.value,
        "status": report.status,
        "raw_status": report.raw_status,
        "solver": report.solver,
        "objective": report.objective,
        "risk_bound": report.risk_bound,
        "active_edges": report.active_edges,
        "active_nodes": report.active_nodes,
        "total_investment": report.total_investment,
        "iterations": report.iterations,
        "wall_time_s": report.wall_time,
    }
    if report.risk is not None:
        doc["max_risk"] = report.risk.max_risk
        doc["max_risk_node"] = report.risk.argmax
        doc["total_risk"] = report.risk.total_risk
    if "min_achievable_risk" in report.extras:
        doc["min_achievable_risk"] = report.extras["min_achievable_risk"]
    if "selected_iteration" in report.extras:
        doc["selected_iteration"] = report.extras["selected_iteration"]
        doc["trace"] = report.extras["trace"]
    if "lambda_bound" in report.extras:
        doc["lambda_bound"] = report.extras["lambda_bound"]
    return doc


def cmd_solve(scenario: Scenario, out_dir: Path, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    if scenario.solve is None:
        print("scenario has no 'solve' section", file=err)
        return EXIT_USAGE
    try:
        report = run_scenario(scenario, backend=_backend())
    except SolverError as exc:
        print(f"solver failure: {exc}", file=err)
        return EXIT_SOLVER
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(_report_json(scenario, report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if report.status == "infeasible":
        msg = "infeasible"
        if "min_achievable_risk" in report.extras:
            msg += (
                "; smallest achievable max risk is "
                f"{_fmt(report.extras['min_achievable_risk'])}"
            )
        if "reason" in report.extras:
            msg += f" ({report.extras['reason']})"
        print(msg, file=err)
        return EXIT_INFEASIBLE
    _write_allocation_csvs(scenario.net, report, out_dir)
    if scenario.landscape is not None:
        _write_svg_map(scenario.landscape, scenario.net, report, out_dir / "map.svg")
    summary = (
        f"{scenario.name}: {report.kind} [{report.model.value}] {report.status} "
        f"objective={_fmt(report.objective)} active_edges={report.active_edges} "
        f"active_nodes={report.active_nodes} investment={_fmt(report.total_investment)}"
    )
    if report.risk is not None:
        summary += f" max_risk={_fmt(report.risk.max_risk)}"
    print(summary, file=out)
    print(f"artifacts written to {out_dir}", file=err)
    return EXIT_OK


def cmd_sweep(
    scenario: Scenario, param: str, values: list[float], out=None, err=None
) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    if scenario.solve is None:
        print("scenario has no 'solve' section", file=err)
        return EXIT_USAGE
    s = scenario.solve
    if param == "budget" and s.problem != 1:
        print("sweep over 'budget' requires a problem-1 scenario", file=err)
        return EXIT_USAGE
    if param == "risk_bound" and s.problem != 2:
        print("sweep over 'risk_bound' requires a problem-2 scenario", file=err)
        return EXIT_USAGE
    from dataclasses import replace

    print("value,objective,active_edges,wall_time,status", file=out)
    for value in values:
        settings = replace(s, **{param: value})
        swept = Scenario(
            name=scenario.name, seed=scenario.seed, net=scenario.net,
            landscape=scenario.landscape, solve=settings,
        )
        started = time.perf_counter()
        try:
            report = run_scenario(swept, backend=_backend())
        except SolverError as exc:
            print(f"sweep point {value}: solver failure: {exc}", file=err)
            return EXIT_SOLVER
        wall = time.perf_counter() - started
        if report.status != "optimal":
            print(f"{_fmt(value)},,,{_fmt(wall)},infeasible", file=out)
            continue
        objective = report.risk_bound if s.problem == 1 else report.objective
        print(
            f"{_fmt(value)},{_fmt(objective)},{report.active_edges},{_fmt(wall)},optimal",
            file=out,
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spreadcontrol",
        description="Sparse intervention allocation over network spreading processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_impact = sub.add_parser("impact", help="node impact and risk report (CSV to stdout)")
    p_impact.add_argument("scenario", type=Path)

    p_solve = sub.add_parser("solve", help="run the scenario's allocation problem")
    p_solve.add_argument("scenario", type=Path)
    p_solve.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")

    p_sweep = sub.add_parser("sweep", help="re-solve over a list of parameter values")
    p_sweep.add_argument("scenario", type=Path)
    p_sweep.add_argument("--param", choices=("budget", "risk_bound"), required=True)
    p_sweep.add_argument(
        "--values", required=True,
        help="comma-separated list, e.g. 0,5,10,25",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"scenario file not found: {args.scenario}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "impact":
        return cmd_impact(scenario)
    if args.command == "solve":
        return cmd_solve(scenario, args.out)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        print(f"could not parse --values {args.values!r}", file=sys.stderr)
        return EXIT_USAGE
    if not values:
        print("--values is empty", file=sys.stderr)
        return EXIT_USAGE
    return cmd_sweep(scenario, args.param, values)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
