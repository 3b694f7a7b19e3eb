#!/usr/bin/env python3
"""Full benchmark experiment on the bundled 1000-node landscape.

Reproduces the comparison pipeline end to end:

  1. budget-constrained risk minimization (log model, budget 25),
  2. risk-constrained spend minimization at the achieved bound, log model,
  3. the same with the inverse (reciprocal-rate) comparison model,
  4. reweighted sparsification of the log solution,
  5. optionally the dominant-eigenvalue baseline (slow; ~25 cone solves).

Prints a comparison table and writes allocation maps per variant.
"""

import argparse
import time
from pathlib import Path

from spreadcontrol.allocate import (
    certificate_satisfied,
    minimize_dominant_eigenvalue,
    minimize_investment,
    minimize_investment_reweighted,
    minimize_max_risk,
)
from spreadcontrol.cli import _write_allocation_csvs, _write_svg_map
from spreadcontrol.impact import check_discount_stability, impact_direct, outbreak_risk
from spreadcontrol.resources import ResourceModel
from spreadcontrol.wildfire import analogue_landscape, analogue_network

BUDGET = 25.0


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out/experiment"))
    parser.add_argument("--eigenvalue", action="store_true",
                        help="also run the dominant-eigenvalue baseline (slow)")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    landscape = analogue_landscape()
    net = analogue_network()
    stability = check_discount_stability(net)
    risk0 = outbreak_risk(net, impact_direct(net, verify_stability=False))
    print(f"landscape: n={net.n} edges={net.n_edges} stability margin={stability.margin:.3f}")
    print(f"uncontrolled max risk: {risk0.max_risk:.5f} (node {risk0.argmax})")

    rows = []

    def record(label, report, seconds):
        ok = certificate_satisfied(report) if report.risk is not None else True
        rows.append((label, report, seconds, ok))
        out_dir = args.out / label
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_allocation_csvs(net, report, out_dir)
        _write_svg_map(landscape, net, report, out_dir / "map.svg")
        risk = report.risk.max_risk if report.risk else float("nan")
        print(f"  {label}: {report.status} active_edges={report.active_edges} "
              f"spend={report.total_investment:.3f} max_risk={risk:.5f} "
              f"({seconds:.1f}s, certificate {'ok' if ok else 'VIOLATED'})")

    print(f"\n[1/4] budget-constrained risk minimization (log model, budget {BUDGET}) ...")
    t0 = time.perf_counter()
    p1 = minimize_max_risk(net, budget=BUDGET)
    record("risk_min_log", p1, time.perf_counter() - t0)
    gamma = p1.risk_bound
    print(f"  achieved risk bound gamma = {gamma:.5f}")

    print(f"\n[2/4] spend minimization at gamma (log model) ...")
    t0 = time.perf_counter()
    p2_log = minimize_investment(net, risk_bound=gamma)
    record("spend_min_log", p2_log, time.perf_counter() - t0)

    print(f"\n[3/4] spend minimization at gamma (inverse comparison model) ...")
    t0 = time.perf_counter()
    p2_inv = minimize_investment(net, risk_bound=gamma, model=ResourceModel.INVERSE)
    record("spend_min_inverse", p2_inv, time.perf_counter() - t0)

    print(f"\n[4/4] reweighted sparsification (log model) ...")
    t0 = time.perf_counter()
    rw = minimize_investment_reweighted(net, risk_bound=gamma)
    record("spend_min_log_reweighted", rw, time.perf_counter() - t0)
    for entry in rw.extras["trace"]:
        print(f"    trace: {entry}")

    if args.eigenvalue:
        print("\n[extra] dominant-eigenvalue baseline (log model, same budget) ...")
        t0 = time.perf_counter()
        eig = minimize_dominant_eigenvalue(net, budget=BUDGET)
        record("eigenvalue_min_log", eig, time.perf_counter() - t0)
        print(f"    achieved dominant eigenvalue: {eig.objective:.5f}")

    print("\nsummary")
    print(f"{'variant':28s} {'status':10s} {'edges':>6s} {'spend':>9s} {'max risk':>9s}")
    for label, report, _, _ in rows:
        risk = report.risk.max_risk if report.risk else float("nan")
        print(f"{label:28s} {report.status:10s} {report.active_edges:6d} "
              f"{report.total_investment:9.3f} {risk:9.5f}")
    log_vs_inverse = p2_log.active_edges / max(1, p2_inv.active_edges)
    rw_vs_plain = rw.active_edges / max(1, p2_log.active_edges)
    print(f"\nactive-edge ratios: log/inverse = {log_vs_inverse:.3f}, "
          f"reweighted/plain = {rw_vs_plain:.3f}")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
