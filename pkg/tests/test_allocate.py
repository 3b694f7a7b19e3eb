import math

import numpy as np
import pytest

import _oracles
from conftest import line3_net, rand_stable_net, two_node_net
from spreadcontrol.allocate import (
    certificate_satisfied,
    minimize_dominant_eigenvalue,
    minimize_investment,
    minimize_investment_reweighted,
    minimize_max_risk,
    minimize_max_risk_with_count,
)
from spreadcontrol.impact import dominant_eigenvalue, impact_direct, outbreak_risk
from spreadcontrol.network import EdgeParams, NodeParams, SpreadingNetwork
from spreadcontrol.resources import ResourceModel, edge_caps


def uncontrolled_max_risk(net):
    return outbreak_risk(net, impact_direct(net.uncontrolled())).max_risk


def full_investment_max_risk(net):
    return outbreak_risk(net, impact_direct(net.fully_invested())).max_risk


def test_zero_budget_matches_uncontrolled_risk():
    net = two_node_net()
    report = minimize_max_risk(net, budget=0.0)
    assert report.optimal
    assert report.total_investment <= 1e-8
    assert report.risk_bound == pytest.approx(uncontrolled_max_risk(net), rel=1e-6)


def test_saturated_budget_beats_full_investment_risk():
    net = line3_net()
    caps = edge_caps(net, ResourceModel.LOG).sum()
    report = minimize_max_risk(net, budget=caps * 2.0)
    assert report.optimal
    assert report.risk_bound <= full_investment_max_risk(net) * (1.0 + 1e-6)


def test_budget_row_tight_when_spending_helps():
    # single controllable edge feeding the only risky node: every unit helps
    net = SpreadingNetwork(
        nodes=[
            NodeParams(delta=0.2, cost=1.0, likelihood=0.0),
            NodeParams(delta=0.2, cost=0.01, likelihood=1.0),
        ],
        edges=[(0, 1, EdgeParams(beta=0.5, beta_lo=0.005, beta_hi=0.5))],
        discount_rate=3.5,
    )
    budget = 0.75
    report = minimize_max_risk(net, budget=budget)
    assert report.optimal
    assert report.total_investment == pytest.approx(budget, abs=1e-6)


def test_problem1_certificate(rng):
    for _ in range(5):
        net = rand_stable_net(rng, 8, controllable=True)
        report = minimize_max_risk(net, budget=1.5)
        assert report.optimal
        assert certificate_satisfied(report)


def test_problem1_inverse_model(rng):
    net = line3_net(np.random.default_rng(5))
    report = minimize_max_risk(net, budget=0.4, model=ResourceModel.INVERSE)
    assert report.optimal
    assert certificate_satisfied(report)
    assert np.all(report.beta >= net.beta_lo - 1e-12)
    assert np.all(report.beta <= net.beta_hi + 1e-12)


def test_problem2_zero_investment_when_bound_loose():
    net = two_node_net()
    gamma = uncontrolled_max_risk(net) * 1.1
    report = minimize_investment(net, risk_bound=gamma)
    assert report.optimal
    assert report.objective <= 1e-6
    assert report.active_edges == 0


def test_problem2_infeasible_reports_floor():
    net = two_node_net()
    floor = full_investment_max_risk(net)
    report = minimize_investment(net, risk_bound=floor * 0.5)
    assert report.status == "infeasible"
    assert report.extras["min_achievable_risk"] == pytest.approx(floor, rel=1e-9)


def test_problem2_certificate_and_bounds(rng):
    for model in (ResourceModel.LOG, ResourceModel.INVERSE):
        net = line3_net(np.random.default_rng(11))
        gamma = math.sqrt(uncontrolled_max_risk(net) * full_investment_max_risk(net))
        report = minimize_investment(net, risk_bound=gamma, model=model)
        assert report.optimal
        assert certificate_satisfied(report)
        assert report.risk.max_risk <= gamma * (1.0 + 1e-6)


def test_problem1_matches_grid_oracle():
    net = line3_net(np.random.default_rng(3))
    budget = 1.0
    report = minimize_max_risk(net, budget=budget)
    oracle = _oracles.grid_min_max_risk(net, budget, points=60)
    assert report.risk_bound == pytest.approx(oracle, rel=0.01)


def test_problem2_matches_grid_oracle():
    net = line3_net(np.random.default_rng(4))
    gamma = math.sqrt(uncontrolled_max_risk(net) * full_investment_max_risk(net))
    report = minimize_investment(net, risk_bound=gamma)
    oracle = _oracles.grid_min_spend(net, gamma, points=60)
    assert report.objective == pytest.approx(oracle, rel=0.01)


def test_precheck_blocks_unstabilizable_systems():
    # rates are fixed at a level no investment can change
    net = SpreadingNetwork(
        [NodeParams(delta=0.2), NodeParams(delta=0.2)],
        [(0, 1, EdgeParams(beta=5.0)), (1, 0, EdgeParams(beta=5.0))],
        discount_rate=3.5,
    )
    for report in (
        minimize_max_risk(net, budget=10.0),
        minimize_investment(net, risk_bound=0.5),
    ):
        assert report.status == "infeasible"
        assert report.raw_status == "precheck_unstable"


def scale_neutrality_net() -> SpreadingNetwork:
    """Two controllable edges feeding one risky source; budget always binds."""
    nodes = [
        NodeParams(delta=0.2, cost=1.0, likelihood=0.0),
        NodeParams(delta=0.2, cost=1.0, likelihood=0.0),
        NodeParams(delta=0.2, cost=0.01, likelihood=1.0),
    ]
    edges = [
        (0, 2, EdgeParams(beta=0.5, beta_lo=0.05, beta_hi=0.5)),
        (1, 2, EdgeParams(beta=0.4, beta_lo=0.04, beta_hi=0.4)),
    ]
    return SpreadingNetwork(nodes, edges, discount_rate=3.5)


def test_objective_scale_neutrality():
    from spreadcontrol.coneprog import ClarabelBackend

    net = scale_neutrality_net()
    budget = 1.0
    backend = ClarabelBackend(tol_feas=1e-12, tol_gap_abs=1e-12, tol_gap_rel=1e-12)
    base = minimize_max_risk(net, budget=budget, backend=backend)
    scaled_nodes = [
        NodeParams(delta=p.delta, delta_lo=p.delta_lo, delta_hi=p.delta_hi,
                   weight=p.weight, cost=p.cost * 1000.0, likelihood=p.likelihood)
        for p in net.nodes
    ]
    scaled = SpreadingNetwork(scaled_nodes, net.edges, net.discount_rate)
    shifted = minimize_max_risk(scaled, budget=budget, backend=backend)
    assert shifted.objective - base.objective == pytest.approx(math.log(1000.0), abs=1e-8)
    for key in base.allocation.u:
        assert shifted.allocation.u[key] == pytest.approx(
            base.allocation.u[key], abs=1e-6
        )


def test_monotone_tradeoffs():
    net = line3_net(np.random.default_rng(13))
    risks = [
        minimize_max_risk(net, budget=b).risk_bound for b in (0.0, 0.4, 0.8, 1.2, 1.6)
    ]
    assert all(risks[i + 1] <= risks[i] * (1.0 + 1e-7) for i in range(len(risks) - 1))
    unc = uncontrolled_max_risk(net)
    floor = full_investment_max_risk(net)
    gammas = np.geomspace(floor * 1.2, unc * 0.95, 4)
    spends = [minimize_investment(net, risk_bound=g).objective for g in gammas]
    assert all(spends[i + 1] <= spends[i] * (1.0 + 1e-7) for i in range(len(spends) - 1))


def test_reweighted_single_edge_fixed_point():
    # one controllable edge and a reducible binding risk: the count stays 1
    net = SpreadingNetwork(
        nodes=[
            NodeParams(delta=0.2, cost=1.0, likelihood=0.0),
            NodeParams(delta=0.2, cost=0.01, likelihood=1.0),
        ],
        edges=[(0, 1, EdgeParams(beta=0.5, beta_lo=0.01, beta_hi=0.5))],
        discount_rate=3.5,
    )
    gamma = uncontrolled_max_risk(net) * 0.7
    report = minimize_investment_reweighted(net, risk_bound=gamma)
    assert report.optimal
    assert report.active_edges == 1
    counts = [t["active_edges"] for t in report.extras["trace"] if "active_edges" in t]
    assert all(c == 1 for c in counts)


def test_reweighted_finds_minimal_support():
    # serial chain: either edge alone can meet the bound, so the minimal
    # support found by exhaustive enumeration has one edge
    nodes = [
        NodeParams(delta=0.3, cost=1.0, likelihood=0.0),
        NodeParams(delta=0.3, cost=0.0, likelihood=0.0),
        NodeParams(delta=0.3, cost=0.0, likelihood=1.0),
    ]
    edges = [
        (0, 1, EdgeParams(beta=0.6, beta_lo=0.15, beta_hi=0.6)),
        (1, 2, EdgeParams(beta=0.6, beta_lo=0.15, beta_hi=0.6)),
    ]
    net = SpreadingNetwork(nodes, edges, discount_rate=2.5)
    gamma = uncontrolled_max_risk(net) * 0.5
    support_size, _ = _oracles.enumerate_min_support(net, gamma)
    assert support_size == 1
    report = minimize_investment_reweighted(net, risk_bound=gamma)
    assert report.optimal
    assert report.active_edges == 1
    assert report.risk.max_risk <= gamma * (1.0 + 1e-6)


def test_reweighted_never_worse_than_plain():
    net = line3_net(np.random.default_rng(21))
    gamma = math.sqrt(uncontrolled_max_risk(net) * full_investment_max_risk(net))
    plain = minimize_investment(net, risk_bound=gamma)
    rw = minimize_investment_reweighted(net, risk_bound=gamma)
    assert rw.active_edges + rw.active_nodes <= plain.active_edges + plain.active_nodes
    assert rw.extras["trace"][0]["active_edges"] == plain.active_edges


def test_count_bounded_zero_forces_no_investment():
    net = two_node_net()
    report = minimize_max_risk_with_count(net, count_bound=0.0)
    assert report.optimal
    assert report.total_investment <= 1e-7
    assert report.risk_bound == pytest.approx(uncontrolled_max_risk(net), rel=1e-5)


def test_count_bounded_large_matches_box_only():
    net = line3_net(np.random.default_rng(2))
    many = minimize_max_risk_with_count(net, count_bound=100.0)
    unlimited = minimize_max_risk(net, budget=1e9)
    assert many.optimal
    assert many.risk_bound == pytest.approx(unlimited.risk_bound, rel=1e-4)


def test_count_bounded_one_matches_enumeration():
    # asymmetric instance: one edge dominates the binding risk, so the best
    # single-edge allocation is unambiguous; enumeration tries each edge at
    # its cap
    nodes = [
        NodeParams(delta=0.2, cost=1.0, likelihood=0.0),
        NodeParams(delta=0.2, cost=0.05, likelihood=0.1),
        NodeParams(delta=0.2, cost=0.05, likelihood=1.0),
    ]
    edges = [
        (0, 2, EdgeParams(beta=0.6, beta_lo=0.06, beta_hi=0.6)),
        (0, 1, EdgeParams(beta=0.2, beta_lo=0.02, beta_hi=0.2)),
        (1, 2, EdgeParams(beta=0.15, beta_lo=0.05, beta_hi=0.15)),
    ]
    net = SpreadingNetwork(nodes, edges, discount_rate=3.0)
    report = minimize_max_risk_with_count(net, count_bound=1.0)
    assert report.optimal
    assert report.active_edges + report.active_nodes <= 1
    best = math.inf
    for k in range(net.n_edges):
        beta = net.beta_hi.copy()
        beta[k] = net.beta_lo[k]
        risk = outbreak_risk(
            net, impact_direct(net.with_rates(beta=beta))
        ).max_risk
        best = min(best, risk)
    assert report.risk_bound <= best * 1.01


def test_min_eigenvalue_zero_budget():
    cycle = SpreadingNetwork(
        [NodeParams(delta=0.2), NodeParams(delta=0.2)],
        [(0, 1, EdgeParams(beta=0.5)), (1, 0, EdgeParams(beta=0.5))],
        discount_rate=1.0,
    )
    report = minimize_dominant_eigenvalue(cycle, budget=0.0)
    assert report.optimal
    assert report.objective == pytest.approx(0.3, abs=1e-4)


def test_min_eigenvalue_matches_uncontrolled(rng):
    net = rand_stable_net(rng, 6, controllable=True)
    report = minimize_dominant_eigenvalue(net, budget=0.0)
    assert report.objective == pytest.approx(
        dominant_eigenvalue(net.uncontrolled()), abs=1e-4
    )


def test_min_eigenvalue_monotone_in_budget():
    net = line3_net(np.random.default_rng(17))
    values = [
        minimize_dominant_eigenvalue(net, budget=b, tol=1e-5).objective
        for b in (0.0, 0.5, 1.5)
    ]
    assert values[1] <= values[0] + 1e-4
    assert values[2] <= values[1] + 1e-4


def test_report_rates_respect_bounds(rng):
    net = rand_stable_net(rng, 10, controllable=True)
    report = minimize_max_risk(net, budget=2.0)
    assert report.optimal
    assert np.all(report.beta >= net.beta_lo - 1e-12)
    assert np.all(report.beta <= net.beta_hi + 1e-12)
    assert np.all(report.delta >= net.delta_lo - 1e-12)
    assert np.all(report.delta <= net.delta_hi + 1e-12)


def test_invalid_arguments():
    net = two_node_net()
    with pytest.raises(ValueError):
        minimize_max_risk(net, budget=-1.0)
    with pytest.raises(ValueError):
        minimize_investment(net, risk_bound=0.0)
    with pytest.raises(ValueError):
        minimize_max_risk_with_count(net, count_bound=-2.0)
    with pytest.raises(ValueError):
        minimize_dominant_eigenvalue(net, budget=-0.5)
    no_likelihood = SpreadingNetwork(
        [NodeParams(delta=0.2, cost=1.0)], [], discount_rate=3.5
    )
    with pytest.raises(ValueError, match="likelihood"):
        minimize_max_risk(no_likelihood, budget=1.0)
