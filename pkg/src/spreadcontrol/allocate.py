"""Allocation programs: risk minimization, resource minimization, sparsification.

All programs share one change of variables: node impacts enter as
``y = log p``, so the impact inequality ``p^T A - r p^T <= -c`` becomes, per
node ``j``, a sum of exponentials of affine expressions bounded by one:

    sum_{out-edges (i, j)} exp(y_i - y_j + log beta_ij - log(1 + r))
      + exp(log(1 - delta_j) - log(1 + r))
      + exp(log(c_j) - y_j - log(1 + r))  <=  1

(the spread and recovery rates carry the investment variables of the chosen
resource model inside their logs). Each term becomes one exponential cone
membership, which is what the backends solve.

The dominant-eigenvalue baseline reuses the same row structure: replacing the
denominator ``1 + r`` by ``lambda + 1`` and dropping the cost term turns the
rows into a Collatz-Wielandt certificate ``M z <= (lambda + 1) z`` for the
shifted nonnegative matrix ``M = A + I``, so the smallest achievable bound is
found by bisection over feasibility programs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .coneprog import ConeProgramBuilder, ConeSolution, SolverBackend, default_backend
from .impact import (
    RiskSummary,
    SolverError,
    check_discount_stability,
    dominant_eigenvalue,
    impact_direct,
    outbreak_risk,
)
from .network import SpreadingNetwork
from .resources import (
    ACTIVE_THRESHOLD_REL,
    Allocation,
    ResourceModel,
    count_active,
    edge_caps,
    inverse_beta_investment,
    inverse_delta_investment,
    log_beta_investment,
    log_delta_investment,
    node_caps,
)

# Lower clamp for log-impacts of zero-cost nodes, whose true impact may be 0.
_TINY_LOG = math.log(1e-300)
# Symmetric box for the eigenvector surrogate of the eigenvalue baseline; the
# surrogate is scale-invariant per component, so this only pins the scale.
_EIG_Y_BOX = 40.0

DEFAULT_REWEIGHT_ITERS = 10
# Relative (to per-entry cap) stabilizer added to previous iterates' spend.
DEFAULT_REWEIGHT_EPS_REL = 1e-6


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one allocation solve, with recovered rates and recomputed risk."""

    status: str  # optimal | infeasible
    kind: str
    model: ResourceModel
    objective: float
    risk_bound: float
    y: np.ndarray | None
    allocation: Allocation | None
    beta: np.ndarray | None
    delta: np.ndarray | None
    impact: np.ndarray | None
    risk: RiskSummary | None
    active_edges: int
    active_nodes: int
    total_investment: float
    iterations: int
    wall_time: float
    solver: str
    raw_status: str
    extras: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def certificate_satisfied(report: SolveReport, tol: float = 1e-6) -> bool:
    """Recomputed max risk must not exceed the program's own bound.

    The cone programs constrain an upper bound on the impact vector, so the
    true (recomputed) risk of the recovered rates can only be smaller, up to
    solver tolerance.
    """
    if not report.optimal or report.risk is None:
        return False
    return report.risk.max_risk <= report.risk_bound * (1.0 + tol)


class _LogModelVars:
    """Spend variables u, v enter the rate logs as -u/w; spend is linear.

    ``fixed`` entries (keys as in :func:`_controllable_entries`) are pinned at
    zero investment: no variable is created and the entry behaves like an
    uncontrollable one. The reweighting loop uses this to prune dead support.
    """

    def __init__(
        self, pb: ConeProgramBuilder, net: SpreadingNetwork,
        fixed: frozenset = frozenset(),
    ) -> None:
        self.net = net
        self.e_caps = edge_caps(net, ResourceModel.LOG)
        self.n_caps = node_caps(net, ResourceModel.LOG)
        self.u: dict[int, int] = {}
        self.v: dict[int, int] = {}
        for k in range(net.n_edges):
            if self.e_caps[k] > 0.0 and ("e", k) not in fixed:
                var = pb.new_var()
                pb.add_box(var, 0.0, self.e_caps[k])
                self.u[k] = var
        for i in range(net.n):
            if self.n_caps[i] > 0.0 and ("n", i) not in fixed:
                var = pb.new_var()
                pb.add_box(var, 0.0, self.n_caps[i])
                self.v[i] = var

    def edge_exponent(self, k: int) -> tuple[dict[int, float], float]:
        const = math.log(self.net.beta_hi[k])
        if k in self.u:
            return {self.u[k]: -1.0 / self.net.edge_weight[k]}, const
        return {}, const

    def recovery_exponent(self, j: int) -> tuple[dict[int, float] | None, float]:
        if j in self.v:
            coeffs = {self.v[j]: -1.0 / self.net.node_weight[j]}
            return coeffs, math.log(1.0 - self.net.delta_lo[j])
        return None, math.log(1.0 - self.net.delta[j])

    def entry_exprs(self) -> list[tuple[tuple[str, int], dict[int, float], float, float]]:
        """Per controllable entry: (key, spend coeffs, spend const, cap)."""
        out = []
        for k, var in self.u.items():
            out.append((("e", k), {var: 1.0}, 0.0, float(self.e_caps[k])))
        for i, var in self.v.items():
            out.append((("n", i), {var: 1.0}, 0.0, float(self.n_caps[i])))
        return out

    def recover(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        net = self.net
        beta = np.asarray(net.beta_hi, dtype=float).copy()
        for k, var in self.u.items():
            u = min(max(x[var], 0.0), self.e_caps[k])
            beta[k] = net.beta_hi[k] * math.exp(-u / net.edge_weight[k])
        beta = np.clip(beta, net.beta_lo, net.beta_hi)
        delta = np.asarray(net.delta_lo, dtype=float).copy()
        for i, var in self.v.items():
            v = min(max(x[var], 0.0), self.n_caps[i])
            delta[i] = 1.0 - (1.0 - net.delta_lo[i]) * math.exp(-v / net.node_weight[i])
        delta = np.clip(delta, net.delta_lo, net.delta_hi)
        return beta, delta


class _InverseModelVars:
    """Rates enter as log-variables; spend is affine in epigraphs of 1/rate.

    For each controllable edge, ``b = log beta`` is the shared variable and an
    auxiliary ``q >= exp(-b)`` (one cone) stands in for ``1/beta`` wherever
    spend is needed. Spend pushes ``q`` down onto ``exp(-b)``, so the
    relaxation is tight at any optimum.
    """

    def __init__(
        self, pb: ConeProgramBuilder, net: SpreadingNetwork,
        fixed: frozenset = frozenset(),
    ) -> None:
        self.net = net
        self.e_caps = edge_caps(net, ResourceModel.INVERSE)
        self.n_caps = node_caps(net, ResourceModel.INVERSE)
        self.b: dict[int, int] = {}
        self.q_edge: dict[int, int] = {}
        self.d: dict[int, int] = {}
        self.q_node: dict[int, int] = {}
        for k in range(net.n_edges):
            if self.e_caps[k] > 0.0 and ("e", k) not in fixed:
                b = pb.new_var()
                pb.add_box(b, math.log(net.beta_lo[k]), math.log(net.beta_hi[k]))
                q = pb.add_exp_term({b: -1.0})
                pb.add_box(q, hi=1.0 / net.beta_lo[k])
                self.b[k] = b
                self.q_edge[k] = q
        for i in range(net.n):
            if self.n_caps[i] > 0.0 and ("n", i) not in fixed:
                d = pb.new_var()
                pb.add_box(
                    d, math.log(1.0 - net.delta_hi[i]), math.log(1.0 - net.delta_lo[i])
                )
                q = pb.add_exp_term({d: -1.0})
                pb.add_box(q, hi=1.0 / (1.0 - net.delta_hi[i]))
                self.d[i] = d
                self.q_node[i] = q

    def edge_exponent(self, k: int) -> tuple[dict[int, float], float]:
        if k in self.b:
            return {self.b[k]: 1.0}, 0.0
        return {}, math.log(self.net.beta_hi[k])

    def recovery_exponent(self, j: int) -> tuple[dict[int, float] | None, float]:
        if j in self.d:
            return {self.d[j]: 1.0}, 0.0
        return None, math.log(1.0 - self.net.delta[j])

    def entry_exprs(self) -> list[tuple[tuple[str, int], dict[int, float], float, float]]:
        net = self.net
        out = []
        for k, q in self.q_edge.items():
            span = 1.0 / net.beta_lo[k] - 1.0 / net.beta_hi[k]
            w = net.edge_weight[k]
            out.append(
                (("e", k), {q: w / span}, -w / (net.beta_hi[k] * span), float(self.e_caps[k]))
            )
        for i, q in self.q_node.items():
            span = 1.0 / (1.0 - net.delta_hi[i]) - 1.0 / (1.0 - net.delta_lo[i])
            w = net.node_weight[i]
            out.append(
                (("n", i), {q: w / span}, -w / ((1.0 - net.delta_lo[i]) * span), float(self.n_caps[i]))
            )
        return out

    def recover(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        net = self.net
        beta = np.asarray(net.beta_hi, dtype=float).copy()
        for k, b in self.b.items():
            beta[k] = math.exp(x[b])
        beta = np.clip(beta, net.beta_lo, net.beta_hi)
        delta = np.asarray(net.delta_lo, dtype=float).copy()
        for i, d in self.d.items():
            delta[i] = 1.0 - math.exp(x[d])
        delta = np.clip(delta, net.delta_lo, net.delta_hi)
        return beta, delta


def _make_model_vars(
    pb: ConeProgramBuilder, net: SpreadingNetwork, model: ResourceModel,
    fixed: frozenset = frozenset(),
):
    if model is ResourceModel.LOG:
        return _LogModelVars(pb, net, fixed)
    return _InverseModelVars(pb, net, fixed)


def _investment_expr(model_vars) -> tuple[dict[int, float], float]:
    coeffs: dict[int, float] = {}
    const = 0.0
    for _, c, c0, _ in model_vars.entry_exprs():
        for idx, coef in c.items():
            coeffs[idx] = coeffs.get(idx, 0.0) + coef
        const += c0
    return coeffs, const


def _merge(*parts: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    for part in parts:
        for idx, coef in part.items():
            out[idx] = out.get(idx, 0.0) + coef
    return out


def _emit_node_rows(
    pb: ConeProgramBuilder,
    net: SpreadingNetwork,
    model_vars,
    y: np.ndarray,
    denominator: float,
    include_cost: bool,
) -> None:
    log_denom = math.log(denominator)
    for j in range(net.n):
        exponents: list[tuple[dict[int, float], float]] = []
        const_sum = 0.0
        for k in net.out_edges[j]:
            i = int(net.edge_target[k])
            coeffs, c0 = model_vars.edge_exponent(k)
            exponents.append(
                (_merge({int(y[i]): 1.0, int(y[j]): -1.0}, coeffs), c0 - log_denom)
            )
        rec_coeffs, rec_const = model_vars.recovery_exponent(j)
        if rec_coeffs is None:
            const_sum += math.exp(rec_const - log_denom)
        else:
            exponents.append((rec_coeffs, rec_const - log_denom))
        if include_cost and net.cost[j] > 0.0:
            exponents.append(({int(y[j]): -1.0}, math.log(net.cost[j]) - log_denom))
        if exponents:
            pb.add_sum_exp_le(exponents, 1.0 - const_sum)
        elif const_sum > 1.0:
            pb.add_ineq({}, 1.0 - const_sum)  # trivially infeasible marker row


def _impact_vars(pb: ConeProgramBuilder, net: SpreadingNetwork) -> np.ndarray:
    """Log-impact variables; zero-cost nodes get a tiny floor to stay bounded."""
    y = pb.new_vars(net.n)
    for j in range(net.n):
        if net.cost[j] == 0.0:
            pb.add_box(int(y[j]), lo=_TINY_LOG)
    return y


def _full_investment_unstable(net: SpreadingNetwork) -> SolveReport | None:
    report = check_discount_stability(net.fully_invested())
    if report.stable:
        return None
    return SolveReport(
        status="infeasible", kind="precheck", model=ResourceModel.LOG,
        objective=float("nan"), risk_bound=float("nan"),
        y=None, allocation=None, beta=None, delta=None, impact=None, risk=None,
        active_edges=0, active_nodes=0, total_investment=float("nan"),
        iterations=0, wall_time=0.0, solver="", raw_status="precheck_unstable",
        extras={
            "reason": "even full investment leaves the discounted system unstable",
            "stability_margin_at_full_investment": report.margin,
        },
    )


def _finalize(
    net: SpreadingNetwork,
    model: ResourceModel,
    model_vars,
    y: np.ndarray,
    sol: ConeSolution,
    kind: str,
    risk_bound: float,
    objective: float,
    started: float,
    extras: dict | None = None,
    with_impact: bool = True,
) -> SolveReport:
    beta, delta = model_vars.recover(sol.x)
    u_map: dict[tuple[int, int], float] = {}
    for k, e in enumerate(net.edges):
        if model is ResourceModel.LOG:
            spend = log_beta_investment(e.params, float(beta[k])) if e.params.beta_lo < e.params.beta_hi else 0.0
        else:
            spend = inverse_beta_investment(e.params, float(beta[k])) if e.params.beta_lo < e.params.beta_hi else 0.0
        u_map[(e.target, e.source)] = spend
    v_map: dict[int, float] = {}
    for i, p in enumerate(net.nodes):
        if p.delta_lo < p.delta_hi:
            if model is ResourceModel.LOG:
                v_map[i] = log_delta_investment(p, float(delta[i]))
            else:
                v_map[i] = inverse_delta_investment(p, float(delta[i]))
        else:
            v_map[i] = 0.0
    alloc = Allocation(u=u_map, v=v_map, model=model)
    impact = None
    risk = None
    if with_impact:
        controlled = net.with_rates(beta=beta, delta=delta)
        impact = impact_direct(controlled, verify_stability=False)
        risk = outbreak_risk(net, impact)
    n_edges_active, n_nodes_active = count_active(net, alloc)
    return SolveReport(
        status="optimal", kind=kind, model=model,
        objective=objective, risk_bound=risk_bound,
        y=np.asarray([sol.x[int(v)] for v in y]),
        allocation=alloc, beta=beta, delta=delta, impact=impact, risk=risk,
        active_edges=n_edges_active, active_nodes=n_nodes_active,
        total_investment=alloc.total,
        iterations=sol.iterations, wall_time=time.perf_counter() - started,
        solver=sol.solver, raw_status=sol.raw_status,
        extras=extras or {},
    )


def _infeasible_report(
    net: SpreadingNetwork, model: ResourceModel, kind: str, sol: ConeSolution,
    started: float, extras: dict | None = None,
) -> SolveReport:
    return SolveReport(
        status="infeasible", kind=kind, model=model,
        objective=float("nan"), risk_bound=float("nan"),
        y=None, allocation=None, beta=None, delta=None, impact=None, risk=None,
        active_edges=0, active_nodes=0, total_investment=float("nan"),
        iterations=sol.iterations, wall_time=time.perf_counter() - started,
        solver=sol.solver, raw_status=sol.raw_status, extras=extras or {},
    )


def _risk_objective_rows(
    pb: ConeProgramBuilder, net: SpreadingNetwork, y: np.ndarray
) -> int:
    """Epigraph t over log-risks of nodes with positive outbreak likelihood."""
    t = pb.new_var()
    targets = [i for i in range(net.n) if net.likelihood[i] > 0.0]
    if not targets:
        raise ValueError("max-risk objective needs at least one node with likelihood > 0")
    for i in targets:
        pb.add_ineq({int(y[i]): 1.0, t: -1.0}, -math.log(net.likelihood[i]))
    return t


# Tie-break weights added to the objectives. Without them the optimal faces
# are massive: spend that does not press the worst node is free under the
# max-risk objective, and the impact variables may float anywhere between the
# true impact and the risk level. Both stall interior-point solvers and
# return arbitrary wasteful allocations. The spend term prefers the cheapest
# optimal allocation; the impact term pins y at the log of the true impact.
# Spend outweighs impact tenfold so leftover budget is only used where one
# spend unit buys an outsized total-impact reduction. Reported objectives are
# always computed without the tie-break terms.
SPEND_TIEBREAK = 1e-5
IMPACT_TIEBREAK = 1e-6


def _add_tiebreaks(
    objective: dict[int, float],
    inv_coeffs: dict[int, float],
    y: np.ndarray,
    spend_weight: float = SPEND_TIEBREAK,
) -> dict[int, float]:
    for idx, coef in inv_coeffs.items():
        objective[idx] = objective.get(idx, 0.0) + spend_weight * coef
    for yi in y:
        objective[int(yi)] = objective.get(int(yi), 0.0) + IMPACT_TIEBREAK
    return objective


def minimize_max_risk(
    net: SpreadingNetwork,
    budget: float,
    model: ResourceModel = ResourceModel.LOG,
    backend: SolverBackend | None = None,
    precheck: bool = True,
) -> SolveReport:
    """Spend at most ``budget`` to minimize the worst likelihood-weighted impact.

    The reported objective is the log of the minimized max risk;
    ``risk_bound`` is its exponential.
    """
    if budget < 0.0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    started = time.perf_counter()
    if precheck:
        blocked = _full_investment_unstable(net)
        if blocked is not None:
            return blocked
    backend = backend or default_backend()
    pb = ConeProgramBuilder()
    y = _impact_vars(pb, net)
    model_vars = _make_model_vars(pb, net, model)
    _emit_node_rows(pb, net, model_vars, y, 1.0 + net.discount_rate, include_cost=True)
    t = _risk_objective_rows(pb, net, y)
    inv_coeffs, inv_const = _investment_expr(model_vars)
    pb.add_ineq(inv_coeffs, budget - inv_const)
    pb.minimize(_add_tiebreaks({t: 1.0}, inv_coeffs, y))
    sol = backend.solve(pb.build())
    if sol.status == "infeasible":
        return _infeasible_report(net, model, "min_max_risk", sol, started)
    if not sol.optimal:
        raise SolverError(f"cone solve failed: {sol.raw_status}")
    t_value = float(sol.x[t])
    return _finalize(
        net, model, model_vars, y, sol, "min_max_risk",
        risk_bound=math.exp(t_value), objective=t_value, started=started,
    )


def minimize_investment(
    net: SpreadingNetwork,
    risk_bound: float,
    model: ResourceModel = ResourceModel.LOG,
    backend: SolverBackend | None = None,
    precheck: bool = True,
    _entry_weights: dict[tuple[str, int], float] | None = None,
    _fixed_entries: frozenset = frozenset(),
    _kind: str = "min_investment",
) -> SolveReport:
    """Minimize total spend subject to every node's risk staying under the bound.

    On infeasibility the report carries the smallest achievable risk (at full
    investment) in ``extras``.
    """
    if not risk_bound > 0.0:
        raise ValueError(f"risk bound must be positive, got {risk_bound}")
    started = time.perf_counter()
    if precheck:
        blocked = _full_investment_unstable(net)
        if blocked is not None:
            return blocked
    backend = backend or default_backend()
    pb = ConeProgramBuilder()
    y = _impact_vars(pb, net)
    model_vars = _make_model_vars(pb, net, model, _fixed_entries)
    _emit_node_rows(pb, net, model_vars, y, 1.0 + net.discount_rate, include_cost=True)
    log_gamma = math.log(risk_bound)
    for i in range(net.n):
        if net.likelihood[i] > 0.0:
            pb.add_ineq({int(y[i]): 1.0}, log_gamma - math.log(net.likelihood[i]))
    inv_coeffs, inv_const = _investment_expr(model_vars)
    if _entry_weights is not None:
        base_coeffs: dict[int, float] = {}
        base_const = 0.0
        for key, e_coeffs, e_const, _ in model_vars.entry_exprs():
            w = _entry_weights[key]
            for idx, coef in e_coeffs.items():
                base_coeffs[idx] = base_coeffs.get(idx, 0.0) + w * coef
            base_const += w * e_const
    else:
        base_coeffs, base_const = inv_coeffs, inv_const
    pb.minimize(_add_tiebreaks(dict(base_coeffs), inv_coeffs, y, spend_weight=0.0), base_const)
    sol = backend.solve(pb.build())
    if sol.status == "infeasible":
        extras = {}
        try:
            best = impact_direct(net.fully_invested(), verify_stability=False)
            extras["min_achievable_risk"] = outbreak_risk(net, best).max_risk
        except Exception:  # pragma: no cover - diagnostic only
            pass
        return _infeasible_report(net, model, _kind, sol, started, extras)
    if not sol.optimal:
        raise SolverError(f"cone solve failed: {sol.raw_status}")
    spend_value = float(
        sum(coef * sol.x[idx] for idx, coef in inv_coeffs.items()) + inv_const
    )
    report = _finalize(
        net, model, model_vars, y, sol, _kind,
        risk_bound=risk_bound, objective=spend_value, started=started,
    )
    return report


def _controllable_entries(
    net: SpreadingNetwork, model: ResourceModel
) -> list[tuple[tuple[str, int], float]]:
    """(key, cap) for every entry with a nonzero investment range."""
    e_caps = edge_caps(net, model)
    n_caps = node_caps(net, model)
    out = [(("e", k), float(e_caps[k])) for k in range(net.n_edges) if e_caps[k] > 0.0]
    out += [(("n", i), float(n_caps[i])) for i in range(net.n) if n_caps[i] > 0.0]
    return out


def _epsilons(
    entries: list[tuple[tuple[str, int], float]], epsilon: float | None
) -> dict[tuple[str, int], float]:
    if epsilon is not None:
        if not epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        return {key: epsilon for key, _ in entries}
    return {key: DEFAULT_REWEIGHT_EPS_REL * cap for key, cap in entries}


def _entry_spend(report: SolveReport, key: tuple[str, int], net: SpreadingNetwork) -> float:
    kind, idx = key
    if kind == "e":
        e = net.edges[idx]
        return report.allocation.u[(e.target, e.source)]
    return report.allocation.v[idx]


def _active_support(report: SolveReport, net: SpreadingNetwork) -> frozenset:
    e_caps = edge_caps(net, report.model)
    n_caps = node_caps(net, report.model)
    keys = []
    for k, e in enumerate(net.edges):
        if report.allocation.u[(e.target, e.source)] > 1e-5 * e_caps[k] > 0.0:
            keys.append(("e", k))
    for i in range(net.n):
        if report.allocation.v[i] > 1e-5 * n_caps[i] > 0.0:
            keys.append(("n", i))
    return frozenset(keys)


def _trace_entry(it: int, report: SolveReport) -> dict:
    return {
        "iteration": it,
        "status": report.status,
        "active_edges": report.active_edges,
        "active_nodes": report.active_nodes,
        "total_investment": report.total_investment,
        "max_risk": report.risk.max_risk if report.risk else float("nan"),
    }


def minimize_investment_reweighted(
    net: SpreadingNetwork,
    risk_bound: float,
    model: ResourceModel = ResourceModel.LOG,
    max_iters: int = DEFAULT_REWEIGHT_ITERS,
    epsilon: float | None = None,
    backend: SolverBackend | None = None,
) -> SolveReport:
    """Iteratively reweighted spend minimization for a sparser active set.

    Iteration 0 is the plain minimization; afterwards each entry's spend is
    weighted by the reciprocal of its previous value (plus a stabilizer), a
    standard surrogate for counting nonzero entries. Returns the iterate with
    the fewest active entries that meets the risk bound (ties: smaller spend,
    then earlier); the full per-iteration trace is in ``extras["trace"]``.
    The reported objective is that iterate's plain total spend.
    """
    started = time.perf_counter()
    backend = backend or default_backend()
    base = minimize_investment(net, risk_bound, model, backend=backend)
    if not base.optimal:
        return base
    trace = [_trace_entry(0, base)]
    iterates = [base]
    support = _active_support(base, net)
    prev = base
    entries = _controllable_entries(net, model)
    caps = dict(entries)
    eps = _epsilons(entries, epsilon)
    for it in range(1, max_iters + 1):
        # Entries that fell below the activity threshold are pruned (pinned at
        # zero) rather than carried with enormous weights; the previous
        # iterate proves the risk bound is reachable without them, and the
        # exact reweighting formula applies on the remaining support.
        spends = {key: _entry_spend(prev, key, net) for key, _ in entries}
        fixed = frozenset(
            key for key, _ in entries
            if spends[key] <= ACTIVE_THRESHOLD_REL * caps[key]
        )
        weights = {
            key: 1.0 / (spends[key] + eps[key])
            for key, _ in entries if key not in fixed
        }
        try:
            report = minimize_investment(
                net, risk_bound, model, backend=backend, precheck=False,
                _entry_weights=weights, _fixed_entries=fixed,
                _kind="min_investment_reweighted",
            )
        except SolverError:
            trace.append({"iteration": it, "status": "stalled"})
            break
        if not report.optimal:
            err = SolverError(
                f"reweighted iterate {it} did not solve: {report.raw_status}"
            )
            err.trace = trace  # type: ignore[attr-defined]
            raise err
        trace.append(_trace_entry(it, report))
        iterates.append(report)
        new_support = _active_support(report, net)
        if new_support == support:
            break
        support = new_support
        prev = report

    def sort_key(item):
        idx, rep = item
        return (rep.active_edges + rep.active_nodes, rep.total_investment, idx)

    feasible = [
        (i, rep) for i, rep in enumerate(iterates)
        if rep.risk.max_risk <= risk_bound * (1.0 + 1e-6)
    ] or [(0, iterates[0])]
    chosen_idx, chosen = min(feasible, key=sort_key)
    extras = dict(chosen.extras)
    extras.update({"trace": trace, "selected_iteration": chosen_idx})
    return SolveReport(
        status=chosen.status, kind="min_investment_reweighted", model=model,
        objective=chosen.total_investment, risk_bound=risk_bound,
        y=chosen.y, allocation=chosen.allocation, beta=chosen.beta,
        delta=chosen.delta, impact=chosen.impact, risk=chosen.risk,
        active_edges=chosen.active_edges, active_nodes=chosen.active_nodes,
        total_investment=chosen.total_investment,
        iterations=sum(r.iterations for r in iterates),
        wall_time=time.perf_counter() - started,
        solver=chosen.solver, raw_status=chosen.raw_status, extras=extras,
    )


def minimize_max_risk_with_count(
    net: SpreadingNetwork,
    count_bound: float,
    model: ResourceModel = ResourceModel.LOG,
    max_iters: int = DEFAULT_REWEIGHT_ITERS,
    epsilon: float | None = None,
    backend: SolverBackend | None = None,
) -> SolveReport:
    """Minimize the worst risk using at most ``count_bound`` active entries.

    The count enters through the same reweighted surrogate as
    :func:`minimize_investment_reweighted`, replacing the budget row. The
    first pass normalizes each entry's spend by its cap, so surrogate values
    always lie below the number of entries. Returns the best-risk iterate
    whose true active count meets the bound (falling back to the sparsest
    iterate when none does); trace in ``extras["trace"]``.
    """
    if count_bound < 0.0:
        raise ValueError(f"count bound must be nonnegative, got {count_bound}")
    started = time.perf_counter()
    blocked = _full_investment_unstable(net)
    if blocked is not None:
        return blocked
    backend = backend or default_backend()
    trace: list[dict] = []
    iterates: list[SolveReport] = []
    prev: SolveReport | None = None
    support: frozenset | None = None
    caps = dict(_controllable_entries(net, model))
    eps = _epsilons(list(caps.items()), epsilon)
    for it in range(max_iters + 1):
        pb = ConeProgramBuilder()
        y = _impact_vars(pb, net)
        fixed = frozenset()
        if prev is not None:
            fixed = frozenset(
                key for key in caps
                if _entry_spend(prev, key, net) <= ACTIVE_THRESHOLD_REL * caps[key]
            )
        model_vars = _make_model_vars(pb, net, model, fixed)
        _emit_node_rows(pb, net, model_vars, y, 1.0 + net.discount_rate, include_cost=True)
        t = _risk_objective_rows(pb, net, y)
        coeffs: dict[int, float] = {}
        const = 0.0
        for key, e_coeffs, e_const, _ in model_vars.entry_exprs():
            spend_prev = caps[key] if prev is None else _entry_spend(prev, key, net)
            w = 1.0 / (spend_prev + eps[key])
            for idx, coef in e_coeffs.items():
                coeffs[idx] = coeffs.get(idx, 0.0) + w * coef
            const += w * e_const
        pb.add_ineq(coeffs, count_bound - const)
        inv_coeffs, _ = _investment_expr(model_vars)
        pb.minimize(_add_tiebreaks({t: 1.0}, inv_coeffs, y))
        sol = backend.solve(pb.build())
        if sol.status == "infeasible":
            rep = _infeasible_report(net, model, "min_max_risk_count", sol, started)
            if it == 0:
                return rep  # the count bound itself cannot stabilize the system
            err = SolverError(f"count-bound iterate {it} infeasible: {rep.raw_status}")
            err.trace = trace  # type: ignore[attr-defined]
            raise err
        if not sol.optimal:
            if it > 0:
                trace.append({"iteration": it, "status": "stalled"})
                break
            err = SolverError(f"count-bound iterate {it} failed: {sol.raw_status}")
            err.trace = trace  # type: ignore[attr-defined]
            raise err
        t_value = float(sol.x[t])
        rep = _finalize(
            net, model, model_vars, y, sol, "min_max_risk_count",
            risk_bound=math.exp(t_value), objective=t_value,
            started=started,
        )
        trace.append(_trace_entry(it, rep))
        iterates.append(rep)
        new_support = _active_support(rep, net)
        settled = support is not None and new_support == support
        if settled and rep.active_edges + rep.active_nodes <= count_bound:
            break
        support = new_support
        prev = rep

    within = [
        (i, rep) for i, rep in enumerate(iterates)
        if rep.active_edges + rep.active_nodes <= count_bound
    ]
    if within:
        chosen_idx, chosen = min(within, key=lambda item: (item[1].objective, item[0]))
    else:
        chosen_idx, chosen = min(
            enumerate(iterates),
            key=lambda item: (item[1].active_edges + item[1].active_nodes,
                              item[1].objective, item[0]),
        )
    extras = dict(chosen.extras)
    extras.update({"trace": trace, "selected_iteration": chosen_idx})
    return SolveReport(
        status=chosen.status, kind="min_max_risk_count", model=model,
        objective=chosen.objective, risk_bound=chosen.risk_bound,
        y=chosen.y, allocation=chosen.allocation, beta=chosen.beta,
        delta=chosen.delta, impact=chosen.impact, risk=chosen.risk,
        active_edges=chosen.active_edges, active_nodes=chosen.active_nodes,
        total_investment=chosen.total_investment,
        iterations=sum(r.iterations for r in iterates),
        wall_time=time.perf_counter() - started,
        solver=chosen.solver, raw_status=chosen.raw_status, extras=extras,
    )


def _zero_investment_report(net: SpreadingNetwork, started: float) -> SolveReport:
    beta = np.asarray(net.beta_hi, dtype=float)
    delta = np.asarray(net.delta_lo, dtype=float)
    lam = dominant_eigenvalue(net.uncontrolled())
    return SolveReport(
        status="optimal", kind="min_eigenvalue", model=ResourceModel.LOG,
        objective=lam, risk_bound=float("nan"),
        y=None, allocation=Allocation.zero(net), beta=beta, delta=delta,
        impact=None, risk=None, active_edges=0, active_nodes=0,
        total_investment=0.0, iterations=0,
        wall_time=time.perf_counter() - started, solver="", raw_status="zero_investment",
        extras={},
    )


def minimize_dominant_eigenvalue(
    net: SpreadingNetwork,
    budget: float,
    tol: float = 1e-6,
    max_bisect: int = 60,
    backend: SolverBackend | None = None,
) -> SolveReport:
    """Minimize the dominant eigenvalue of the state matrix within a budget.

    Bisects a target bound ``lambda``; each candidate is checked by a cone
    program that minimizes the spend needed to certify ``M z <= (lambda+1) z``
    for a positive ``z`` (Collatz-Wielandt on the shifted matrix), accepting
    the candidate when that minimal spend fits the budget. Uses the
    logarithmic resource model. ``objective`` is the dominant eigenvalue
    recomputed from the recovered rates.
    """
    if budget < 0.0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    started = time.perf_counter()
    backend = backend or default_backend()
    lo = -1.0
    hi = dominant_eigenvalue(net.uncontrolled())
    best = _zero_investment_report(net, started)
    trace: list[dict] = []

    def feasible_at(lam: float) -> SolveReport | None:
        mu = lam + 1.0
        if mu <= 1e-9:
            return None
        pb = ConeProgramBuilder()
        y = pb.new_vars(net.n)
        for j in range(net.n):
            pb.add_box(int(y[j]), -_EIG_Y_BOX, _EIG_Y_BOX)
        model_vars = _LogModelVars(pb, net)
        _emit_node_rows(pb, net, model_vars, y, mu, include_cost=False)
        inv_coeffs, inv_const = _investment_expr(model_vars)
        pb.minimize(_add_tiebreaks(dict(inv_coeffs), inv_coeffs, y, spend_weight=0.0), inv_const)
        sol = backend.solve(pb.build())
        if sol.status != "optimal":
            return None
        spend_value = float(
            sum(coef * sol.x[idx] for idx, coef in inv_coeffs.items()) + inv_const
        )
        if spend_value > budget * (1.0 + 1e-9) + 1e-9:
            return None
        return _finalize(
            net, ResourceModel.LOG, model_vars, y, sol, "min_eigenvalue",
            risk_bound=float("nan"), objective=lam, started=started,
            with_impact=False,
        )

    iters = 0
    while hi - lo > tol and iters < max_bisect:
        mid = 0.5 * (lo + hi)
        rep = feasible_at(mid)
        trace.append({"lambda": mid, "feasible": rep is not None})
        if rep is not None:
            hi = mid
            best = rep
        else:
            lo = mid
        iters += 1
    if iters >= max_bisect and hi - lo > tol:
        raise SolverError(
            f"eigenvalue bisection did not bracket to tolerance {tol} in "
            f"{max_bisect} iterations (remaining width {hi - lo:.3g})"
        )

    achieved = dominant_eigenvalue(net.with_rates(beta=best.beta, delta=best.delta))
    extras = dict(best.extras)
    extras.update({"lambda_bound": hi, "bisection_iterations": iters, "trace": trace})
    impact = None
    risk = None
    if check_discount_stability(net.with_rates(beta=best.beta, delta=best.delta)).stable:
        impact = impact_direct(
            net.with_rates(beta=best.beta, delta=best.delta), verify_stability=False
        )
        risk = outbreak_risk(net, impact)
    return SolveReport(
        status="optimal", kind="min_eigenvalue", model=ResourceModel.LOG,
        objective=achieved, risk_bound=float("nan"),
        y=best.y, allocation=best.allocation, beta=best.beta, delta=best.delta,
        impact=impact, risk=risk,
        active_edges=best.active_edges, active_nodes=best.active_nodes,
        total_investment=best.total_investment,
        iterations=best.iterations, wall_time=time.perf_counter() - started,
        solver=best.solver or (backend.name if hasattr(backend, "name") else ""),
        raw_status=best.raw_status, extras=extras,
    )
