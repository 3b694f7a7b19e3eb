"""Investment models mapping intervention rates to resource spend.

Two families:

* logarithmic — spend is proportional to the log of the rate reduction, so a
  fixed proportional improvement always costs the same; rates can never be
  driven to zero. Spend is zero at the no-investment bound.
* inverse — spend is affine in the reciprocal rate, normalized to [0, 1] over
  the control interval and scaled by the entry weight. Cheap early
  improvements make this the non-sparse comparison model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .network import EdgeParams, NodeParams, SpreadingNetwork


class ResourceModel(str, Enum):
    LOG = "log"
    INVERSE = "inverse"


_REL_SLACK = 1e-9


def _check_range(value: float, lo: float, hi: float, what: str) -> None:
    slack = _REL_SLACK * max(abs(lo), abs(hi), 1.0)
    if not (lo - slack <= value <= hi + slack):
        raise ValueError(f"{what}={value} outside [{lo}, {hi}]")


# Logarithmic model.

def log_beta_investment(par: EdgeParams, beta: float) -> float:
    """Spend needed to pull the spread rate from its upper bound down to beta."""
    _check_range(beta, par.beta_lo, par.beta_hi, "beta")
    return par.weight * math.log(par.beta_hi / beta)


def log_beta_from_investment(par: EdgeParams, u: float) -> float:
    _check_range(u, 0.0, log_beta_cap(par), "u")
    return par.beta_hi * math.exp(-u / par.weight)


def log_beta_cap(par: EdgeParams) -> float:
    return par.weight * math.log(par.beta_hi / par.beta_lo)


def log_delta_investment(par: NodeParams, delta: float) -> float:
    """Spend needed to raise the recovery rate from its lower bound to delta."""
    _check_range(delta, par.delta_lo, par.delta_hi, "delta")
    return par.weight * math.log((1.0 - par.delta_lo) / (1.0 - delta))


def log_delta_from_investment(par: NodeParams, v: float) -> float:
    _check_range(v, 0.0, log_delta_cap(par), "v")
    return 1.0 - (1.0 - par.delta_lo) * math.exp(-v / par.weight)


def log_delta_cap(par: NodeParams) -> float:
    return par.weight * math.log((1.0 - par.delta_lo) / (1.0 - par.delta_hi))


# Inverse (reciprocal-rate) model. Spend normalized to [0, 1] per entry,
# multiplied by the entry weight; degenerate control intervals are rejected.

def _inverse_span(lo_inv: float, hi_inv: float, what: str) -> float:
    span = lo_inv - hi_inv
    if span <= 0.0:
        raise ValueError(f"inverse model needs a nondegenerate {what} interval")
    return span


def inverse_beta_investment(par: EdgeParams, beta: float) -> float:
    _check_range(beta, par.beta_lo, par.beta_hi, "beta")
    span = _inverse_span(1.0 / par.beta_lo, 1.0 / par.beta_hi, "beta")
    return par.weight * (1.0 / beta - 1.0 / par.beta_hi) / span


def inverse_beta_from_investment(par: EdgeParams, u: float) -> float:
    _check_range(u, 0.0, par.weight, "u")
    span = _inverse_span(1.0 / par.beta_lo, 1.0 / par.beta_hi, "beta")
    return 1.0 / (1.0 / par.beta_hi + (u / par.weight) * span)


def inverse_delta_investment(par: NodeParams, delta: float) -> float:
    _check_range(delta, par.delta_lo, par.delta_hi, "delta")
    span = _inverse_span(1.0 / (1.0 - par.delta_hi), 1.0 / (1.0 - par.delta_lo), "delta")
    return par.weight * (1.0 / (1.0 - delta) - 1.0 / (1.0 - par.delta_lo)) / span


def inverse_delta_from_investment(par: NodeParams, v: float) -> float:
    _check_range(v, 0.0, par.weight, "v")
    span = _inverse_span(1.0 / (1.0 - par.delta_hi), 1.0 / (1.0 - par.delta_lo), "delta")
    return 1.0 - 1.0 / (1.0 / (1.0 - par.delta_lo) + (v / par.weight) * span)


# Model dispatch.

def beta_investment(model: ResourceModel, par: EdgeParams, beta: float) -> float:
    fn = log_beta_investment if model is ResourceModel.LOG else inverse_beta_investment
    return fn(par, beta)


def beta_from_investment(model: ResourceModel, par: EdgeParams, u: float) -> float:
    fn = (
        log_beta_from_investment
        if model is ResourceModel.LOG
        else inverse_beta_from_investment
    )
    return fn(par, u)


def delta_investment(model: ResourceModel, par: NodeParams, delta: float) -> float:
    fn = log_delta_investment if model is ResourceModel.LOG else inverse_delta_investment
    return fn(par, delta)


def delta_from_investment(model: ResourceModel, par: NodeParams, v: float) -> float:
    fn = (
        log_delta_from_investment
        if model is ResourceModel.LOG
        else inverse_delta_from_investment
    )
    return fn(par, v)


def edge_caps(net: SpreadingNetwork, model: ResourceModel) -> np.ndarray:
    """Per-edge investment ceiling; zero for fixed (uncontrollable) edges."""
    if model is ResourceModel.LOG:
        return net.edge_weight * np.log(net.beta_hi / net.beta_lo)
    return np.where(net.beta_lo < net.beta_hi, net.edge_weight, 0.0)


def node_caps(net: SpreadingNetwork, model: ResourceModel) -> np.ndarray:
    """Per-node investment ceiling; zero for fixed recovery rates."""
    if model is ResourceModel.LOG:
        return net.node_weight * np.log((1.0 - net.delta_lo) / (1.0 - net.delta_hi))
    return np.where(net.delta_lo < net.delta_hi, net.node_weight, 0.0)


@dataclass(frozen=True)
class Allocation:
    """Investments keyed by edge pair (target, source) and by node index."""

    u: dict[tuple[int, int], float]
    v: dict[int, float]
    model: ResourceModel = ResourceModel.LOG

    @property
    def total(self) -> float:
        return float(sum(self.u.values()) + sum(self.v.values()))

    @staticmethod
    def zero(net: SpreadingNetwork, model: ResourceModel = ResourceModel.LOG) -> "Allocation":
        return Allocation(
            u={(e.target, e.source): 0.0 for e in net.edges},
            v={i: 0.0 for i in range(net.n)},
            model=model,
        )


# Fraction of the per-entry cap below which an investment counts as inactive.
ACTIVE_THRESHOLD_REL = 1e-5


def count_active(
    net: SpreadingNetwork, alloc: Allocation, tau: float | None = None
) -> tuple[int, int]:
    """Number of edges and nodes whose investment exceeds the threshold.

    With ``tau=None`` each entry uses a scale-relative threshold of
    ``ACTIVE_THRESHOLD_REL`` times its own cap, which is robust to solver
    slack; a float applies one absolute threshold everywhere.
    """
    if tau is not None and tau < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    e_caps = edge_caps(net, alloc.model)
    n_caps = node_caps(net, alloc.model)
    edge_count = 0
    for k, e in enumerate(net.edges):
        thr = tau if tau is not None else ACTIVE_THRESHOLD_REL * e_caps[k]
        if alloc.u.get((e.target, e.source), 0.0) > thr:
            edge_count += 1
    node_count = 0
    for i in range(net.n):
        thr = tau if tau is not None else ACTIVE_THRESHOLD_REL * n_caps[i]
        if alloc.v.get(i, 0.0) > thr:
            node_count += 1
    return edge_count, node_count
