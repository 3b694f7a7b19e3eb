"""Linearized spreading-process network and its ODE simulators.

Edge orientation convention (important): an edge record ``(target, source)``
states that activity at ``source`` drives ``target``, and the corresponding
rate lands at ``A[target, source]`` in the state matrix. Grid scenarios
produce symmetric edge supports that would silently hide a flipped
convention, so anything that touches rows vs. columns of ``A`` must route
through :func:`build_state_matrix` or the cached adjacency lists here.

All objects are immutable after construction and safe to share across
threads; simulations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import sparse


class IntegrationError(RuntimeError):
    """A trajectory produced non-finite values."""


@dataclass(frozen=True)
class EdgeParams:
    """Spread rate of one directed edge, its control interval and cost weight.

    ``beta`` is the current rate; investments may move it inside
    ``[beta_lo, beta_hi]``. Omitted bounds default to ``beta`` (a fixed,
    uncontrollable edge).
    """

    beta: float
    beta_lo: float | None = None
    beta_hi: float | None = None
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.beta_lo is None:
            object.__setattr__(self, "beta_lo", self.beta)
        if self.beta_hi is None:
            object.__setattr__(self, "beta_hi", self.beta)
        if not (0.0 < self.beta_lo <= self.beta <= self.beta_hi):
            raise ValueError(
                f"edge rate bounds must satisfy 0 < lo <= beta <= hi, got "
                f"lo={self.beta_lo}, beta={self.beta}, hi={self.beta_hi}"
            )
        if not self.weight > 0.0:
            raise ValueError(f"edge weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class NodeParams:
    """Per-node recovery rate, control interval, cost and outbreak likelihood."""

    delta: float
    delta_lo: float | None = None
    delta_hi: float | None = None
    weight: float = 1.0
    cost: float = 0.0
    likelihood: float = 0.0

    def __post_init__(self) -> None:
        if self.delta_lo is None:
            object.__setattr__(self, "delta_lo", self.delta)
        if self.delta_hi is None:
            object.__setattr__(self, "delta_hi", self.delta)
        if not (0.0 < self.delta_lo <= self.delta <= self.delta_hi < 1.0):
            raise ValueError(
                f"recovery bounds must satisfy 0 < lo <= delta <= hi < 1, got "
                f"lo={self.delta_lo}, delta={self.delta}, hi={self.delta_hi}"
            )
        if not self.weight > 0.0:
            raise ValueError(f"node weight must be positive, got {self.weight}")
        if self.cost < 0.0:
            raise ValueError(f"node cost must be nonnegative, got {self.cost}")
        if not 0.0 <= self.likelihood <= 1.0:
            raise ValueError(f"likelihood must be in [0, 1], got {self.likelihood}")


class Edge(NamedTuple):
    """Directed edge: ``source`` drives ``target`` (rate at A[target, source])."""

    target: int
    source: int
    params: EdgeParams


@dataclass(frozen=True, eq=False)
class SpreadingNetwork:
    """Directed network with controllable spread/recovery rates.

    ``edges`` accepts ``Edge`` records or plain ``(target, source, params)``
    tuples. Duplicate ordered pairs and self-loops are rejected; the diagonal
    of the state matrix is owned by the nodes' recovery rates.
    """

    nodes: tuple[NodeParams, ...]
    edges: tuple[Edge, ...]
    discount_rate: float

    def __init__(
        self,
        nodes: Sequence[NodeParams],
        edges: Iterable[tuple | Edge] = (),
        discount_rate: float = 1.0,
    ) -> None:
        object.__setattr__(self, "nodes", tuple(nodes))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in edges))
        object.__setattr__(self, "discount_rate", float(discount_rate))
        self._validate()

    def _validate(self) -> None:
        if not self.nodes:
            raise ValueError("network needs at least one node")
        if not self.discount_rate > 0.0:
            raise ValueError(f"discount rate must be positive, got {self.discount_rate}")
        n = self.n
        seen: set[tuple[int, int]] = set()
        for target, source, _ in self.edges:
            if not (0 <= target < n and 0 <= source < n):
                raise ValueError(f"edge endpoint out of range: ({target}, {source})")
            if target == source:
                raise ValueError(f"self-loop at node {target}; recovery owns the diagonal")
            if (target, source) in seen:
                raise ValueError(f"duplicate edge ({target}, {source})")
            seen.add((target, source))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # Cached parameter arrays, aligned with node / edge order.

    @cached_property
    def delta(self) -> np.ndarray:
        return np.array([p.delta for p in self.nodes])

    @cached_property
    def delta_lo(self) -> np.ndarray:
        return np.array([p.delta_lo for p in self.nodes])

    @cached_property
    def delta_hi(self) -> np.ndarray:
        return np.array([p.delta_hi for p in self.nodes])

    @cached_property
    def cost(self) -> np.ndarray:
        return np.array([p.cost for p in self.nodes])

    @cached_property
    def likelihood(self) -> np.ndarray:
        return np.array([p.likelihood for p in self.nodes])

    @cached_property
    def node_weight(self) -> np.ndarray:
        return np.array([p.weight for p in self.nodes])

    @cached_property
    def beta(self) -> np.ndarray:
        return np.array([e.params.beta for e in self.edges])

    @cached_property
    def beta_lo(self) -> np.ndarray:
        return np.array([e.params.beta_lo for e in self.edges])

    @cached_property
    def beta_hi(self) -> np.ndarray:
        return np.array([e.params.beta_hi for e in self.edges])

    @cached_property
    def edge_weight(self) -> np.ndarray:
        return np.array([e.params.weight for e in self.edges])

    @cached_property
    def edge_target(self) -> np.ndarray:
        return np.array([e.target for e in self.edges], dtype=np.int64)

    @cached_property
    def edge_source(self) -> np.ndarray:
        return np.array([e.source for e in self.edges], dtype=np.int64)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices grouped by source node (column of the state matrix)."""
        buckets: list[list[int]] = [[] for _ in range(self.n)]
        for k, e in enumerate(self.edges):
            buckets[e.source].append(k)
        return tuple(tuple(b) for b in buckets)

    def max_beta_row_sum(self) -> float:
        """Largest total inbound spread rate over nodes (0 for edgeless nets)."""
        if not self.edges:
            return 0.0
        sums = np.zeros(self.n)
        np.add.at(sums, self.edge_target, self.beta)
        return float(sums.max())

    def with_rates(
        self,
        beta: Mapping[int, float] | np.ndarray | None = None,
        delta: Mapping[int, float] | np.ndarray | None = None,
    ) -> "SpreadingNetwork":
        """Copy of the network with updated current rates (bounds unchanged).

        ``beta`` maps edge index -> rate (or a full array); ``delta``
        analogously for nodes. New rates must respect the existing bounds.
        """
        new_beta = np.asarray(self.beta, dtype=float).copy()
        if beta is not None:
            if isinstance(beta, Mapping):
                for k, val in beta.items():
                    new_beta[k] = val
            else:
                new_beta = np.asarray(beta, dtype=float)
        new_delta = np.asarray(self.delta, dtype=float).copy()
        if delta is not None:
            if isinstance(delta, Mapping):
                for k, val in delta.items():
                    new_delta[k] = val
            else:
                new_delta = np.asarray(delta, dtype=float)
        edges = [
            Edge(e.target, e.source, EdgeParams(
                beta=float(new_beta[k]), beta_lo=e.params.beta_lo,
                beta_hi=e.params.beta_hi, weight=e.params.weight))
            for k, e in enumerate(self.edges)
        ]
        nodes = [
            NodeParams(
                delta=float(new_delta[i]), delta_lo=p.delta_lo, delta_hi=p.delta_hi,
                weight=p.weight, cost=p.cost, likelihood=p.likelihood)
            for i, p in enumerate(self.nodes)
        ]
        return SpreadingNetwork(nodes, edges, self.discount_rate)

    def uncontrolled(self) -> "SpreadingNetwork":
        """Rates at zero investment: spread at upper, recovery at lower bounds."""
        return self.with_rates(beta=self.beta_hi, delta=self.delta_lo)

    def fully_invested(self) -> "SpreadingNetwork":
        """Rates at maximal investment: spread at lower, recovery at upper bounds."""
        return self.with_rates(beta=self.beta_lo, delta=self.delta_hi)


def build_state_matrix(net: SpreadingNetwork) -> sparse.csr_matrix:
    """Sparse state matrix A: A[i, i] = -delta_i, A[target, source] = beta.

    The result is Metzler (nonnegative off-diagonal), so the linear dynamics
    are a positive system.
    """
    n = net.n
    rows = np.concatenate([np.arange(n), net.edge_target]) if net.edges else np.arange(n)
    cols = np.concatenate([np.arange(n), net.edge_source]) if net.edges else np.arange(n)
    vals = np.concatenate([-net.delta, net.beta]) if net.edges else -net.delta
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _offdiagonal_matrix(net: SpreadingNetwork) -> sparse.csr_matrix:
    n = net.n
    if not net.edges:
        return sparse.csr_matrix((n, n))
    return sparse.csr_matrix((net.beta, (net.edge_target, net.edge_source)), shape=(n, n))


def default_dt(net: SpreadingNetwork) -> float:
    """Conservative fixed RK4 step: 0.01 over the fastest system rate."""
    scale = max(net.discount_rate, float(net.delta.max()), net.max_beta_row_sum())
    return 0.01 / scale


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step trajectory: ``states[k]`` is the state at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _check_x0(net: SpreadingNetwork, x0: np.ndarray) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.n,):
        raise ValueError(f"x0 must have shape ({net.n},), got {x0.shape}")
    if not np.all((x0 >= 0.0) & (x0 <= 1.0)):
        raise ValueError("x0 entries must lie in [0, 1]")
    return x0


def _rk4(f, x0: np.ndarray, horizon: float, dt: float) -> Trajectory:
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    steps = max(1, int(math.ceil(horizon / dt)))
    h = horizon / steps
    times = np.linspace(0.0, horizon, steps + 1)
    states = np.empty((steps + 1, x0.size))
    states[0] = x0
    x = x0
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={times[k + 1]:.6g}")
        states[k + 1] = x
    return Trajectory(times=times, states=states)


def simulate_linear(
    net: SpreadingNetwork, x0: np.ndarray, horizon: float, dt: float | None = None
) -> Trajectory:
    """Integrate the linearized dynamics x' = A x with fixed-step RK4."""
    x0 = _check_x0(net, x0)
    A = build_state_matrix(net)
    return _rk4(lambda x: A @ x, x0, horizon, dt if dt is not None else default_dt(net))


def simulate_nonlinear(
    net: SpreadingNetwork, x0: np.ndarray, horizon: float, dt: float | None = None
) -> Trajectory:
    """Integrate the mean-field dynamics x_i' = (1 - x_i) * (B x)_i - delta_i x_i.

    B is the off-diagonal spread part of the state matrix; the linear model
    upper-bounds this trajectory for identical initial conditions.
    """
    x0 = _check_x0(net, x0)
    B = _offdiagonal_matrix(net)
    delta = net.delta

    def f(x: np.ndarray) -> np.ndarray:
        return (1.0 - x) * (B @ x) - delta * x

    return _rk4(f, x0, horizon, dt if dt is not None else default_dt(net))
