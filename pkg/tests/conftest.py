import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spreadcontrol.network import EdgeParams, NodeParams, SpreadingNetwork

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def rand_stable_net(
    rng: np.random.Generator,
    n: int,
    edge_prob: float = 0.25,
    controllable: bool = False,
    with_likelihood: bool = True,
) -> SpreadingNetwork:
    """Random network whose discount rate dominates the spectral abscissa.

    The discount rate is set above the largest inbound rate sum, which upper
    bounds the abscissa for a Metzler matrix.
    """
    nodes = [
        NodeParams(
            delta=float(rng.uniform(0.1, 0.8)),
            cost=float(rng.uniform(0.0, 2.0)),
            likelihood=float(rng.uniform(0.0, 1.0)) if with_likelihood else 0.0,
        )
        for _ in range(n)
    ]
    edges = []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < edge_prob:
                beta = float(rng.uniform(0.05, 1.0))
                if controllable:
                    par = EdgeParams(beta=beta, beta_lo=beta * 0.05, beta_hi=beta)
                else:
                    par = EdgeParams(beta=beta)
                edges.append((i, j, par))
    row_sums = np.zeros(n)
    for i, _, par in edges:
        row_sums[i] += par.beta
    r = float(row_sums.max() if len(edges) else 0.0) + float(rng.uniform(0.5, 2.0))
    return SpreadingNetwork(nodes, edges, discount_rate=r)


def two_node_net() -> SpreadingNetwork:
    """Hand-solvable fixture: p = (1/3.7, 0.5/3.7^2) at r=3.5."""
    return SpreadingNetwork(
        nodes=[
            NodeParams(delta=0.2, cost=1.0, likelihood=0.5),
            NodeParams(delta=0.2, cost=0.0, likelihood=1.0),
        ],
        edges=[(0, 1, EdgeParams(beta=0.5, beta_lo=0.05, beta_hi=0.5))],
        discount_rate=3.5,
    )


def line3_net(
    rng: np.random.Generator | None = None,
    budget_scale: float = 1.0,
) -> SpreadingNetwork:
    """Controllable 3-node chain 2 -> 1 -> 0 plus a direct 2 -> 0 shortcut."""
    rng = rng or np.random.default_rng(0)
    b10 = float(rng.uniform(0.3, 0.8))
    b21 = float(rng.uniform(0.3, 0.8))
    b20 = float(rng.uniform(0.2, 0.6))
    # the expensive sink never ignites itself, so the binding risk sits at the
    # upstream nodes and investment can always move it
    nodes = [
        NodeParams(delta=0.3, cost=1.0, likelihood=0.0),
        NodeParams(delta=0.3, cost=float(rng.uniform(0.05, 0.3)),
                   likelihood=float(rng.uniform(0.2, 0.8))),
        NodeParams(delta=0.3, cost=float(rng.uniform(0.05, 0.3)),
                   likelihood=float(rng.uniform(0.5, 1.0))),
    ]
    edges = [
        (0, 1, EdgeParams(beta=b10, beta_lo=b10 / 4.0, beta_hi=b10)),
        (1, 2, EdgeParams(beta=b21, beta_lo=b21 / 4.0, beta_hi=b21)),
        (0, 2, EdgeParams(beta=b20, beta_lo=b20 / 4.0, beta_hi=b20)),
    ]
    return SpreadingNetwork(nodes, edges, discount_rate=2.5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
