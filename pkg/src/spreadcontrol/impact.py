"""Discounted node impact, outbreak risk, and spectral diagnostics.

The node impact vector solves ``(r I - A)^T p = c``: entry ``p_i`` is the
discounted future cost of an outbreak seeded with unit probability at node
``i``. It is finite exactly when the spectral abscissa of the state matrix is
below the discount rate, and it is elementwise nonnegative and monotone in
the rates (an M-matrix inverse-positivity argument).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as sla

from .network import SpreadingNetwork, build_state_matrix

# Abscissa tolerance for the iterative (large-n) path.
_ABSCISSA_TOL = 1e-9
# Above this size we switch from a dense eigensolver to Arnoldi iteration.
_DENSE_LIMIT = 2000


class StabilityError(RuntimeError):
    """The discounted system is not stable enough for a finite impact."""

    def __init__(self, message: str, margin: float | None = None):
        super().__init__(message)
        self.margin = margin


class SolverError(RuntimeError):
    """A numerical backend failed for reasons other than infeasibility."""


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    margin: float
    spectral_abscissa: float
    method: str

    def __bool__(self) -> bool:
        return self.stable


def _abscissa_csr(A: sparse.csr_matrix) -> tuple[float, str]:
    """Spectral abscissa of a Metzler matrix (largest real eigenvalue part).

    Shifting by +I makes the matrix nonnegative (recovery rates are < 1), so
    the dominant eigenvalue is the Perron root of A + I minus one. Dense
    eigensolve up to _DENSE_LIMIT nodes, Arnoldi on the shifted matrix above.
    """
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0]), "dense"
    if n <= _DENSE_LIMIT:
        eigs = np.linalg.eigvals(A.toarray())
        return float(eigs.real.max()), "dense"
    M = (A + sparse.identity(n, format="csr")).tocsr()
    try:
        vals = sla.eigs(
            M, k=1, which="LM", v0=np.ones(n), tol=_ABSCISSA_TOL,
            maxiter=max(1000, 50 * n), return_eigenvectors=False,
        )
    except sla.ArpackNoConvergence as exc:
        raise SolverError(
            f"spectral abscissa iteration did not converge after "
            f"{exc.args} (n={n})"
        ) from exc
    return float(vals.real.max()) - 1.0, "arnoldi"


def spectral_abscissa(net: SpreadingNetwork) -> float:
    return _abscissa_csr(build_state_matrix(net))[0]


def check_discount_stability(net: SpreadingNetwork) -> StabilityReport:
    """True iff the spectral abscissa is below the discount rate, with margin."""
    alpha, method = _abscissa_csr(build_state_matrix(net))
    margin = net.discount_rate - alpha
    return StabilityReport(
        stable=margin > 0.0, margin=margin, spectral_abscissa=alpha, method=method
    )


def dominant_eigenvalue(net: SpreadingNetwork) -> float:
    """Eigenvalue of the state matrix with the largest real part (real, Perron)."""
    return spectral_abscissa(net)


def impact_direct(net: SpreadingNetwork, verify_stability: bool = True) -> np.ndarray:
    """Node impact by the direct sparse solve of ``(r I - A)^T p = c``.

    ``verify_stability=False`` skips the eigenvalue check; callers doing so
    (hot loops, certified cone solutions) still get a nonnegativity guard.
    """
    if verify_stability:
        report = check_discount_stability(net)
        if not report.stable:
            raise StabilityError(
                f"discount rate {net.discount_rate} does not dominate the spectral "
                f"abscissa {report.spectral_abscissa:.6g} (margin {report.margin:.6g})",
                margin=report.margin,
            )
    A = build_state_matrix(net)
    n = net.n
    system = (net.discount_rate * sparse.identity(n, format="csr") - A).T.tocsc()
    p = sla.spsolve(system, net.cost)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    floor = -1e-9 * max(1.0, float(np.abs(p).max()))
    if not np.all(np.isfinite(p)) or p.min() < floor:
        margin = check_discount_stability(net).margin
        raise StabilityError(
            f"impact solve produced invalid entries (min {p.min():.3g}); "
            f"stability margin is {margin:.6g}",
            margin=margin,
        )
    return np.maximum(p, 0.0)


def impact_lp(net: SpreadingNetwork) -> np.ndarray:
    """Node impact via the equivalent linear program.

    Minimizes ``sum(p)`` subject to ``p >= 0`` and ``p^T A - r p^T <= -c``;
    the unique optimum coincides with :func:`impact_direct`. Kept as an
    independent cross-check and as the structural template for the cone
    programs; production code should prefer the direct solve.
    """
    A = build_state_matrix(net)
    n = net.n
    A_ub = (A.T - net.discount_rate * sparse.identity(n, format="csr")).tocsc()
    res = optimize.linprog(
        c=np.ones(n),
        A_ub=A_ub,
        b_ub=-net.cost,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status == 2:
        raise StabilityError(
            "impact LP infeasible: discount rate too small for a finite impact"
        )
    if not res.success:
        raise SolverError(f"impact LP backend failure: {res.message}")
    return np.asarray(res.x, dtype=float)


@dataclass(frozen=True)
class RiskSummary:
    """Per-node outbreak risk: likelihood times impact."""

    values: np.ndarray
    max_risk: float
    argmax: int
    total_risk: float


def outbreak_risk(net: SpreadingNetwork, impact: np.ndarray) -> RiskSummary:
    """Elementwise likelihood-weighted impact, with max (smallest argmax) and total."""
    impact = np.asarray(impact, dtype=float)
    if not np.all(np.isfinite(impact)):
        raise ValueError("impact vector must be finite")
    values = net.likelihood * impact
    argmax = int(np.argmax(values))
    return RiskSummary(
        values=values,
        max_risk=float(values[argmax]),
        argmax=argmax,
        total_risk=float(values.sum()),
    )
