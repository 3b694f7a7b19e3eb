"""Solver-agnostic exponential cone programs and interior-point backends.

A :class:`ConeProgram` is the standard form

    minimize    c . x + c0
    subject to  A_eq x  = b_eq
                A_ub x <= b_ub
                (F x + f)[3k : 3k+3]  in  K_exp   for each cone k

where ``K_exp = closure{(a, b, c) : b > 0, b * exp(a / b) <= c}``. Sum-of-
exponentials rows ``sum_k exp(z_k) <= bound`` are encoded by the builder as
one auxiliary scalar per term, a cone membership ``(z_k, 1, s_k)``, and a
linear row ``sum_k s_k <= bound``.

Backends adapt this form to a concrete solver. Clarabel is the default;
SCS is available as an alternate to demonstrate that the interface swaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np
from scipy import sparse

LinTerms = Mapping[int, float]


@dataclass(frozen=True)
class ConeProgram:
    n_vars: int
    c: np.ndarray
    c0: float
    A_eq: sparse.csr_matrix
    b_eq: np.ndarray
    A_ub: sparse.csr_matrix
    b_ub: np.ndarray
    F: sparse.csr_matrix  # 3 * n_exp rows; rows 3k..3k+2 are one cone triple
    f: np.ndarray
    n_exp: int

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.c0)


@dataclass(frozen=True)
class ConeSolution:
    status: str  # optimal | infeasible | unbounded | failed
    x: np.ndarray | None
    objective: float
    iterations: int
    solve_time: float
    solver: str
    raw_status: str

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _TripletBlock:
    """COO accumulator for one constraint block."""

    def __init__(self) -> None:
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.rhs: list[float] = []

    def add(self, coeffs: LinTerms, rhs: float) -> None:
        r = len(self.rhs)
        for idx, coef in coeffs.items():
            if coef != 0.0:
                self.rows.append(r)
                self.cols.append(idx)
                self.vals.append(float(coef))
        self.rhs.append(float(rhs))

    def matrix(self, n_vars: int) -> tuple[sparse.csr_matrix, np.ndarray]:
        mat = sparse.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(len(self.rhs), n_vars)
        )
        return mat, np.asarray(self.rhs, dtype=float)


class ConeProgramBuilder:
    def __init__(self) -> None:
        self._n = 0
        self._obj: dict[int, float] = {}
        self._obj_const = 0.0
        self._eq = _TripletBlock()
        self._ub = _TripletBlock()
        self._exp = _TripletBlock()
        self._n_exp = 0

    @property
    def n_vars(self) -> int:
        return self._n

    def new_var(self) -> int:
        self._n += 1
        return self._n - 1

    def new_vars(self, count: int) -> np.ndarray:
        start = self._n
        self._n += count
        return np.arange(start, self._n)

    def minimize(self, coeffs: LinTerms, const: float = 0.0) -> None:
        self._obj = dict(coeffs)
        self._obj_const = float(const)

    def add_ineq(self, coeffs: LinTerms, rhs: float) -> None:
        """sum coeffs . x <= rhs"""
        self._ub.add(coeffs, rhs)

    def add_eq(self, coeffs: LinTerms, rhs: float) -> None:
        self._eq.add(coeffs, rhs)

    def add_box(self, idx: int, lo: float | None = None, hi: float | None = None) -> None:
        if lo is not None:
            self._ub.add({idx: -1.0}, -lo)
        if hi is not None:
            self._ub.add({idx: 1.0}, hi)

    def add_exp_cone(
        self, a: tuple[LinTerms, float], b: tuple[LinTerms, float], c: tuple[LinTerms, float]
    ) -> None:
        """Constrain the affine triple (a, b, c) to the exponential cone."""
        for coeffs, const in (a, b, c):
            self._exp.add(coeffs, -const)  # store F x; holds -const so rhs=f flips sign
        self._n_exp += 1

    def add_exp_term(self, exponent: LinTerms, exponent_const: float = 0.0) -> int:
        """Fresh s with s >= exp(exponent . x + exponent_const); returns s's index."""
        s = self.new_var()
        self.add_exp_cone((exponent, exponent_const), ({}, 1.0), ({s: 1.0}, 0.0))
        return s

    def add_sum_exp_le(
        self, exponents: Sequence[tuple[LinTerms, float]], bound: float
    ) -> list[int]:
        """sum_k exp(z_k) <= bound via per-term epigraph scalars; returns them."""
        aux = [self.add_exp_term(coeffs, const) for coeffs, const in exponents]
        self.add_ineq({s: 1.0 for s in aux}, bound)
        return aux

    def build(self) -> ConeProgram:
        c = np.zeros(self._n)
        for idx, coef in self._obj.items():
            c[idx] = coef
        A_eq, b_eq = self._eq.matrix(self._n)
        A_ub, b_ub = self._ub.matrix(self._n)
        F, f_neg = self._exp.matrix(self._n)
        return ConeProgram(
            n_vars=self._n, c=c, c0=self._obj_const,
            A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub,
            F=F, f=-f_neg, n_exp=self._n_exp,
        )


class SolverBackend(Protocol):
    name: str

    def solve(self, prog: ConeProgram) -> ConeSolution: ...


def _stack_conic(prog: ConeProgram) -> tuple[sparse.csc_matrix, np.ndarray]:
    """Rows ordered zero cone, nonnegative cone, exp triples: A x + s = b."""
    A = sparse.vstack([prog.A_eq, prog.A_ub, -prog.F], format="csc")
    b = np.concatenate([prog.b_eq, prog.b_ub, prog.f])
    return A, b


@dataclass
class ClarabelBackend:
    """Interior-point exponential cone solver (native backend).

    ``max_step_fraction`` is deliberately more conservative than the solver
    default: programs whose optimum pushes many exponential cones toward
    their boundary (deep rate reductions) stall under aggressive steps but
    converge cleanly at 0.9.
    """

    tol_feas: float = 1e-8
    tol_gap_abs: float = 1e-8
    tol_gap_rel: float = 1e-8
    max_iter: int = 400
    max_step_fraction: float = 0.9
    verbose: bool = False
    name: str = field(default="clarabel", init=False)

    def solve(self, prog: ConeProgram) -> ConeSolution:
        import clarabel

        A, b = _stack_conic(prog)
        cones: list = []
        if prog.b_eq.size:
            cones.append(clarabel.ZeroConeT(prog.b_eq.size))
        if prog.b_ub.size:
            cones.append(clarabel.NonnegativeConeT(prog.b_ub.size))
        cones.extend(clarabel.ExponentialConeT() for _ in range(prog.n_exp))
        settings = clarabel.DefaultSettings()
        settings.verbose = self.verbose
        settings.tol_feas = self.tol_feas
        settings.tol_gap_abs = self.tol_gap_abs
        settings.tol_gap_rel = self.tol_gap_rel
        settings.max_iter = self.max_iter
        settings.max_step_fraction = self.max_step_fraction
        solver = clarabel.DefaultSolver(
            sparse.csc_matrix((prog.n_vars, prog.n_vars)), prog.c, A, b, cones, settings
        )
        sol = solver.solve()
        raw = str(sol.status)
        status = {
            "Solved": "optimal",
            "AlmostSolved": "optimal",
            "PrimalInfeasible": "infeasible",
            "AlmostPrimalInfeasible": "infeasible",
            "DualInfeasible": "unbounded",
            "AlmostDualInfeasible": "unbounded",
        }.get(raw, "failed")
        x = np.asarray(sol.x, dtype=float) if status == "optimal" else None
        objective = prog.objective_value(x) if x is not None else float("nan")
        return ConeSolution(
            status=status, x=x, objective=objective,
            iterations=int(sol.iterations), solve_time=float(sol.solve_time),
            solver=self.name, raw_status=raw,
        )


@dataclass
class ScsBackend:
    """First-order conic solver; alternate backend behind the same interface."""

    eps_abs: float = 1e-9
    eps_rel: float = 1e-9
    max_iters: int = 200_000
    verbose: bool = False
    name: str = field(default="scs", init=False)

    def solve(self, prog: ConeProgram) -> ConeSolution:
        import scs

        A, b = _stack_conic(prog)
        cone = {"z": int(prog.b_eq.size), "l": int(prog.b_ub.size), "ep": prog.n_exp}
        data = {"A": A, "b": b, "c": prog.c}
        solver = scs.SCS(
            data, cone,
            eps_abs=self.eps_abs, eps_rel=self.eps_rel,
            max_iters=self.max_iters, verbose=self.verbose,
        )
        out = solver.solve()
        raw = out["info"]["status"]
        if raw.startswith("solved"):
            status = "optimal"
        elif "infeasible" in raw:
            status = "infeasible"
        elif "unbounded" in raw:
            status = "unbounded"
        else:
            status = "failed"
        x = np.asarray(out["x"], dtype=float) if status == "optimal" else None
        objective = prog.objective_value(x) if x is not None else float("nan")
        return ConeSolution(
            status=status, x=x, objective=objective,
            iterations=int(out["info"]["iter"]),
            solve_time=float(out["info"]["solve_time"]) / 1e3,
            solver=self.name, raw_status=raw,
        )


@dataclass
class RetryBackend:
    """Runs a ladder of backends, returning the first conclusive result.

    A stalled interior-point run (``failed`` status) triggers the next rung;
    ``optimal``, ``infeasible`` and ``unbounded`` are conclusive. The default
    ladder re-runs Clarabel with increasingly conservative step fractions,
    which resolves the rare stalls that aggressive steps cause near
    exponential-cone boundaries.
    """

    backends: tuple = ()
    name: str = field(default="clarabel-ladder", init=False)

    def __post_init__(self) -> None:
        if not self.backends:
            self.backends = (
                ClarabelBackend(),
                ClarabelBackend(max_step_fraction=0.8, max_iter=2000),
                ClarabelBackend(max_step_fraction=0.7, max_iter=5000),
            )

    def solve(self, prog: ConeProgram) -> ConeSolution:
        last = None
        for backend in self.backends:
            last = backend.solve(prog)
            if last.status != "failed":
                return last
        return last


def default_backend() -> RetryBackend:
    return RetryBackend()
