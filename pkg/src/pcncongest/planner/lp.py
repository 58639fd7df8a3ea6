"""Small linear programs, solved with the HiGHS dual simplex from scipy."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

FEASIBILITY_RTOL = 1e-9


class Unbounded(ValueError):
    """The objective is unbounded over the feasible region."""


@dataclass
class LpProblem:
    """``sense`` c.x subject to row constraints and per-variable bounds.

    Variables default to ``[0, inf)``. Rows are added with ``add_constraint``
    using one of ``<=``, ``>=`` or ``==``.
    """

    c: Sequence[float]
    sense: str = "min"
    bounds: list[tuple[float | None, float | None]] | None = None
    rows: list[tuple[np.ndarray, str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * len(self.c)
        if len(self.bounds) != len(self.c):
            raise ValueError("one bound pair per variable")

    @property
    def n_vars(self) -> int:
        return len(self.c)

    def add_constraint(self, coeffs: Sequence[float], op: str, rhs: float) -> LpProblem:
        if op not in ("<=", ">=", "=="):
            raise ValueError(f"unknown constraint operator {op!r}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_vars,):
            raise ValueError("constraint width must match the number of variables")
        self.rows.append((coeffs, op, float(rhs)))
        return self

    def matrices(self):
        ub_a, ub_b, eq_a, eq_b = [], [], [], []
        for a, op, b in self.rows:
            if op == "<=":
                ub_a.append(a)
                ub_b.append(b)
            elif op == ">=":
                ub_a.append(-a)
                ub_b.append(-b)
            else:
                eq_a.append(a)
                eq_b.append(b)
        as_mat = lambda rows: np.vstack(rows) if rows else None  # noqa: E731
        as_vec = lambda vals: np.asarray(vals) if vals else None  # noqa: E731
        return as_mat(ub_a), as_vec(ub_b), as_mat(eq_a), as_vec(eq_b)

    def violation(self, x: np.ndarray) -> float:
        """Largest relative constraint or bound violation at ``x``."""
        worst = 0.0
        for a, op, b in self.rows:
            lhs = float(a @ x)
            scale = max(1.0, abs(b), float(np.abs(a) @ np.abs(x)))
            if op == "<=":
                v = lhs - b
            elif op == ">=":
                v = b - lhs
            else:
                v = abs(lhs - b)
            worst = max(worst, v / scale)
        for xi, (lo, hi) in zip(x, self.bounds):
            if lo is not None:
                worst = max(worst, (lo - xi) / max(1.0, abs(lo)))
            if hi is not None:
                worst = max(worst, (xi - hi) / max(1.0, abs(hi)))
        return worst


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _scale_rows(a, b):
    if a is None:
        return a, b
    r = np.abs(a).max(axis=1)
    r[r == 0] = 1.0
    return a / r[:, None], b / r


def solve_lp(problem: LpProblem) -> LpSolution:
    """Optimal vertex of ``problem`` or ``status == "infeasible"``.

    Columns are scaled by their finite bound and rows by their largest
    coefficient before solving, so tolerances are relative to the data.
    Raises ``Unbounded`` for a malformed problem without a finite optimum.
    """
    a_ub, b_ub, a_eq, b_eq = problem.matrices()
    col = np.array(
        [max(abs(lo or 0.0), abs(hi or 0.0)) for lo, hi in problem.bounds], dtype=float
    )
    col[~np.isfinite(col) | (col == 0)] = 1.0
    c = (problem.c if problem.sense == "min" else -problem.c) * col
    if np.abs(c).max(initial=0.0) > 0:
        c = c / np.abs(c).max()
    a_ub, b_ub = _scale_rows(None if a_ub is None else a_ub * col, b_ub)
    a_eq, b_eq = _scale_rows(None if a_eq is None else a_eq * col, b_eq)
    bounds = [
        (None if lo is None else lo / s, None if hi is None else hi / s)
        for (lo, hi), s in zip(problem.bounds, col)
    ]
    kw = dict(A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds)
    res = linprog(
        c,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        **kw,
    )
    if res.status == 4:
        # tight tolerances can still stall; retry with the solver defaults
        res = linprog(c, method="highs", **kw)
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        raise Unbounded("objective is unbounded")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    x = np.asarray(res.x, dtype=float) * col
    return LpSolution(status="optimal", x=x, objective=float(problem.c @ x))
