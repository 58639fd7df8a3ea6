from __future__ import annotations

import numpy as np
import pytest

from pcncongest.planner.lp import LpProblem, Unbounded, solve_lp


def test_textbook_maximisation():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
    p = LpProblem([3, 5], sense="max")
    p.add_constraint([1, 0], "<=", 4)
    p.add_constraint([0, 2], "<=", 12)
    p.add_constraint([3, 2], "<=", 18)
    sol = solve_lp(p)
    assert sol.optimal
    np.testing.assert_allclose(sol.x, [2, 6], atol=1e-9)
    assert sol.objective == pytest.approx(36)
    assert p.violation(sol.x) <= 1e-9


def test_equality_and_bounds():
    p = LpProblem([1, 1], bounds=[(1, 3), (0, None)])
    p.add_constraint([1, 1], "==", 5)
    p.add_constraint([1, -1], ">=", -1)
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(5)
    assert sol.x[0] >= 2 - 1e-9


def test_infeasible_and_unbounded():
    p = LpProblem([1])
    p.add_constraint([1], "<=", -1)
    assert solve_lp(p).status == "infeasible"
    with pytest.raises(Unbounded):
        solve_lp(LpProblem([-1]))


def test_problem_validation():
    with pytest.raises(ValueError):
        LpProblem([1], sense="maybe")
    with pytest.raises(ValueError):
        LpProblem([1, 2], bounds=[(0, 1)])
    p = LpProblem([1, 2])
    with pytest.raises(ValueError):
        p.add_constraint([1], "<=", 1)
    with pytest.raises(ValueError):
        p.add_constraint([1, 1], "<", 1)


def test_violation_measures_worst_row():
    p = LpProblem([1, 1], bounds=[(0, 1), (0, 1)])
    p.add_constraint([1, 1], "<=", 1)
    assert p.violation(np.array([0.5, 0.5])) == 0.0
    assert p.violation(np.array([1.0, 1.0])) > 0.0
    assert p.violation(np.array([2.0, 0.0])) > 0.0
