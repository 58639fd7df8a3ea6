"""Attack allocators: MinPay, SPCR-Max, and the random and general baselines.

Per path ``j`` the achievable SPCR is linear in the payment,
``SPCR_j(alpha) = length_j / (l_max * bottleneck_j) * alpha`` for
``0 <= alpha <= bottleneck_j``, which is what makes both attacks LPs.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from sklearn.utils import check_random_state

from ..pathfind import DEFAULT_L_MAX
from .base import (
    AttackPlan,
    BaseAllocator,
    PlannerInput,
    density_order,
    plan_from_estimator,
)
from .lp import LpProblem, solve_lp

PHASE_RTOL = 1e-9
# slack when rounding LP output to whole satoshi
_ROUND_EPS = 1e-6


def _floor_satoshi(values: np.ndarray, caps: np.ndarray, budget: int, order) -> np.ndarray:
    """Whole-satoshi payments within caps and budget, rounding down."""
    alpha = np.floor(values + _ROUND_EPS).astype(np.int64)
    alpha = np.clip(alpha, 0, caps)
    excess = int(alpha.sum()) - budget
    for j in reversed(list(order)):
        if excess <= 0:
            break
        cut = min(excess, int(alpha[j]))
        alpha[j] -= cut
        excess -= cut
    return alpha


class MinPayPlanner(BaseAllocator):
    """Smallest total payment that reaches an SPCR threshold on every path.

    Solved as a lexicographic LP. The first phase minimises the total SPCR
    shortfall below ``threshold`` within the budget and bottleneck caps; the
    second holds that shortfall (to a relative ``1e-9``) and minimises the
    total payment. When the threshold is reachable everywhere this is the
    exact hard-constrained minimum, ``alpha_j = threshold * l_max * b_j / l_j``.

    Attributes set by ``fit``: ``alpha_``, ``spcr_``, ``deviation_``,
    ``shortfall_``, ``order_`` and ``spent_``.
    """

    def __init__(self, budget: int = 0, threshold: float = 0.0, l_max: int = DEFAULT_L_MAX):
        self.budget = budget
        self.threshold = threshold
        self.l_max = l_max

    def fit(self, X, y=None):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        super().fit(X)
        self.deviation_ = np.maximum(self.threshold - self.spcr_, 0.0)
        return self

    def _allocate(self, bottleneck, length, budget):
        order = density_order(bottleneck, length)
        n = len(bottleneck)
        t = float(self.threshold)
        live = np.flatnonzero(bottleneck > 0)
        alpha = np.zeros(n, dtype=np.int64)
        self.shortfall_ = float(np.sum(t * (bottleneck <= 0)))
        if t == 0.0 or budget == 0 or len(live) == 0:
            self.shortfall_ = float(t * n)
            return alpha, order

        m = bottleneck[live].astype(np.float64)
        w = length[live] / self.l_max
        k = len(live)
        scale = float(m.max())
        # variables: x_0..x_{k-1} = PCR in [0, 1], then s_0..s_{k-1} >= 0
        bounds = [(0.0, 1.0)] * k + [(0.0, None)] * k
        budget_row = np.concatenate([m / scale, np.zeros(k)])

        def base_problem(c):
            p = LpProblem(c, sense="min", bounds=list(bounds))
            for i in range(k):
                row = np.zeros(2 * k)
                row[i] = w[i]
                row[k + i] = 1.0
                p.add_constraint(row, ">=", t)
            p.add_constraint(budget_row, "<=", budget / scale)
            return p

        phase_a = solve_lp(base_problem(np.concatenate([np.zeros(k), np.ones(k)])))
        if not phase_a.optimal:
            raise RuntimeError("shortfall LP has no solution")
        shortfall = max(phase_a.objective, 0.0)

        pb = base_problem(np.concatenate([m / scale, np.zeros(k)]))
        pb.add_constraint(
            np.concatenate([np.zeros(k), np.ones(k)]),
            "<=",
            shortfall + PHASE_RTOL * max(shortfall, 1.0),
        )
        phase_b = solve_lp(pb)
        if not phase_b.optimal:
            raise RuntimeError("payment LP has no solution")

        values = np.zeros(n)
        values[live] = phase_b.x[:k] * m
        alpha = _floor_satoshi(values, bottleneck, budget, order)
        alpha = self._top_up(alpha, bottleneck, length, budget, order)
        self.shortfall_ = shortfall + float(t * (n - k))
        return alpha, order

    def _top_up(self, alpha, bottleneck, length, budget, order):
        """Spend satoshi left over from flooring where they cut the shortfall most.

        Each extra satoshi on path ``j`` removes ``min(w_j, shortfall_j)``,
        so flooring followed by this greedy pass keeps the integer payments
        shortfall-optimal; satoshi that would remove nothing are not spent.
        """
        t = Fraction(self.threshold).limit_denominator(10**9)
        w = [Fraction(int(l), self.l_max * int(b)) if b > 0 else Fraction(0)
             for b, l in zip(bottleneck, length)]
        left = budget - int(alpha.sum())
        rank = {int(j): r for r, j in enumerate(order)}
        while left > 0:
            best, gain = None, Fraction(0)
            for j in range(len(alpha)):
                if alpha[j] >= bottleneck[j]:
                    continue
                g = min(w[j], max(t - w[j] * int(alpha[j]), Fraction(0)))
                if g > gain or (g == gain and g > 0 and rank[j] < rank[best]):
                    best, gain = j, g
            if best is None:
                break
            alpha[best] += 1
            left -= 1
        return alpha


class SpcrMaxPlanner(BaseAllocator):
    """Largest total SPCR for a budget.

    The LP is a fractional knapsack, so it is solved exactly by filling paths
    to their bottleneck in decreasing SPCR-per-satoshi order until the budget
    runs out.
    """

    def _allocate(self, bottleneck, length, budget):
        order = density_order(bottleneck, length)
        alpha = np.zeros(len(bottleneck), dtype=np.int64)
        remaining = budget
        for j in order:
            if remaining <= 0:
                break
            a = min(int(bottleneck[j]), remaining)
            alpha[j] = a
            remaining -= a
        return alpha, order


class RandomPlanner(BaseAllocator):
    """Random baseline: random effective budget, random per-path payments."""

    def __init__(self, budget: int = 0, l_max: int = DEFAULT_L_MAX, random_state=None):
        self.budget = budget
        self.l_max = l_max
        self.random_state = random_state

    def _allocate(self, bottleneck, length, budget):
        rng = check_random_state(self.random_state)
        alpha = np.zeros(len(bottleneck), dtype=np.int64)
        # (0, B]: 1 - U[0, 1) never hits zero
        remaining = int(math.floor(budget * (1.0 - rng.random_sample())))
        order = rng.permutation(len(bottleneck))
        for j in order:
            cap = min(int(bottleneck[j]), remaining)
            if cap <= 0:
                continue
            a = min(int(math.floor(rng.uniform(0.0, cap))), cap)
            alpha[j] = a
            remaining -= a
        return alpha, order


class GeneralPlanner(BaseAllocator):
    """Greedy baseline: largest bottleneck first, each path filled to its cap."""

    def _allocate(self, bottleneck, length, budget):
        order = np.array(
            sorted(range(len(bottleneck)), key=lambda j: (-int(bottleneck[j]), j)),
            dtype=np.int64,
        )
        alpha = np.zeros(len(bottleneck), dtype=np.int64)
        remaining = budget
        for j in order:
            a = min(int(bottleneck[j]), remaining)
            alpha[j] = a
            remaining -= a
        return alpha, order


STRATEGIES = ("minpay", "spcr-max", "random", "general")


def make_planner(
    strategy: str,
    budget: int,
    l_max: int = DEFAULT_L_MAX,
    threshold: float | None = None,
    random_state=None,
) -> BaseAllocator:
    if strategy == "minpay":
        if threshold is None:
            raise ValueError("minpay needs a threshold")
        return MinPayPlanner(budget=budget, threshold=threshold, l_max=l_max)
    if strategy == "spcr-max":
        return SpcrMaxPlanner(budget=budget, l_max=l_max)
    if strategy == "random":
        return RandomPlanner(budget=budget, l_max=l_max, random_state=random_state)
    if strategy == "general":
        return GeneralPlanner(budget=budget, l_max=l_max)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def plan_minpay(inp: PlannerInput) -> AttackPlan:
    if inp.threshold is None:
        raise ValueError("minpay needs a threshold")
    est = MinPayPlanner(budget=inp.budget, threshold=inp.threshold, l_max=inp.l_max)
    return plan_from_estimator(est, inp, "minpay")


def plan_spcr_max(inp: PlannerInput) -> AttackPlan:
    return plan_from_estimator(SpcrMaxPlanner(inp.budget, inp.l_max), inp, "spcr-max")


def plan_random(inp: PlannerInput, rng=None) -> AttackPlan:
    est = RandomPlanner(inp.budget, inp.l_max, random_state=rng)
    return plan_from_estimator(est, inp, "random")


def plan_general(inp: PlannerInput) -> AttackPlan:
    return plan_from_estimator(GeneralPlanner(inp.budget, inp.l_max), inp, "general")


def plan(strategy: str, inp: PlannerInput, rng=None) -> AttackPlan:
    est = make_planner(strategy, inp.budget, inp.l_max, inp.threshold, rng)
    return plan_from_estimator(est, inp, strategy)
