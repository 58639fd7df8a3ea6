"""Shared planner types and the estimator base class.

Allocators follow the scikit-learn estimator protocol. The design matrix has
one row per candidate path and two columns, ``[bottleneck, length]``;
``fit`` solves the allocation and stores it on ``alpha_``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..htlc import Htlc
from ..metrics import spcr_deviation
from ..pathfind import DEFAULT_L_MAX, PathRecord


def check_paths(X, l_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Validate a ``[bottleneck, length]`` matrix; returns int64 columns.

    An empty matrix (no paths) is allowed.
    """
    X = np.asarray(X)
    if X.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns [bottleneck, length], got {X.shape[1]}")
    if np.any(X != np.floor(X)):
        raise ValueError("bottlenecks and lengths must be whole numbers")
    bottleneck = X[:, 0].astype(np.int64)
    length = X[:, 1].astype(np.int64)
    if np.any(bottleneck < 0):
        raise ValueError("bottlenecks must be non-negative")
    if np.any(length < 1) or np.any(length > l_max):
        raise ValueError(f"path lengths must lie in [1, {l_max}]")
    return bottleneck, length


def check_budget(budget) -> int:
    b = int(budget)
    if b != budget or b < 0:
        raise ValueError(f"budget must be a non-negative whole number, got {budget!r}")
    return b


def density_order(bottleneck: np.ndarray, length: np.ndarray) -> np.ndarray:
    """Paths by SPCR gained per satoshi, descending.

    Ties go to the longer path, then to the lower index. Densities are
    compared exactly as rationals ``length / bottleneck``.
    """
    keys = []
    for j, (b, l) in enumerate(zip(bottleneck.tolist(), length.tolist())):
        d = Fraction(l, b) if b > 0 else Fraction(-1)
        keys.append((-d, -l, j))
    return np.array([k[2] for k in sorted(keys)], dtype=np.int64)


def spcr_values(alpha: np.ndarray, bottleneck: np.ndarray, length: np.ndarray, l_max: int):
    ratio = np.divide(
        alpha, bottleneck, out=np.zeros(len(alpha), dtype=np.float64), where=bottleneck > 0
    )
    return (length / l_max) * ratio


class BaseAllocator(BaseEstimator):
    """Budget-constrained allocation of payments over paths."""

    def __init__(self, budget: int = 0, l_max: int = DEFAULT_L_MAX):
        self.budget = budget
        self.l_max = l_max

    def _allocate(self, bottleneck, length, budget):  # pragma: no cover - abstract
        raise NotImplementedError

    def fit(self, X, y=None):
        bottleneck, length = check_paths(X, self.l_max)
        budget = check_budget(self.budget)
        if len(bottleneck) == 0:
            alpha, order = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        else:
            alpha, order = self._allocate(bottleneck, length, budget)
        alpha = np.asarray(alpha, dtype=np.int64)
        assert np.all(alpha >= 0) and np.all(alpha <= bottleneck)
        assert int(alpha.sum()) <= budget
        self.alpha_ = alpha
        self.order_ = np.asarray(order, dtype=np.int64)
        self.spcr_ = spcr_values(alpha, bottleneck, length, self.l_max)
        self.spent_ = int(alpha.sum())
        self.n_paths_ = len(alpha)
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).alpha_

    def score(self, X=None, y=None) -> float:
        """Total SPCR achieved by the fitted allocation."""
        check_is_fitted(self, "alpha_")
        return float(self.spcr_.sum())


@dataclass
class PlannerInput:
    attacker: str
    budget: int
    paths: list[PathRecord]
    l_max: int = DEFAULT_L_MAX
    threshold: float | None = None

    def __post_init__(self):
        check_budget(self.budget)
        for p in self.paths:
            if p.source != self.attacker:
                raise ValueError(f"path {p.hops} does not start at {self.attacker}")
            if p.bottleneck is None:
                raise ValueError(f"path {p.hops} has not been probed")

    def design_matrix(self) -> np.ndarray:
        return np.array(
            [[p.bottleneck, p.length] for p in self.paths], dtype=np.float64
        ).reshape(-1, 2)


@dataclass
class PathAllocation:
    path: PathRecord
    path_index: int
    bottleneck: int
    planned_alpha: int
    applied_alpha: int
    flag: str = ""
    htlcs: list[Htlc] = field(default_factory=list, repr=False)

    @property
    def pair_id(self) -> str:
        return self.path.pair_id

    @property
    def length(self) -> int:
        return self.path.length


@dataclass
class AttackPlan:
    attacker: str
    strategy: str
    budget: int
    l_max: int
    threshold: float | None
    entries: list[PathAllocation] = field(default_factory=list)
    order: list[int] = field(default_factory=list)

    @property
    def spent(self) -> int:
        return sum(e.applied_alpha for e in self.entries)

    @property
    def planned_spent(self) -> int:
        return sum(e.planned_alpha for e in self.entries)

    @property
    def residual_budget(self) -> int:
        return self.budget - self.spent

    @property
    def allocations(self) -> dict[tuple[str, int], int]:
        return {(e.pair_id, e.path_index): e.applied_alpha for e in self.entries}

    def achieved_spcr(self, applied: bool = True) -> list[float]:
        out = []
        for e in self.entries:
            a = e.applied_alpha if applied else e.planned_alpha
            if e.bottleneck <= 0:
                out.append(0.0)
            elif a == e.bottleneck:
                out.append(e.length / self.l_max)
            else:
                out.append((e.length / self.l_max) * (a / e.bottleneck))
        return out

    def deviations(self, applied: bool = True) -> list[float]:
        if self.threshold is None:
            return [0.0] * len(self.entries)
        return [spcr_deviation(s, self.threshold) for s in self.achieved_spcr(applied)]

    def metric_rows(self):
        for e in self.entries:
            yield (e.pair_id, e.path_index, e.applied_alpha, e.bottleneck, e.length)


def plan_from_estimator(
    est: BaseAllocator, inp: PlannerInput, strategy: str
) -> AttackPlan:
    est.fit(inp.design_matrix())
    counters: dict[str, int] = {}
    entries = []
    for p, a in zip(inp.paths, est.alpha_.tolist()):
        idx = counters.get(p.pair_id, 0)
        counters[p.pair_id] = idx + 1
        entries.append(PathAllocation(p, idx, int(p.bottleneck), int(a), int(a)))
    return AttackPlan(
        attacker=inp.attacker,
        strategy=strategy,
        budget=int(inp.budget),
        l_max=inp.l_max,
        threshold=inp.threshold,
        entries=entries,
        order=est.order_.tolist(),
    )
