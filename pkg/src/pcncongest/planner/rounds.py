"""One attack round: attackers plan and lock in turn against a shared graph."""
from __future__ import annotations

import logging
from collections import OrderedDict
from typing import Mapping, Sequence

import numpy as np

from ..graph import NodeId, PcnGraph
from ..htlc import (
    CLTV_DELTAS,
    BelowDust,
    FeePolicy,
    HtlcError,
    HtlcEventLog,
    SlotsExhausted,
    lock_path,
)
from ..pathfind import (
    DEFAULT_L_MAX,
    DEFAULT_MAX_PATHS,
    PathRecord,
    find_all_paths,
    probe,
    select_paths,
)
from .allocators import make_planner
from .base import AttackPlan, PlannerInput, plan_from_estimator

logger = logging.getLogger(__name__)

BUDGET_SCOPES = ("attacker", "pair")


def group_pairs(pairs: Sequence[tuple[NodeId, NodeId]]) -> OrderedDict[NodeId, list[NodeId]]:
    """Receivers per sender, senders in first-seen order."""
    out: OrderedDict[NodeId, list[NodeId]] = OrderedDict()
    for a, b in pairs:
        out.setdefault(a, [])
        if b not in out[a]:
            out[a].append(b)
    return out


def residual_bottleneck(graph: PcnGraph, path: PathRecord, fee: int = 0) -> int:
    """Largest amount that can still be locked along ``path`` right now."""
    hops = path.hops
    best = None
    for i in range(len(hops) - 1):
        cap = graph.channel(hops[i], hops[i + 1]).balance(hops[i]) + i * fee
        if best is None or cap < best:
            best = cap
    return int(best)


def _discover(graph, sender, receivers, max_hops, max_paths, selection, noise, rng):
    found = []
    for r in receivers:
        found.extend(find_all_paths(graph, sender, r, l_max=max_hops, max_paths=max_paths))
    paths = select_paths(graph, found, selection)
    for p in paths:
        probe(graph, p, noise=noise, rng=rng)
    return paths


def minimum_amount(graph: PcnGraph, path: PathRecord, fee: int = 0) -> int:
    """Smallest payment every hop of ``path`` accepts as an HTLC."""
    hops = path.hops
    return max(
        graph.channel(hops[i], hops[i + 1]).htlc_minimum + i * fee
        for i in range(len(hops) - 1)
    )


def apply_plan(
    graph: PcnGraph,
    plan: AttackPlan,
    expiry: int,
    fees: FeePolicy = FeePolicy(),
    cltv_delta: int = 0,
    rng: np.random.Generator | None = None,
    log: HtlcEventLog | None = None,
) -> None:
    """Lock every planned payment, clamping to what the graph can still carry.

    Paths are walked in ``plan.order``; an earlier path of the same plan may
    already have drained a shared channel, in which case the payment shrinks
    to the residual bottleneck (flag ``clamped``) or is dropped (``unusable``,
    ``dust`` or ``slots``). A payment below the HTLC minimum is raised to it
    (flag ``raised``) while the unplanned part of the budget covers the
    difference and the path can carry it.
    """
    fee = fees.flat_fee_per_hop
    headroom = plan.budget - plan.planned_spent
    for j in plan.order:
        e = plan.entries[j]
        if e.planned_alpha <= 0:
            e.applied_alpha = 0
            continue
        residual = residual_bottleneck(graph, e.path, fee)
        amount = min(e.planned_alpha, residual)
        if amount <= 0:
            e.applied_alpha, e.flag = 0, "unusable"
            continue
        floor = minimum_amount(graph, e.path, fee)
        raised = False
        if amount == e.planned_alpha and amount < floor <= min(residual, e.bottleneck):
            if floor - amount <= headroom:
                headroom -= floor - amount
                amount, raised = floor, True
        preimage = rng.bytes(32) if rng is not None else None
        try:
            e.htlcs = lock_path(graph, e.path, amount, expiry, fees, cltv_delta, preimage, log)
        except BelowDust:
            e.applied_alpha, e.flag = 0, "dust"
            continue
        except SlotsExhausted:
            e.applied_alpha, e.flag = 0, "slots"
            continue
        except HtlcError:
            e.applied_alpha, e.flag = 0, "unusable"
            continue
        e.applied_alpha = amount
        if raised:
            e.flag = "raised"
        elif amount < e.planned_alpha:
            e.flag = "clamped"


def run_attack_round(
    graph: PcnGraph,
    pairs: Sequence[tuple[NodeId, NodeId]],
    strategy: str,
    budgets: int | Mapping[NodeId, int],
    threshold: float | None = None,
    *,
    l_max: int = DEFAULT_L_MAX,
    max_hops: int | None = None,
    max_paths: int = DEFAULT_MAX_PATHS,
    path_selection: str = "shortest",
    probe_noise: float = 0.0,
    reprobe: bool = True,
    budget_scope: str = "attacker",
    expiry: int | None = None,
    cltv_delta: int = 0,
    fees: FeePolicy = FeePolicy(),
    random_state=None,
    rng: np.random.Generator | None = None,
    log: HtlcEventLog | None = None,
) -> list[AttackPlan]:
    """Plan and lock one attacker at a time, in sender order.

    Each attacker enumerates and probes its paths on the graph as left by the
    attackers before it (unless ``reprobe`` is off, in which case every
    attacker uses probes taken before the round starts), plans with
    ``strategy`` and locks the result via HTLCs. ``path_selection`` narrows
    the enumerated paths (see ``select_paths``). With ``budget_scope="pair"``
    each (sender, receiver) pair is planned with its own budget.
    """
    if budget_scope not in BUDGET_SCOPES:
        raise ValueError(f"budget_scope must be one of {BUDGET_SCOPES}")
    max_hops = l_max if max_hops is None else min(max_hops, l_max)
    if expiry is None:
        expiry = graph.block_height + CLTV_DELTAS[1]
    rng = rng if rng is not None else np.random.default_rng(0)
    if not isinstance(random_state, np.random.RandomState):
        random_state = np.random.RandomState(random_state)

    groups = group_pairs(pairs)
    if not reprobe:
        stale = {
            a: _discover(graph, a, rs, max_hops, max_paths, path_selection, probe_noise, rng)
            for a, rs in groups.items()
        }

    plans: list[AttackPlan] = []
    for attacker, receivers in groups.items():
        budget = budgets[attacker] if isinstance(budgets, Mapping) else budgets
        if reprobe:
            paths = _discover(
                graph, attacker, receivers, max_hops, max_paths, path_selection, probe_noise, rng
            )
        else:
            paths = stale[attacker]
        if budget_scope == "attacker":
            groups_to_plan = [paths]
        else:
            groups_to_plan = [[p for p in paths if p.dest == r] for r in receivers]
        for group in groups_to_plan:
            inp = PlannerInput(attacker, budget, group, l_max=l_max, threshold=threshold)
            est = make_planner(strategy, budget, l_max, threshold, random_state)
            plan = plan_from_estimator(est, inp, strategy)
            apply_plan(graph, plan, expiry, fees, cltv_delta, rng, log)
            plans.append(plan)
            logger.debug(
                "attacker %s: %d paths, planned %d, applied %d",
                attacker, len(group), plan.planned_spent, plan.spent,
            )
    return plans
