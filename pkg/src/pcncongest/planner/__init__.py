"""Attack planners and the sequential attack round."""
from .allocators import (
    STRATEGIES,
    GeneralPlanner,
    MinPayPlanner,
    RandomPlanner,
    SpcrMaxPlanner,
    make_planner,
    plan,
    plan_general,
    plan_minpay,
    plan_random,
    plan_spcr_max,
)
from .base import AttackPlan, BaseAllocator, PathAllocation, PlannerInput, check_paths
from .lp import LpProblem, LpSolution, Unbounded, solve_lp
from .rounds import apply_plan, minimum_amount, run_attack_round

__all__ = [
    "STRATEGIES",
    "AttackPlan",
    "BaseAllocator",
    "GeneralPlanner",
    "LpProblem",
    "LpSolution",
    "MinPayPlanner",
    "PathAllocation",
    "PlannerInput",
    "RandomPlanner",
    "SpcrMaxPlanner",
    "Unbounded",
    "apply_plan",
    "check_paths",
    "make_planner",
    "minimum_amount",
    "plan",
    "plan_general",
    "plan_minpay",
    "plan_random",
    "plan_spcr_max",
    "run_attack_round",
    "solve_lp",
]
