"""Monte Carlo runner for the threshold sweep (exp1) and the budget sweep (exp2).

Every iteration draws a fresh topology from its own seed substream, so
iterations are independent and can run in any order or in parallel. Results
are reduced in iteration order, which keeps outputs byte-identical between
serial and pooled runs.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..graph import GraphSnapshot, PcnGraph, restore, snapshot
from ..htlc import CLTV_DELTAS, withhold_and_expire
from ..metrics import MetricsReport, build_report
from ..netgen import NoPathBetweenPair, attach_sybils, calibrate_path_lengths, generate_topology
from ..planner.rounds import run_attack_round
from .config import WORKERS_ENV, ConfigError, ExperimentConfig, substream_seed

logger = logging.getLogger(__name__)

METRICS = (
    "mean_pcr",
    "mean_spcr",
    "mean_deviation",
    "locked_payment",
    "gamma",
    "pcr_0_25",
    "pcr_25_50",
    "pcr_50_75",
    "pcr_75_100",
    "mean_length",
    "n_paths",
    "max_spend_fraction",
)


class TopologyCalibrationFailed(RuntimeError):
    pass


class LifecycleViolation(RuntimeError):
    pass


@dataclass
class Network:
    graph: PcnGraph
    pairs: list[tuple[str, str]]
    attempts: int
    mean_length: float
    snapshot: GraphSnapshot = field(init=False, repr=False)

    def __post_init__(self):
        self.snapshot = snapshot(self.graph)


@dataclass
class Point:
    """Across-iteration statistics for one (strategy, budget, threshold)."""

    strategy: str
    budget: int
    threshold: float | None
    n: int
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int, float | None]:
        return (self.strategy, self.budget, self.threshold)


@dataclass
class RunResult:
    experiment: str
    config_hash: str
    iterations: int
    points: list[Point]
    config: dict = field(default_factory=dict)

    def point(self, strategy: str, budget: int, threshold: float | None = None) -> Point:
        for p in self.points:
            if p.key == (strategy, budget, threshold):
                return p
        raise KeyError((strategy, budget, threshold))

    def series(self, strategy: str, metric: str, budget: int | None = None) -> list[tuple]:
        """(x, mean, std) along the sweep axis for one strategy."""
        out = []
        for p in self.points:
            if p.strategy != strategy or (budget is not None and p.budget != budget):
                continue
            x = p.threshold if self.experiment == "exp1" else p.budget
            out.append((x, p.mean[metric], p.std[metric]))
        return out

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "iterations": self.iterations,
            "config": self.config,
            "points": [dataclasses.asdict(p) for p in self.points],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> RunResult:
        return cls(
            experiment=doc["experiment"],
            config_hash=doc["config_hash"],
            iterations=doc["iterations"],
            config=doc.get("config", {}),
            points=[Point(**p) for p in doc["points"]],
        )


def build_network(cfg: ExperimentConfig, iteration: int) -> Network:
    """Seeded topology plus Sybils whose attack paths pass length calibration."""
    for attempt in range(cfg.max_topology_attempts):
        topo = dataclasses.replace(
            cfg.topology, rng_seed=substream_seed(cfg.seed, iteration, "topology", attempt)
        )
        syb = dataclasses.replace(
            cfg.sybil, rng_seed=substream_seed(cfg.seed, iteration, "sybil", attempt)
        )
        graph = generate_topology(topo)
        pairs = attach_sybils(graph, syb)
        try:
            diag = calibrate_path_lengths(
                graph,
                pairs,
                target_mean=cfg.target_mean_length,
                target_max=cfg.target_max_length,
                tolerance=cfg.length_tolerance,
                l_max=cfg.max_hops,
                max_paths=cfg.max_paths,
                selection=cfg.path_selection,
            )
        except NoPathBetweenPair:
            continue
        if diag.accepted:
            return Network(graph, pairs, attempt + 1, diag.mean)
    raise TopologyCalibrationFailed(
        f"iteration {iteration}: no topology within {cfg.max_topology_attempts} attempts"
    )


def _round(
    cfg: ExperimentConfig,
    net: Network,
    iteration: int,
    strategy: str,
    budget: int,
    threshold: float | None,
    tag: int,
):
    graph = restore(net.snapshot)
    plans = run_attack_round(
        graph,
        net.pairs,
        strategy,
        budget,
        threshold,
        l_max=cfg.l_max,
        max_hops=cfg.max_hops,
        max_paths=cfg.max_paths,
        path_selection=cfg.path_selection,
        probe_noise=cfg.probe_noise,
        reprobe=cfg.reprobe,
        budget_scope=cfg.budget_scope,
        expiry=graph.block_height + CLTV_DELTAS[1],
        cltv_delta=cfg.cltv_delta,
        random_state=substream_seed(cfg.seed, iteration, "random-planner", tag),
        rng=np.random.default_rng(substream_seed(cfg.seed, iteration, "htlc", tag)),
    )
    for p in plans:
        if p.spent > p.budget:
            raise LifecycleViolation(f"{p.attacker} spent {p.spent} > budget {p.budget}")
    if cfg.verify_lifecycle:
        htlcs = [h for p in plans for e in p.entries for h in e.htlcs]
        latest = max((h.expiry for h in htlcs), default=graph.block_height)
        withhold_and_expire(graph, htlcs, latest)
        if graph.total_locked() != 0 or not _balances_equal(graph, net.snapshot):
            raise LifecycleViolation(f"iteration {iteration}: balances not restored")
    return plans


def _balances_equal(graph: PcnGraph, snap) -> bool:
    before = restore(snap)
    for key, ch in graph.channels.items():
        other = before.channels[key]
        if (ch.balance_xy, ch.balance_yx) != (other.balance_xy, other.balance_yx):
            return False
    return True


def _measure(cfg: ExperimentConfig, plans, threshold: float | None) -> dict[str, float]:
    rows = [r for p in plans for r in p.metric_rows()]
    rep: MetricsReport = build_report(rows, cfg.l_max, threshold)
    lengths = [r[4] for r in rows]
    out = {
        "mean_pcr": rep.mean_pcr,
        "mean_spcr": rep.mean_spcr,
        "mean_deviation": rep.mean_deviation,
        "locked_payment": float(rep.locked_payment),
        "gamma": rep.gamma,
        "mean_length": math.fsum(lengths) / len(lengths) if lengths else 0.0,
        "n_paths": float(len(rows)),
        "max_spend_fraction": max((p.spent / p.budget for p in plans if p.budget), default=0.0),
    }
    for name, h in zip(("pcr_0_25", "pcr_25_50", "pcr_50_75", "pcr_75_100"), rep.pcr_histogram):
        out[name] = h
    return out


def exp1_iteration(cfg: ExperimentConfig, iteration: int) -> list[tuple[tuple, dict]]:
    """Every (strategy, budget, threshold) measurement of one iteration.

    Baselines ignore the threshold, so they run once per budget and are
    scored against each threshold.
    """
    net = build_network(cfg, iteration)
    out = []
    for bi, budget in enumerate(cfg.budgets):
        for si, strategy in enumerate(cfg.strategies):
            if strategy == "minpay":
                for ti, t in enumerate(cfg.threshold_grid):
                    plans = _round(cfg, net, iteration, strategy, budget, t, _tag(bi, si, ti))
                    out.append(((strategy, budget, t), _measure(cfg, plans, t)))
            else:
                plans = _round(cfg, net, iteration, strategy, budget, None, _tag(bi, si, 0))
                for t in cfg.threshold_grid:
                    out.append(((strategy, budget, t), _measure(cfg, plans, t)))
    return out


def exp2_iteration(cfg: ExperimentConfig, iteration: int) -> list[tuple[tuple, dict]]:
    net = build_network(cfg, iteration)
    out = []
    for bi, budget in enumerate(cfg.budget_sweep):
        for si, strategy in enumerate(cfg.strategies):
            if strategy == "minpay":
                continue
            plans = _round(cfg, net, iteration, strategy, budget, None, _tag(bi, si, 0))
            out.append(((strategy, budget, None), _measure(cfg, plans, None)))
    return out


def _tag(bi: int, si: int, ti: int) -> int:
    return (bi * 16 + si) * 64 + ti


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    return n


def _map_iterations(fn, cfg: ExperimentConfig, workers: int | None) -> list:
    workers = worker_count() if workers is None else workers
    its = range(cfg.iterations)
    if workers <= 1 or cfg.iterations == 1:
        return [fn(cfg, i) for i in its]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [cfg] * cfg.iterations, its))


def aggregate(per_iteration: Iterable[list[tuple[tuple, dict]]], iterations: int) -> list[Point]:
    """Ordered reduce: mean and population std per key, keys in first-seen order."""
    values: dict[tuple, dict[str, list[float]]] = {}
    for results in per_iteration:
        for key, metrics in results:
            slot = values.setdefault(key, {m: [] for m in METRICS})
            for m in METRICS:
                slot[m].append(metrics[m])
    points = []
    for (strategy, budget, threshold), slot in values.items():
        n = len(slot[METRICS[0]])
        if n != iterations:
            raise RuntimeError(f"{strategy}/{budget}/{threshold}: {n} != {iterations} samples")
        mean = {m: math.fsum(v) / n for m, v in slot.items()}
        std = {m: float(np.std(np.asarray(v, dtype=np.float64))) for m, v in slot.items()}
        points.append(Point(strategy, budget, threshold, n, mean, std))
    return points


def run_experiment_1(cfg: ExperimentConfig, workers: int | None = None) -> RunResult:
    """MinPay against the baselines over the threshold grid, per budget."""
    cfg.validate()
    if "minpay" not in cfg.strategies:
        raise ConfigError("experiment 1 needs minpay among the strategies")
    per_it = _map_iterations(exp1_iteration, cfg, workers)
    return RunResult("exp1", cfg.config_hash(), cfg.iterations, aggregate(per_it, cfg.iterations),
                     cfg.to_dict())


def run_experiment_2(cfg: ExperimentConfig, workers: int | None = None) -> RunResult:
    """SPCR-Max and the baselines over the budget sweep."""
    cfg.validate()
    if "spcr-max" not in cfg.strategies:
        raise ConfigError("experiment 2 needs spcr-max among the strategies")
    per_it = _map_iterations(exp2_iteration, cfg, workers)
    return RunResult("exp2", cfg.config_hash(), cfg.iterations, aggregate(per_it, cfg.iterations),
                     cfg.to_dict())
