"""Congestion metrics: CCR, PCR, SPCR, gamma, SPCR deviation, PCR histogram.

Amounts are integer satoshi; ratios are double precision floats computed at
report time. An allocation larger than the balance it is measured against is
an error, never clamped.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .pathfind import PathRecord

PCR_BIN_EDGES = (0.0, 0.25, 0.5, 0.75, 1.0)
PCR_BIN_LABELS = ("0-25%", "25-50%", "50-75%", "75-100%")


class AllocationExceedsBalance(ValueError):
    pass


class AllocationExceedsBottleneck(AllocationExceedsBalance):
    pass


def ccr(alpha: int, balance: int) -> float:
    """Channel congestion ratio: locked payment over one channel's balance."""
    if balance <= 0:
        raise ValueError(f"balance must be positive, got {balance}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if alpha > balance:
        raise AllocationExceedsBalance(f"alpha={alpha} > balance={balance}")
    if alpha == balance:
        return 1.0
    return alpha / balance


def pcr(alpha: int, balances: Sequence[int]) -> float:
    """Path congestion ratio: locked payment over the path bottleneck."""
    if len(balances) == 0:
        raise ValueError("balances must be non-empty")
    low = min(balances)
    if low <= 0:
        raise ValueError(f"balances must be positive, got min {low}")
    if alpha > low:
        raise AllocationExceedsBottleneck(f"alpha={alpha} > bottleneck={low}")
    return ccr(alpha, low)


def spcr(alpha: int, balances: Sequence[int], length: int, l_max: int) -> float:
    """Scaled path congestion ratio, ``(length / l_max) * pcr``."""
    if not 1 <= length <= l_max:
        raise ValueError(f"need 1 <= length <= l_max, got {length}, {l_max}")
    return (length / l_max) * pcr(alpha, balances)


def spcr_from_bottleneck(alpha: int, bottleneck: int, length: int, l_max: int) -> float:
    return spcr(alpha, (bottleneck,), length, l_max)


def spcr_deviation(achieved: float, threshold: float) -> float:
    """Shortfall of the achieved SPCR below the threshold; over-achievement is 0."""
    return max(threshold - achieved, 0.0)


@dataclass(slots=True)
class AllocationView:
    alpha: int
    path: PathRecord
    per_channel_balances: tuple[int, ...]


def gamma(
    allocations: Iterable[tuple[int, float]] | Iterable[AllocationView],
    iterations: int = 1,
    l_max: int = 20,
) -> float:
    """Average cost-to-congestion ratio over ``iterations`` runs.

    ``allocations`` holds every (alpha, spcr) term of every iteration, or
    ``AllocationView`` records. Terms with zero SPCR contribute nothing.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    terms = []
    for item in allocations:
        if isinstance(item, AllocationView):
            a = item.alpha
            s = spcr(a, item.per_channel_balances, item.path.length, l_max)
        else:
            a, s = item
        if s > 0.0:
            terms.append(a / s)
    return math.fsum(terms) / iterations


def pcr_histogram(pcrs: Iterable[float]) -> tuple[float, float, float, float]:
    """Percentage of paths per PCR quartile; the top bin is closed at 1."""
    counts = [0, 0, 0, 0]
    n = 0
    for p in pcrs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"pcr outside [0, 1]: {p}")
        counts[min(int(p * 4), 3)] += 1
        n += 1
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0)
    return tuple(100.0 * c / n for c in counts)  # type: ignore[return-value]


@dataclass(slots=True)
class PathMetrics:
    pair: str
    path_index: int
    alpha: int
    ccr_max: float
    pcr: float
    spcr: float
    deviation: float


@dataclass
class MetricsReport:
    per_path: list[PathMetrics] = field(default_factory=list)
    locked_payment: int = 0
    mean_pcr: float = 0.0
    mean_spcr: float = 0.0
    mean_deviation: float = 0.0
    gamma: float = 0.0
    pcr_histogram: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    @property
    def totals(self) -> dict[str, float]:
        return {
            "locked_payment": self.locked_payment,
            "mean_pcr": self.mean_pcr,
            "mean_spcr": self.mean_spcr,
            "mean_deviation": self.mean_deviation,
            "gamma": self.gamma,
        }


def build_report(
    rows: Iterable[tuple[str, int, int, int, int]],
    l_max: int,
    threshold: float | None = None,
) -> MetricsReport:
    """Metrics for one attack round.

    ``rows`` yields ``(pair_id, path_index, alpha, bottleneck, length)`` with
    the bottleneck probed at planning time.
    """
    per_path = []
    for pair_id, idx, alpha, bottleneck, length in rows:
        if bottleneck <= 0:
            p = 0.0
        else:
            p = pcr(alpha, (bottleneck,))
        s = (length / l_max) * p
        dev = spcr_deviation(s, threshold) if threshold is not None else 0.0
        per_path.append(PathMetrics(pair_id, idx, alpha, p, p, s, dev))
    n = len(per_path)
    report = MetricsReport(per_path=per_path)
    if n:
        report.locked_payment = sum(m.alpha for m in per_path)
        report.mean_pcr = math.fsum(m.pcr for m in per_path) / n
        report.mean_spcr = math.fsum(m.spcr for m in per_path) / n
        report.mean_deviation = math.fsum(m.deviation for m in per_path) / n
        report.gamma = gamma(((m.alpha, m.spcr) for m in per_path), 1)
        report.pcr_histogram = pcr_histogram(m.pcr for m in per_path)
    return report


METRICS_CSV_HEADER = (
    "run_id",
    "attack_name",
    "threshold",
    "budget",
    "pair_id",
    "path_index",
    "alpha",
    "pcr",
    "spcr",
    "deviation",
)

SUMMARY_CSV_HEADER = (
    "run_id",
    "attack_name",
    "threshold",
    "budget",
    "locked_payment",
    "mean_pcr",
    "mean_spcr",
    "mean_deviation",
    "gamma",
    "pcr_0_25",
    "pcr_25_50",
    "pcr_50_75",
    "pcr_75_100",
)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_metrics_csv(
    fh: TextIO,
    report: MetricsReport,
    run_id: str,
    attack_name: str,
    threshold: float | None,
    budget: int,
    header: bool = True,
) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(METRICS_CSV_HEADER)
    for m in report.per_path:
        w.writerow(
            [run_id, attack_name, fmt(threshold), budget, m.pair, m.path_index,
             m.alpha, fmt(m.pcr), fmt(m.spcr), fmt(m.deviation)]
        )


def write_summary_csv(
    fh: TextIO,
    report: MetricsReport,
    run_id: str,
    attack_name: str,
    threshold: float | None,
    budget: int,
    header: bool = True,
) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(SUMMARY_CSV_HEADER)
    w.writerow(
        [run_id, attack_name, fmt(threshold), budget, report.locked_payment,
         fmt(report.mean_pcr), fmt(report.mean_spcr), fmt(report.mean_deviation),
         fmt(report.gamma), *(fmt(h) for h in report.pcr_histogram)]
    )
