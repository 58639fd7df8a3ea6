"""CSV series, SVG charts and a plain-text summary for a RunResult."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from ..metrics import fmt
from .config import ConfigError
from .experiments import RunResult

FORMATS = ("csv", "svg-charts", "summary-text")

SERIES = {
    "exp1": {
        "pcr_vs_threshold": "mean_pcr",
        "spcr_deviation_vs_threshold": "mean_deviation",
        "locked_payment_vs_threshold": "locked_payment",
        "gamma_vs_threshold": "gamma",
    },
    "exp2": {
        "pcr_vs_budget": "mean_pcr",
        "spcr_vs_budget": "mean_spcr",
        "locked_payment_vs_budget": "locked_payment",
        "gamma_vs_budget": "gamma",
    },
}
HISTOGRAM_BINS = (
    ("0-25", "pcr_0_25"),
    ("25-50", "pcr_25_50"),
    ("50-75", "pcr_50_75"),
    ("75-100", "pcr_75_100"),
)
SERIES_CSV_HEADER = ("strategy", "budget", "threshold", "mean", "std", "n")
HISTOGRAM_CSV_HEADER = (
    "strategy", "budget", "threshold", "bin", "mean_percent", "std_percent", "n"
)


class IoError(OSError):
    pass


def series_names(result: RunResult) -> list[str]:
    names = list(SERIES[result.experiment])
    if result.experiment == "exp1":
        names.append("pcr_histogram")
    return names


def write_series_csv(result: RunResult, name: str, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if name == "pcr_histogram":
            w.writerow(HISTOGRAM_CSV_HEADER)
            for p in result.points:
                for label, key in HISTOGRAM_BINS:
                    w.writerow([p.strategy, p.budget, fmt(p.threshold), label,
                                fmt(p.mean[key]), fmt(p.std[key]), p.n])
            return
        metric = SERIES[result.experiment][name]
        w.writerow(SERIES_CSV_HEADER)
        for p in result.points:
            w.writerow([p.strategy, p.budget, fmt(p.threshold),
                        fmt(p.mean[metric]), fmt(p.std[metric]), p.n])


def _chart(result: RunResult, name: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "pcncongest"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    strategies = list(dict.fromkeys(p.strategy for p in result.points))
    if name == "pcr_histogram":
        budget = max(p.budget for p in result.points)
        rows = [p for p in result.points if p.strategy == "minpay" and p.budget == budget]
        width = 0.8 / max(len(rows), 1)
        for i, p in enumerate(rows):
            xs = [k + i * width for k in range(len(HISTOGRAM_BINS))]
            ax.bar(xs, [p.mean[key] for _, key in HISTOGRAM_BINS], width,
                   label=f"t={p.threshold:g}")
        ax.set_xticks([k + 0.4 - width / 2 for k in range(len(HISTOGRAM_BINS))])
        ax.set_xticklabels([f"{lab}%" for lab, _ in HISTOGRAM_BINS])
        ax.set_xlabel("PCR bin")
        ax.set_ylabel("share of MinPay paths (%)")
        ax.set_title(f"MinPay PCR distribution, B={budget:g}")
    else:
        metric = SERIES[result.experiment][name]
        budgets = sorted({p.budget for p in result.points})
        if result.experiment == "exp1":
            for s in strategies:
                for b in budgets:
                    pts = [(x, m) for x, m, _ in result.series(s, metric, budget=b)]
                    ax.plot(*zip(*pts), marker="o", label=f"{s} B={b:g}")
            ax.set_xlabel("SPCR threshold")
        else:
            for s in strategies:
                pts = [(x, m) for x, m, _ in result.series(s, metric)]
                ax.plot(*zip(*pts), marker="o", label=s)
            ax.set_xscale("log")
            ax.set_xlabel("budget (satoshi)")
        ax.set_ylabel(metric.replace("_", " "))
        ax.set_title(name.replace("_", " "))
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def summary_text(result: RunResult) -> str:
    """Per-strategy means and standard deviations, with gamma ranked."""
    lines = [
        f"experiment: {result.experiment}",
        f"config hash: {result.config_hash}",
        f"iterations: {result.iterations}",
        "",
    ]
    strategies = list(dict.fromkeys(p.strategy for p in result.points))
    metrics = ("mean_pcr", "mean_spcr", "mean_deviation", "locked_payment", "gamma")
    for s in strategies:
        pts = [p for p in result.points if p.strategy == s]
        lines.append(f"[{s}]")
        for m in metrics:
            mean = sum(p.mean[m] for p in pts) / len(pts)
            std = sum(p.std[m] for p in pts) / len(pts)
            lines.append(f"  {m:<16} {mean:.6g} +/- {std:.6g}")
    lines.append("")
    lines.append("gamma per strategy, ascending (mean over all points):")
    ranked = sorted(
        (sum(p.mean["gamma"] for p in result.points if p.strategy == s)
         / sum(1 for p in result.points if p.strategy == s), s)
        for s in strategies
    )
    for g, s in ranked:
        lines.append(f"  {s:<10} {g:.6g}")
    return "\n".join(lines) + "\n"


def render_report(
    result: RunResult, out_dir: str | Path, formats=FORMATS
) -> list[Path]:
    """Write the requested outputs under ``out_dir``; returns the files written."""
    if not result.points:
        raise ConfigError("result has no data points (empty strategy subset?)")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ConfigError(f"unknown report formats: {sorted(unknown)}")
    out = Path(out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in series_names(result):
            if "csv" in formats:
                p = out / f"{result.experiment}_{name}.csv"
                write_series_csv(result, name, p)
                written.append(p)
            if "svg-charts" in formats:
                p = out / f"{result.experiment}_{name}.svg"
                _chart(result, name, p)
                written.append(p)
        if "summary-text" in formats:
            p = out / f"{result.experiment}_summary.txt"
            p.write_text(summary_text(result))
            written.append(p)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return written


def save_result(result: RunResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n")


def load_result(path: str | Path) -> RunResult:
    return RunResult.from_dict(json.loads(Path(path).read_text()))
