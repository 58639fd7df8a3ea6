"""Command line entry point: ``pcncongest {gen,attack,exp1,exp2,report}``.

Settings come from built-in defaults, then ``--config FILE`` (INI, see
``pcncongest.harness.config``), then per-setting flags such as
``--honest-node-count 300`` or ``--budgets 75e6,1e8``. The worker count for
``exp1``/``exp2`` is read from ``PCNCONGEST_WORKERS`` only.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from ..graph import dump_graph, load_graph
from ..metrics import build_report, write_metrics_csv, write_summary_csv
from ..planner.allocators import STRATEGIES
from ..planner.rounds import run_attack_round
from .config import ConfigError, ExperimentConfig, apply_setting, dump_config, load_config
from .experiments import (
    TopologyCalibrationFailed,
    build_network,
    run_experiment_1,
    run_experiment_2,
)
from .report import FORMATS, load_result, render_report, save_result

logger = logging.getLogger("pcncongest")


def _setting_fields():
    """(section, field name) for every config key, in file order."""
    cfg = ExperimentConfig()
    out = []
    for section, obj in (("topology", cfg.topology), ("sybil", cfg.sybil), ("experiment", cfg)):
        for f in dataclasses.fields(obj):
            if f.name in ("topology", "sybil", "rng_seed"):
                continue
            out.append((section, f.name))
    return out


def _add_setting_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    g = p.add_argument_group("settings (override the config file)")
    for section, name in _setting_fields():
        g.add_argument(
            "--" + name.replace("_", "-"),
            dest=f"set__{section}__{name}",
            metavar="VALUE",
            help=f"[{section}] {name}",
        )


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    for key, value in vars(args).items():
        if key.startswith("set__") and value is not None:
            _, section, name = key.split("__", 2)
            apply_setting(cfg, section, name, value)
    cfg.validate()
    return cfg


def cmd_gen(args) -> int:
    cfg = config_from_args(args)
    net = build_network(cfg, args.iteration)
    out = args.out
    if out is None:
        import json

        print(json.dumps(net.graph.to_dict(net.pairs), indent=1))
    else:
        dump_graph(net.graph, out, net.pairs)
        logger.info("wrote %s (%d nodes, %d channels, %d pairs, mean path length %.2f)",
                    out, len(net.graph.nodes), len(net.graph.channels), len(net.pairs),
                    net.mean_length)
    return 0


def cmd_attack(args) -> int:
    cfg = config_from_args(args)
    if args.graph is not None:
        graph, pairs = load_graph(args.graph)
        if not pairs:
            raise ConfigError(f"{args.graph} lists no attacker pairs")
    else:
        net = build_network(cfg, args.iteration)
        graph, pairs = net.graph, net.pairs
    if args.strategy == "minpay" and args.threshold is None:
        raise ConfigError("minpay needs --threshold")
    budget = int(float(args.budget)) if args.budget is not None else cfg.budgets[-1]
    plans = run_attack_round(
        graph, pairs, args.strategy, budget, args.threshold,
        l_max=cfg.l_max, max_hops=cfg.max_hops, max_paths=cfg.max_paths,
        path_selection=cfg.path_selection, probe_noise=cfg.probe_noise,
        reprobe=cfg.reprobe, budget_scope=cfg.budget_scope, cltv_delta=cfg.cltv_delta,
        random_state=cfg.seed,
    )
    rows = [r for p in plans for r in p.metric_rows()]
    rep = build_report(rows, cfg.l_max, args.threshold)
    run_id = cfg.config_hash()
    if args.paths_csv:
        with open(args.paths_csv, "w", newline="") as fh:
            write_metrics_csv(fh, rep, run_id, args.strategy, args.threshold, budget)
    write_summary_csv(sys.stdout, rep, run_id, args.strategy, args.threshold, budget)
    return 0


def _run_experiment(args, runner) -> int:
    cfg = config_from_args(args)
    out = Path(cfg.output_dir)
    result = runner(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{result.experiment}_config.ini").write_text(dump_config(cfg))
    save_result(result, out / f"{result.experiment}_result.json")
    for p in render_report(result, out, args.formats):
        logger.info("wrote %s", p)
    return 0


def cmd_report(args) -> int:
    result = load_result(args.result)
    out = args.out if args.out is not None else Path(args.result).parent
    for p in render_report(result, out, args.formats):
        logger.info("wrote %s", p)
    return 0


def _formats(text: str) -> list[str]:
    out = [f.strip() for f in text.split(",") if f.strip()]
    for f in out:
        if f not in FORMATS:
            raise argparse.ArgumentTypeError(f"unknown format {f!r}; choose from {FORMATS}")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcncongest", description="Payment channel congestion attack laboratory"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "gen", parents=[common], help="generate a calibrated topology as graph JSON"
    )
    _add_setting_flags(p)
    p.add_argument("--iteration", type=int, default=0, help="seed substream to draw from")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser(
        "attack", parents=[common], help="run one attack round and print its metrics"
    )
    _add_setting_flags(p)
    p.add_argument("--graph", type=Path, help="graph JSON with pairs (default: generate)")
    p.add_argument("--iteration", type=int, default=0)
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--budget", help="per-attacker budget (default: largest of --budgets)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--paths-csv", type=Path, help="write per-path metrics here")
    p.set_defaults(func=cmd_attack)

    for name, runner, text in (
        ("exp1", run_experiment_1, "MinPay against the baselines over the threshold grid"),
        ("exp2", run_experiment_2, "SPCR-Max against the baselines over the budget sweep"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        _add_setting_flags(p)
        p.add_argument("--formats", type=_formats, default=list(FORMATS))
        p.set_defaults(func=lambda a, r=runner: _run_experiment(a, r))

    p = sub.add_parser(
        "report", parents=[common], help="re-render outputs from a saved result JSON"
    )
    p.add_argument("result", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--formats", type=_formats, default=list(FORMATS))
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose:
        level = logging.DEBUG if args.verbose > 1 else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TopologyCalibrationFailed, OSError) as exc:
        print(f"pcncongest: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
