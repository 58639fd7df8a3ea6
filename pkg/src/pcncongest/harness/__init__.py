"""Experiment harness: configuration, runners, reports and the CLI."""
from __future__ import annotations

from .config import ConfigError, ExperimentConfig, dump_config, load_config, substream_seed
from .experiments import (
    Point,
    RunResult,
    TopologyCalibrationFailed,
    build_network,
    run_experiment_1,
    run_experiment_2,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Point",
    "RunResult",
    "TopologyCalibrationFailed",
    "build_network",
    "dump_config",
    "load_config",
    "run_experiment_1",
    "run_experiment_2",
    "substream_seed",
]
