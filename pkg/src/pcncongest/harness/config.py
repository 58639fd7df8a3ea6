"""Experiment configuration, INI config files and seed substreams.

Config files are INI documents with three flat sections; every key is
optional and mirrors a field below::

    [topology]
    honest_node_count = 200
    graph_model = preferential-attachment
    mean_capacity = 4000000
    capacity_distribution = exponential
    balance_split = uniform-random
    attachment_edges = 2
    rewiring_probability = 0.1

    [sybil]
    pair_count = 6
    attachment = random
    channels_per_sybil = 2
    sybil_funding = 50000000

    [experiment]
    l_max = 20
    max_hops = 8
    max_paths = 100
    path_selection = disjoint
    budgets = 75000000, 100000000
    threshold_grid = 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9
    budget_sweep = 10000000, 15337099, ...
    iterations = 200
    strategies = minpay, spcr-max, random, general
    seed = 0
    output_dir = results
    probe_noise = 0.0
    reprobe = true
    budget_scope = attacker
    cltv_delta = 40
    target_mean_length = 6
    target_max_length = 8
    length_tolerance = 1.0
    max_topology_attempts = 100
    verify_lifecycle = true
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..netgen import SybilConfig, TopologyConfig
from ..pathfind import PATH_SELECTIONS
from ..planner.allocators import STRATEGIES
from ..planner.rounds import BUDGET_SCOPES

WORKERS_ENV = "PCNCONGEST_WORKERS"

# substream purposes; append only, never reorder
PURPOSES = {"topology": 0, "sybil": 1, "random-planner": 2, "probe": 3, "htlc": 4}


class ConfigError(ValueError):
    pass


def default_budget_sweep() -> list[int]:
    return [int(round(v)) for v in np.geomspace(1e7, 2e8, 8)]


def default_threshold_grid() -> list[float]:
    return [round(0.1 * i, 10) for i in range(1, 10)]


@dataclass
class ExperimentConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    sybil: SybilConfig = field(default_factory=SybilConfig)
    l_max: int = 20
    max_hops: int = 8
    max_paths: int = 100
    path_selection: str = "disjoint"
    budgets: list[int] = field(default_factory=lambda: [75_000_000, 100_000_000])
    threshold_grid: list[float] = field(default_factory=default_threshold_grid)
    budget_sweep: list[int] = field(default_factory=default_budget_sweep)
    iterations: int = 200
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    seed: int = 0
    output_dir: str = "results"
    probe_noise: float = 0.0
    reprobe: bool = True
    budget_scope: str = "attacker"
    cltv_delta: int = 40
    target_mean_length: float = 6.0
    target_max_length: int = 8
    length_tolerance: float = 1.0
    max_topology_attempts: int = 100
    verify_lifecycle: bool = True

    @property
    def pair_count(self) -> int:
        return self.sybil.pair_count

    def validate(self) -> None:
        try:
            self.topology.validate()
            self.sybil.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}")
        if any(not 0.0 <= t <= 1.0 for t in self.threshold_grid):
            raise ConfigError("thresholds must lie in [0, 1]")
        if any(b <= 0 for b in self.budgets) or any(b <= 0 for b in self.budget_sweep):
            raise ConfigError("budgets must be > 0")
        if not 1 <= self.max_hops <= self.l_max:
            raise ConfigError("need 1 <= max_hops <= l_max")
        if self.max_paths < 1:
            raise ConfigError("max_paths must be >= 1")
        if self.path_selection not in PATH_SELECTIONS:
            raise ConfigError(f"path_selection must be one of {PATH_SELECTIONS}")
        if self.budget_scope not in BUDGET_SCOPES:
            raise ConfigError(f"budget_scope must be one of {BUDGET_SCOPES}")
        if not 0.0 <= self.probe_noise <= 1.0:
            raise ConfigError("probe_noise must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> ExperimentConfig:
        doc = dict(doc)
        topo = TopologyConfig(**doc.pop("topology", {}))
        syb = SybilConfig(**doc.pop("sybil", {}))
        return cls(topology=topo, sybil=syb, **doc)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir", None)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def substream_seed(root: int, iteration: int, purpose: str, *extra: int) -> int:
    """Independent 32-bit seed for one (iteration, purpose) substream."""
    ss = np.random.SeedSequence(root, spawn_key=(iteration, PURPOSES[purpose], *extra))
    return int(ss.generate_state(1)[0])


# --- parsing --------------------------------------------------------------

def _parse_bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_list(text: str, item) -> list:
    parts = [p.strip() for p in text.replace(";", ",").split(",")]
    return [item(p) for p in parts if p]


def _to_int(text: str) -> int:
    # accept 75e6 style
    v = float(text)
    if v != int(v):
        raise ConfigError(f"not a whole number: {text!r}")
    return int(v)


def _coerce(value: str, current: Any, name: str):
    try:
        if isinstance(current, bool):
            return _parse_bool(value)
        if isinstance(current, int):
            return _to_int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, list):
            if name in ("budgets", "budget_sweep"):
                return _parse_list(value, _to_int)
            if name == "threshold_grid":
                return _parse_list(value, float)
            return _parse_list(value, str)
        return value.strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


SECTIONS = ("topology", "sybil", "experiment")


def apply_setting(cfg: ExperimentConfig, section: str, key: str, value: str) -> None:
    target = {"topology": cfg.topology, "sybil": cfg.sybil, "experiment": cfg}.get(section)
    if target is None:
        raise ConfigError(f"unknown section [{section}]")
    names = {f.name for f in dataclasses.fields(target)}
    if key not in names or (section == "experiment" and key in ("topology", "sybil")):
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    setattr(target, key, _coerce(value, getattr(target, key), key))


def find_section(cfg: ExperimentConfig, key: str) -> str:
    for section, obj in (("experiment", cfg), ("topology", cfg.topology), ("sybil", cfg.sybil)):
        if key in {f.name for f in dataclasses.fields(obj)} and key not in ("topology", "sybil"):
            return section
    raise ConfigError(f"unknown setting {key!r}")


def load_config(path: str | Path, cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = cfg if cfg is not None else ExperimentConfig()
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, value in parser.items(section):
            apply_setting(cfg, section, key, value)
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    def render(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, list):
            return ", ".join(str(x) for x in v)
        return str(v)

    lines = []
    for section, obj in (("topology", cfg.topology), ("sybil", cfg.sybil), ("experiment", cfg)):
        lines.append(f"[{section}]")
        for f in dataclasses.fields(obj):
            if f.name in ("topology", "sybil"):
                continue
            lines.append(f"{f.name} = {render(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)
