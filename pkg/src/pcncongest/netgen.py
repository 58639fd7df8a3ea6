"""Synthetic PCN topologies and Sybil attachment.

Base graph shapes come from networkx generators; capacities, balance splits
and Sybil funding are drawn here from a seeded numpy generator so the same
configuration always yields the same graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graph import NodeId, PcnError, PcnGraph
from .pathfind import DEFAULT_L_MAX, DEFAULT_MAX_PATHS, find_all_paths, select_paths

GRAPH_MODELS = ("preferential-attachment", "small-world", "erdos-renyi")
CAPACITY_DISTRIBUTIONS = ("exponential", "uniform")
BALANCE_SPLITS = ("uniform-random", "even")
ATTACHMENTS = ("random", "highest-degree", "highest-capacity")


class InvalidConfig(PcnError, ValueError):
    pass


class InsufficientTargets(PcnError):
    pass


class NoPathBetweenPair(PcnError):
    pass


@dataclass
class TopologyConfig:
    honest_node_count: int = 200
    graph_model: str = "preferential-attachment"
    mean_capacity: int = 4_000_000
    capacity_distribution: str = "exponential"
    balance_split: str = "uniform-random"
    rng_seed: int = 0
    # edges per new node (preferential attachment); mean degree is twice this
    attachment_edges: int = 2
    rewiring_probability: float = 0.1
    min_capacity: int = 2 * 546

    def validate(self) -> None:
        if self.honest_node_count < 2:
            raise InvalidConfig("honest_node_count must be >= 2")
        if self.mean_capacity <= 0:
            raise InvalidConfig("mean_capacity must be > 0")
        if self.graph_model not in GRAPH_MODELS:
            raise InvalidConfig(f"graph_model must be one of {GRAPH_MODELS}")
        if self.capacity_distribution not in CAPACITY_DISTRIBUTIONS:
            raise InvalidConfig(
                f"capacity_distribution must be one of {CAPACITY_DISTRIBUTIONS}"
            )
        if self.balance_split not in BALANCE_SPLITS:
            raise InvalidConfig(f"balance_split must be one of {BALANCE_SPLITS}")
        if self.attachment_edges < 1:
            raise InvalidConfig("attachment_edges must be >= 1")


@dataclass
class SybilConfig:
    pair_count: int = 6
    attachment: str = "random"
    channels_per_sybil: int = 2
    sybil_funding: int = 50_000_000
    rng_seed: int = 0

    def validate(self) -> None:
        if self.pair_count < 1:
            raise InvalidConfig("pair_count must be >= 1")
        if self.channels_per_sybil < 1:
            raise InvalidConfig("channels_per_sybil must be >= 1")
        if self.sybil_funding <= 0:
            raise InvalidConfig("sybil_funding must be > 0")
        if self.attachment not in ATTACHMENTS:
            raise InvalidConfig(f"attachment must be one of {ATTACHMENTS}")


def node_name(i: int) -> NodeId:
    return f"n{i:05d}"


def sybil_name(i: int) -> NodeId:
    return f"sybil{i:03d}"


def _base_graph(cfg: TopologyConfig, seed: int) -> nx.Graph:
    n = cfg.honest_node_count
    m = min(cfg.attachment_edges, n - 1)
    if n == 2:
        return nx.path_graph(2)
    if cfg.graph_model == "preferential-attachment":
        return nx.barabasi_albert_graph(n, m, seed=seed)
    if cfg.graph_model == "small-world":
        k = max(2, 2 * m)
        if k >= n:
            return nx.complete_graph(n)
        return nx.connected_watts_strogatz_graph(
            n, k, cfg.rewiring_probability, tries=1000, seed=seed
        )
    p = min(1.0, 2.0 * m / (n - 1))
    for attempt in range(1000):
        g = nx.gnp_random_graph(n, p, seed=seed + attempt * 7919)
        if nx.is_connected(g):
            return g
    raise InvalidConfig("could not draw a connected Erdos-Renyi graph")


def sample_capacities(cfg: TopologyConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """Integer channel capacities with mean ``cfg.mean_capacity``."""
    mean = cfg.mean_capacity
    if cfg.capacity_distribution == "exponential":
        caps = rng.exponential(mean, size)
    else:
        caps = rng.uniform(0.0, 2.0 * mean, size)
    return np.maximum(np.rint(caps), cfg.min_capacity).astype(np.int64)


def generate_topology(cfg: TopologyConfig) -> PcnGraph:
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    base_seed = int(rng.integers(2**31 - 1))
    base = _base_graph(cfg, base_seed)

    g = PcnGraph()
    for i in range(cfg.honest_node_count):
        g.add_node(node_name(i))
    edges = sorted((min(u, v), max(u, v)) for u, v in base.edges())
    caps = sample_capacities(cfg, rng, len(edges))
    if cfg.balance_split == "uniform-random":
        fractions = rng.uniform(0.0, 1.0, len(edges))
    else:
        fractions = np.full(len(edges), 0.5)
    for (u, v), cap, frac in zip(edges, caps, fractions):
        cap = int(cap)
        fund_xy = int(round(cap * float(frac)))
        g.open_channel(node_name(u), node_name(v), fund_xy, cap - fund_xy)
    return g


def _select_targets(
    graph: PcnGraph, honest: list[NodeId], cfg: SybilConfig, rng: np.random.Generator
) -> list[NodeId]:
    k = cfg.channels_per_sybil
    if cfg.attachment == "random":
        idx = rng.choice(len(honest), size=k, replace=False)
        return [honest[i] for i in sorted(idx)]
    if cfg.attachment == "highest-degree":
        ranked = sorted(honest, key=lambda v: (-graph.degree(v), v))
    else:
        ranked = sorted(
            honest,
            key=lambda v: (-sum(graph.channel(v, u).capacity for u in graph.neighbors(v)), v),
        )
    return ranked[:k]


def attach_sybils(
    graph: PcnGraph, cfg: SybilConfig
) -> list[tuple[NodeId, NodeId]]:
    """Add ``2 * pair_count`` Sybils and return the (sender, receiver) pairs.

    Senders hold the whole funding of their channels; receivers' channels are
    funded on the honest side so that payments can arrive. Honest-to-honest
    channels are never touched.
    """
    cfg.validate()
    honest = graph.honest_nodes()
    if len(honest) < cfg.channels_per_sybil:
        raise InsufficientTargets(
            f"{len(honest)} honest nodes < channels_per_sybil={cfg.channels_per_sybil}"
        )
    rng = np.random.default_rng(cfg.rng_seed)
    start = len(graph.sybil_set)
    pairs = []
    for p in range(cfg.pair_count):
        sender = sybil_name(start + 2 * p)
        receiver = sybil_name(start + 2 * p + 1)
        for sybil, outbound in ((sender, True), (receiver, False)):
            graph.add_node(sybil, sybil=True)
            for t in _select_targets(graph, honest, cfg, rng):
                if outbound:
                    graph.open_channel(sybil, t, cfg.sybil_funding, 0)
                else:
                    graph.open_channel(sybil, t, 0, cfg.sybil_funding)
        pairs.append((sender, receiver))
    return pairs


@dataclass
class PathLengthDiagnostics:
    mean: float
    max: int
    min: int
    path_count: int
    per_pair: dict[str, int] = field(default_factory=dict)
    accepted: bool = False


def calibrate_path_lengths(
    graph: PcnGraph,
    pairs: list[tuple[NodeId, NodeId]],
    target_mean: float = 6,
    target_max: int = 8,
    tolerance: float = 1.0,
    l_max: int = DEFAULT_L_MAX,
    max_paths: int = DEFAULT_MAX_PATHS,
    selection: str = "shortest",
) -> PathLengthDiagnostics:
    """Path length statistics over the attack paths of ``pairs``.

    Paths are enumerated and then narrowed per sender with ``select_paths``,
    exactly as an attack round sees them. ``accepted`` is set when the mean
    lies within ``tolerance`` of ``target_mean`` and no path is longer than
    ``target_max``.
    """
    if not pairs:
        raise ValueError("pairs must be non-empty")
    by_sender: dict[NodeId, list[NodeId]] = {}
    for a, b in pairs:
        by_sender.setdefault(a, []).append(b)
    lengths: list[int] = []
    per_pair = {}
    for a, receivers in by_sender.items():
        found = []
        for b in receivers:
            paths = find_all_paths(graph, a, b, l_max=l_max, max_paths=max_paths)
            if not paths:
                raise NoPathBetweenPair(f"{a} -> {b}")
            found.extend(paths)
        for p in select_paths(graph, found, selection):
            per_pair[p.pair_id] = per_pair.get(p.pair_id, 0) + 1
            lengths.append(p.length)
    mean = math.fsum(lengths) / len(lengths)
    diag = PathLengthDiagnostics(
        mean=mean,
        max=max(lengths),
        min=min(lengths),
        path_count=len(lengths),
        per_pair=per_pair,
    )
    diag.accepted = abs(mean - target_mean) <= tolerance and diag.max <= target_max
    return diag
