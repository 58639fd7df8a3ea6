"""Attack path enumeration and bottleneck probing.

Paths are directional: a hop ``u -> v`` is usable only while the directed
balance ``u -> v`` is positive. Enumeration is depth bounded and returns
paths shortest first, then lexicographically by hop IDs, so capping the
result at ``max_paths`` is deterministic.
"""
from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .graph import NoSuchChannel, NodeId, PcnError, PcnGraph

DEFAULT_L_MAX = 20
DEFAULT_MAX_PATHS = 100
PATH_SELECTIONS = ("shortest", "disjoint")


class BrokenPath(PcnError):
    """A channel along the path no longer exists."""


@dataclass(slots=True)
class PathRecord:
    source: NodeId
    dest: NodeId
    hops: tuple[NodeId, ...]
    bottleneck: int | None = None
    probe_time: int | None = None

    @property
    def length(self) -> int:
        return len(self.hops) - 1

    @property
    def channels(self) -> list[tuple[NodeId, NodeId]]:
        h = self.hops
        return [(h[i], h[i + 1]) for i in range(len(h) - 1)]

    @property
    def pair_id(self) -> str:
        return f"{self.source}->{self.dest}"

    def is_simple(self) -> bool:
        return len(set(self.hops)) == len(self.hops)


def hop_count(path: PathRecord) -> int:
    return path.length


def _distances_to(graph: PcnGraph, dest: NodeId, limit: int) -> dict[NodeId, int]:
    # BFS over reversed usable edges: v -> dest distance, capped at ``limit``
    dist = {dest: 0}
    queue = deque([dest])
    while queue:
        v = queue.popleft()
        d = dist[v]
        if d >= limit:
            continue
        for u in graph.neighbors(v):
            if u not in dist and graph.channel(u, v).balance(u) > 0:
                dist[u] = d + 1
                queue.append(u)
    return dist


def find_all_paths(
    graph: PcnGraph,
    source: NodeId,
    dest: NodeId,
    l_max: int = DEFAULT_L_MAX,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> list[PathRecord]:
    """Simple directed paths from ``source`` to ``dest`` with at most ``l_max`` channels.

    Enumerates exact lengths 1, 2, ... in turn, each in lexicographic DFS
    order, and stops once ``max_paths`` paths have been collected. A distance
    bound towards ``dest`` prunes prefixes that cannot finish in time.
    """
    if source == dest:
        raise ValueError("source and dest must differ")
    if not graph.has_node(source) or not graph.has_node(dest):
        raise PcnError(f"unknown endpoint in {source!r} -> {dest!r}")
    if max_paths <= 0 or l_max <= 0:
        return []

    dist = _distances_to(graph, dest, l_max)
    if source not in dist:
        return []

    # usable successor lists, restricted to nodes that can still reach dest
    succ: dict[NodeId, list[NodeId]] = {}
    for u in dist:
        succ[u] = [
            v
            for v in graph.neighbors(u)
            if v in dist and graph.channel(u, v).balance(u) > 0
        ]

    found: list[PathRecord] = []
    for depth in range(dist[source], l_max + 1):
        _collect_exact(succ, dist, source, dest, depth, max_paths, found)
        if len(found) >= max_paths:
            break
    return found


def _collect_exact(succ, dist, source, dest, depth, max_paths, found) -> None:
    path = [source]
    on_path = {source}
    # explicit stack of neighbour iterators keeps deep searches off the C stack
    stack = [iter(succ[source])]
    while stack:
        remaining = depth - (len(path) - 1)
        advanced = False
        for v in stack[-1]:
            if v in on_path:
                continue
            if v == dest:
                if remaining == 1:
                    found.append(PathRecord(source, dest, tuple(path) + (dest,)))
                    if len(found) >= max_paths:
                        return
                continue
            if dist[v] > remaining - 1:
                continue
            path.append(v)
            on_path.add(v)
            stack.append(iter(succ[v]))
            advanced = True
            break
        if not advanced:
            stack.pop()
            on_path.discard(path.pop())


def probe(
    graph: PcnGraph,
    path: PathRecord,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> int:
    """Bottleneck balance along ``path``, stored on the record.

    With ``noise > 0`` the true minimum is scaled by a factor drawn from
    ``[1 - noise, 1]``, so the estimate never exceeds the truth.
    """
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must lie in [0, 1], got {noise}")
    hops = path.hops
    low = None
    for i in range(len(hops) - 1):
        try:
            b = graph.channel(hops[i], hops[i + 1]).balance(hops[i])
        except NoSuchChannel:
            raise BrokenPath((hops[i], hops[i + 1])) from None
        if low is None or b < low:
            low = b
    if low is None:
        raise BrokenPath(hops)
    if noise > 0.0:
        rng = rng if rng is not None else np.random.default_rng()
        low = int(low * rng.uniform(1.0 - noise, 1.0))
    path.bottleneck = low
    path.probe_time = graph.block_height
    return low


def select_paths(
    graph: PcnGraph, paths: Iterable[PathRecord], selection: str = "shortest"
) -> list[PathRecord]:
    """Subset of ``paths`` an attacker plans over.

    ``shortest`` keeps everything. ``disjoint`` walks the paths in order and
    keeps a path only if none of its honest-to-honest channels is used by a
    path kept earlier; channels touching a Sybil may be shared.
    """
    if selection not in PATH_SELECTIONS:
        raise ValueError(f"selection must be one of {PATH_SELECTIONS}")
    paths = list(paths)
    if selection == "shortest":
        return paths
    sybils = graph.sybil_set
    used: set[tuple[NodeId, NodeId]] = set()
    kept = []
    for p in paths:
        honest = [
            (u, v) if u < v else (v, u)
            for u, v in p.channels
            if u not in sybils and v not in sybils
        ]
        if any(c in used for c in honest):
            continue
        used.update(honest)
        kept.append(p)
    return kept


@dataclass
class PathSet:
    """All attack paths of a round, grouped by ordered attacker pair."""

    paths: list[PathRecord] = field(default_factory=list)
    l_max: int = DEFAULT_L_MAX

    def by_pair(self) -> dict[str, list[PathRecord]]:
        out: dict[str, list[PathRecord]] = {}
        for p in self.paths:
            out.setdefault(p.pair_id, []).append(p)
        return out

    def extend(self, paths: Iterable[PathRecord]) -> None:
        for p in paths:
            if p.length > self.l_max:
                raise ValueError(f"path of length {p.length} exceeds L_max={self.l_max}")
            self.paths.append(p)

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", "path_index", "length", "bottleneck", "hops"])
        for pair_id, group in self.by_pair().items():
            for idx, p in enumerate(group):
                w.writerow(
                    [
                        pair_id,
                        idx,
                        p.length,
                        "" if p.bottleneck is None else p.bottleneck,
                        ";".join(p.hops),
                    ]
                )

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()
