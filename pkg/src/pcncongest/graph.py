"""Directed payment-channel network model.

A channel is stored once per unordered node pair and exposes two independent
directed balances. Funds locked in pending HTLCs are tracked per direction so
that ``capacity == balance_xy + balance_yx + locked_xy + locked_yx`` holds at
every point of an HTLC lifecycle.

All amounts are integer satoshi.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

NodeId = str

DEFAULT_MAX_ACCEPTED_HTLCS = 483
DEFAULT_HTLC_MINIMUM = 546


class PcnError(Exception):
    """Base class for network model errors."""


class UnknownNode(PcnError, KeyError):
    pass


class DuplicateNode(PcnError, ValueError):
    pass


class DuplicateChannel(PcnError, ValueError):
    pass


class DuplicateEndpoint(PcnError, ValueError):
    """Both channel endpoints are the same node."""


class NoSuchChannel(PcnError, KeyError):
    pass


class InvalidAmount(PcnError, ValueError):
    pass


def _pair_key(a: NodeId, b: NodeId) -> tuple[NodeId, NodeId]:
    return (a, b) if a <= b else (b, a)


@dataclass(slots=True)
class ChannelState:
    x: NodeId
    y: NodeId
    balance_xy: int
    balance_yx: int
    capacity: int
    max_accepted_htlcs: int = DEFAULT_MAX_ACCEPTED_HTLCS
    htlc_minimum: int = DEFAULT_HTLC_MINIMUM
    locked_xy: int = 0
    locked_yx: int = 0
    pending_htlcs_xy: int = 0
    pending_htlcs_yx: int = 0

    @property
    def endpoints(self) -> tuple[NodeId, NodeId]:
        return (self.x, self.y)

    def balance(self, frm: NodeId) -> int:
        """Spendable balance in the direction leaving ``frm``."""
        if frm == self.x:
            return self.balance_xy
        if frm == self.y:
            return self.balance_yx
        raise UnknownNode(frm)

    def pending(self, frm: NodeId) -> int:
        if frm == self.x:
            return self.pending_htlcs_xy
        if frm == self.y:
            return self.pending_htlcs_yx
        raise UnknownNode(frm)

    def locked(self, frm: NodeId | None = None) -> int:
        if frm is None:
            return self.locked_xy + self.locked_yx
        if frm == self.x:
            return self.locked_xy
        if frm == self.y:
            return self.locked_yx
        raise UnknownNode(frm)

    def is_conserved(self) -> bool:
        return (
            self.balance_xy >= 0
            and self.balance_yx >= 0
            and self.balance_xy + self.balance_yx + self.locked_xy + self.locked_yx
            == self.capacity
        )

    # Low-level directional mutators, used by the HTLC engine. Callers are
    # responsible for validating amounts first; these only keep the
    # bookkeeping consistent.
    def _lock(self, frm: NodeId, amount: int) -> None:
        if frm == self.x:
            self.balance_xy -= amount
            self.locked_xy += amount
            self.pending_htlcs_xy += 1
        else:
            self.balance_yx -= amount
            self.locked_yx += amount
            self.pending_htlcs_yx += 1

    def _release(self, frm: NodeId, amount: int, settle: bool) -> None:
        # settle=False refunds the sender side, settle=True pays the receiver side
        if frm == self.x:
            self.locked_xy -= amount
            self.pending_htlcs_xy -= 1
            if settle:
                self.balance_yx += amount
            else:
                self.balance_xy += amount
        else:
            self.locked_yx -= amount
            self.pending_htlcs_yx -= 1
            if settle:
                self.balance_xy += amount
            else:
                self.balance_yx += amount


@dataclass(frozen=True)
class GraphSnapshot:
    """Immutable copy of a graph's mutable state."""

    nodes: tuple[NodeId, ...]
    channels: tuple[tuple, ...]
    block_height: int
    sybil_set: frozenset[NodeId]
    htlc_seq: int


@dataclass
class PcnGraph:
    nodes: set[NodeId] = field(default_factory=set)
    channels: dict[tuple[NodeId, NodeId], ChannelState] = field(default_factory=dict)
    block_height: int = 0
    sybil_set: set[NodeId] = field(default_factory=set)
    _adj: dict[NodeId, list[NodeId]] = field(default_factory=dict, repr=False)
    _htlc_seq: int = field(default=0, repr=False)

    def add_node(self, node: NodeId, sybil: bool = False) -> None:
        if node in self.nodes:
            raise DuplicateNode(node)
        self.nodes.add(node)
        self._adj[node] = []
        if sybil:
            self.sybil_set.add(node)

    def has_node(self, node: NodeId) -> bool:
        return node in self.nodes

    def open_channel(
        self,
        x: NodeId,
        y: NodeId,
        fund_xy: int,
        fund_yx: int,
        max_accepted_htlcs: int = DEFAULT_MAX_ACCEPTED_HTLCS,
        htlc_minimum: int = DEFAULT_HTLC_MINIMUM,
    ) -> ChannelState:
        if x == y:
            raise DuplicateEndpoint(x)
        for node in (x, y):
            if node not in self.nodes:
                raise UnknownNode(node)
        key = _pair_key(x, y)
        if key in self.channels:
            raise DuplicateChannel(key)
        fund_xy, fund_yx = int(fund_xy), int(fund_yx)
        if fund_xy < 0 or fund_yx < 0 or fund_xy + fund_yx <= 0:
            raise InvalidAmount((fund_xy, fund_yx))
        if key[0] != x:
            x, y, fund_xy, fund_yx = y, x, fund_yx, fund_xy
        ch = ChannelState(
            x=x,
            y=y,
            balance_xy=fund_xy,
            balance_yx=fund_yx,
            capacity=fund_xy + fund_yx,
            max_accepted_htlcs=max_accepted_htlcs,
            htlc_minimum=htlc_minimum,
        )
        self.channels[key] = ch
        _insort(self._adj[x], y)
        _insort(self._adj[y], x)
        return ch

    def channel(self, a: NodeId, b: NodeId) -> ChannelState:
        try:
            return self.channels[_pair_key(a, b)]
        except KeyError:
            raise NoSuchChannel((a, b)) from None

    def has_channel(self, a: NodeId, b: NodeId) -> bool:
        return _pair_key(a, b) in self.channels

    def directed_balance(self, frm: NodeId, to: NodeId) -> int:
        return self.channel(frm, to).balance(frm)

    def neighbors(self, node: NodeId) -> list[NodeId]:
        """Channel peers of ``node`` in sorted order."""
        try:
            return self._adj[node]
        except KeyError:
            raise UnknownNode(node) from None

    def degree(self, node: NodeId) -> int:
        return len(self.neighbors(node))

    def honest_nodes(self) -> list[NodeId]:
        return sorted(self.nodes - self.sybil_set)

    def iter_channels(self) -> Iterator[ChannelState]:
        for key in sorted(self.channels):
            yield self.channels[key]

    def advance_block_height(self, height: int) -> None:
        if height < self.block_height:
            raise ValueError(
                f"block height cannot decrease ({self.block_height} -> {height})"
            )
        self.block_height = height

    def next_htlc_id(self) -> str:
        self._htlc_seq += 1
        return f"htlc-{self._htlc_seq:07d}"

    def total_locked(self) -> int:
        return sum(ch.locked() for ch in self.channels.values())

    def check_conservation(self) -> bool:
        return all(ch.is_conserved() for ch in self.channels.values())

    def copy(self) -> PcnGraph:
        return restore(snapshot(self))

    # --- JSON -----------------------------------------------------------

    def to_dict(self, pairs: Iterable[tuple[NodeId, NodeId]] | None = None) -> dict:
        if any(ch.pending_htlcs_xy or ch.pending_htlcs_yx for ch in self.channels.values()):
            raise PcnError("cannot export a graph with pending HTLCs")
        doc: dict = {
            "nodes": [{"id": n} for n in sorted(self.nodes)],
            "channels": [
                {
                    "x": ch.x,
                    "y": ch.y,
                    "balance_xy": ch.balance_xy,
                    "balance_yx": ch.balance_yx,
                    "max_accepted_htlcs": ch.max_accepted_htlcs,
                    "htlc_minimum": ch.htlc_minimum,
                }
                for ch in self.iter_channels()
            ],
        }
        if self.sybil_set:
            doc["sybils"] = sorted(self.sybil_set)
        if pairs is not None:
            doc["pairs"] = [[a, b] for a, b in pairs]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> PcnGraph:
        g = cls()
        sybils = set(doc.get("sybils", ()))
        for node in doc["nodes"]:
            g.add_node(str(node["id"]), sybil=str(node["id"]) in sybils)
        for ch in doc["channels"]:
            g.open_channel(
                str(ch["x"]),
                str(ch["y"]),
                ch["balance_xy"],
                ch["balance_yx"],
                max_accepted_htlcs=ch.get("max_accepted_htlcs", DEFAULT_MAX_ACCEPTED_HTLCS),
                htlc_minimum=ch.get("htlc_minimum", DEFAULT_HTLC_MINIMUM),
            )
        return g


def _insort(seq: list[NodeId], item: NodeId) -> None:
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if seq[mid] < item:
            lo = mid + 1
        else:
            hi = mid
    seq.insert(lo, item)


def open_channel(
    graph: PcnGraph, x: NodeId, y: NodeId, fund_xy: int, fund_yx: int, **policy
) -> ChannelState:
    return graph.open_channel(x, y, fund_xy, fund_yx, **policy)


def directed_balance(graph: PcnGraph, frm: NodeId, to: NodeId) -> int:
    return graph.directed_balance(frm, to)


def snapshot(graph: PcnGraph) -> GraphSnapshot:
    chans = tuple(
        (
            ch.x,
            ch.y,
            ch.balance_xy,
            ch.balance_yx,
            ch.capacity,
            ch.max_accepted_htlcs,
            ch.htlc_minimum,
            ch.locked_xy,
            ch.locked_yx,
            ch.pending_htlcs_xy,
            ch.pending_htlcs_yx,
        )
        for ch in graph.iter_channels()
    )
    return GraphSnapshot(
        nodes=tuple(sorted(graph.nodes)),
        channels=chans,
        block_height=graph.block_height,
        sybil_set=frozenset(graph.sybil_set),
        htlc_seq=graph._htlc_seq,
    )


def restore(snap: GraphSnapshot) -> PcnGraph:
    g = PcnGraph()
    g.nodes = set(snap.nodes)
    g._adj = {n: [] for n in snap.nodes}
    for row in snap.channels:
        ch = ChannelState(*row)
        g.channels[(ch.x, ch.y)] = ch
        g._adj[ch.x].append(ch.y)
        g._adj[ch.y].append(ch.x)
    for peers in g._adj.values():
        peers.sort()
    g.block_height = snap.block_height
    g.sybil_set = set(snap.sybil_set)
    g._htlc_seq = snap.htlc_seq
    return g


def load_graph(path: str | Path) -> tuple[PcnGraph, list[tuple[NodeId, NodeId]]]:
    """Read a graph JSON document; also returns attacker pairs if present."""
    doc = json.loads(Path(path).read_text())
    pairs = [(str(a), str(b)) for a, b in doc.get("pairs", [])]
    return PcnGraph.from_dict(doc), pairs


def dump_graph(
    graph: PcnGraph,
    path: str | Path,
    pairs: Iterable[tuple[NodeId, NodeId]] | None = None,
) -> None:
    text = json.dumps(graph.to_dict(pairs), indent=1, sort_keys=False)
    Path(path).write_text(text + "\n")
