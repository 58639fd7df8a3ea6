"""HTLC lifecycle along attack paths: lock, withhold, fail at expiry.

Each hop of a locked path holds one pending HTLC. Hop ``i`` (0-indexed from
the sender) locks ``amount - i * fee``; a failed HTLC refunds its own channel
in full, so fees never leave a channel unless the HTLC is fulfilled.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import secrets
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .graph import NodeId, PcnError, PcnGraph
from .pathfind import PathRecord

CLTV_DELTAS = (14, 40, 144)
DUST_LIMIT = 546


class HtlcError(PcnError):
    def __init__(self, hop: int, message: str = ""):
        self.hop = hop
        super().__init__(f"hop {hop}: {message}" if message else f"hop {hop}")


class InsufficientBalance(HtlcError):
    pass


class SlotsExhausted(HtlcError):
    pass


class BelowDust(HtlcError):
    pass


class PreimageMismatch(PcnError):
    pass


class HtlcState(enum.Enum):
    PENDING = "pending"
    FAILED = "failed"
    FULFILLED = "fulfilled"


@dataclass(slots=True)
class Htlc:
    id: str
    channel: tuple[NodeId, NodeId]
    amount: int
    payment_hash: str
    expiry: int
    hop_index: int = 0
    state: HtlcState = HtlcState.PENDING


@dataclass(frozen=True)
class FeePolicy:
    flat_fee_per_hop: int = 0

    def __post_init__(self):
        if self.flat_fee_per_hop < 0:
            raise ValueError("fee must be >= 0")


@dataclass
class HtlcEventLog:
    rows: list[tuple[int, str, str, int, str]] = field(default_factory=list)

    def record(self, height: int, event: str, htlc: Htlc) -> None:
        a, b = htlc.channel
        self.rows.append((height, event, f"{a}->{b}", htlc.amount, htlc.id))

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block_height", "event", "channel", "amount", "htlc_id"])
        w.writerows(self.rows)


def payment_hash(preimage: bytes) -> str:
    return hashlib.sha256(preimage).hexdigest()


def _hops_of(path: PathRecord | Sequence[NodeId]) -> tuple[NodeId, ...]:
    return path.hops if isinstance(path, PathRecord) else tuple(path)


def lock_path(
    graph: PcnGraph,
    path: PathRecord | Sequence[NodeId],
    amount: int,
    expiry: int,
    fees: FeePolicy = FeePolicy(),
    cltv_delta: int = 0,
    preimage: bytes | None = None,
    log: HtlcEventLog | None = None,
) -> list[Htlc]:
    """Lock ``amount`` along ``path`` with one pending HTLC per channel.

    All hops are validated before any balance moves, so a failure leaves the
    graph untouched. Hop ``i`` expires at ``expiry + (L - 1 - i) * cltv_delta``.
    """
    hops = _hops_of(path)
    n = len(hops) - 1
    if n < 1:
        raise ValueError("path needs at least one channel")
    amount = int(amount)
    fee = fees.flat_fee_per_hop
    chans = []
    for i in range(n):
        ch = graph.channel(hops[i], hops[i + 1])
        amt = amount - i * fee
        if amt <= 0 or amt < ch.htlc_minimum:
            raise BelowDust(i, f"{amt} < htlc_minimum {ch.htlc_minimum}")
        if ch.balance(hops[i]) < amt:
            raise InsufficientBalance(i, f"{amt} > balance {ch.balance(hops[i])}")
        if ch.pending(hops[i]) >= ch.max_accepted_htlcs:
            raise SlotsExhausted(i, f"{ch.max_accepted_htlcs} slots in use")
        chans.append((ch, amt))

    if preimage is None:
        preimage = secrets.token_bytes(32)
    digest = payment_hash(preimage)
    out = []
    for i, (ch, amt) in enumerate(chans):
        ch._lock(hops[i], amt)
        h = Htlc(
            id=graph.next_htlc_id(),
            channel=(hops[i], hops[i + 1]),
            amount=amt,
            payment_hash=digest,
            expiry=expiry + (n - 1 - i) * cltv_delta,
            hop_index=i,
        )
        out.append(h)
        if log is not None:
            log.record(graph.block_height, "create", h)
    return out


def fail_htlc(graph: PcnGraph, htlc: Htlc, log: HtlcEventLog | None = None) -> None:
    if htlc.state is not HtlcState.PENDING:
        return
    frm, to = htlc.channel
    graph.channel(frm, to)._release(frm, htlc.amount, settle=False)
    htlc.state = HtlcState.FAILED
    if log is not None:
        log.record(graph.block_height, "fail", htlc)


def fulfill_htlc(
    graph: PcnGraph, htlc: Htlc, preimage: bytes, log: HtlcEventLog | None = None
) -> None:
    """Settle a pending HTLC to its receiver once the preimage checks out."""
    if htlc.state is not HtlcState.PENDING:
        raise PcnError(f"{htlc.id} is {htlc.state.value}")
    if payment_hash(preimage) != htlc.payment_hash:
        raise PreimageMismatch(htlc.id)
    frm, to = htlc.channel
    graph.channel(frm, to)._release(frm, htlc.amount, settle=True)
    htlc.state = HtlcState.FULFILLED
    if log is not None:
        log.record(graph.block_height, "fulfill", htlc)


def withhold_and_expire(
    graph: PcnGraph,
    htlcs: Iterable[Htlc],
    advance_to: int,
    log: HtlcEventLog | None = None,
) -> list[Htlc]:
    """Advance the clock and fail every pending HTLC whose expiry has passed.

    Returns the HTLCs that failed during this call; already failed ones are
    left alone, which makes repeated calls idempotent.
    """
    graph.advance_block_height(max(advance_to, graph.block_height))
    height = graph.block_height
    failed = []
    for h in htlcs:
        if h.state is HtlcState.PENDING and h.expiry <= height:
            fail_htlc(graph, h, log)
            failed.append(h)
    return failed


def slot_saturation(
    graph: PcnGraph,
    path: PathRecord | Sequence[NodeId],
    count: int,
    dust_amount: int = DUST_LIMIT,
    expiry: int | None = None,
    log: HtlcEventLog | None = None,
) -> list[Htlc]:
    """Send up to ``count`` dust payments along ``path``.

    Stops at the first payment that no longer fits, normally because some
    direction has reached its ``max_accepted_htlcs``.
    """
    hops = _hops_of(path)
    tightest = min(
        graph.channel(hops[i], hops[i + 1]).htlc_minimum for i in range(len(hops) - 1)
    )
    if dust_amount < tightest:
        raise ValueError(f"dust_amount {dust_amount} below htlc_minimum")
    if expiry is None:
        expiry = graph.block_height + CLTV_DELTAS[1]
    created: list[Htlc] = []
    for k in range(count):
        try:
            created.extend(
                lock_path(graph, hops, dust_amount, expiry,
                          preimage=k.to_bytes(32, "big"), log=log)
            )
        except (SlotsExhausted, InsufficientBalance):
            break
    return created
