from __future__ import annotations

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcncongest.graph import restore, snapshot
from pcncongest.htlc import (
    CLTV_DELTAS,
    DUST_LIMIT,
    BelowDust,
    FeePolicy,
    HtlcEventLog,
    HtlcState,
    InsufficientBalance,
    PreimageMismatch,
    SlotsExhausted,
    fulfill_htlc,
    lock_path,
    slot_saturation,
    withhold_and_expire,
)

from .conftest import balances_of, line_graph


def test_coin_ladder_path_locks_twelve_coins(coin_ladder_path):
    g, hops = coin_ladder_path
    htlcs = lock_path(g, hops, 5, expiry=40, fees=FeePolicy(1))
    assert [h.amount for h in htlcs] == [5, 4, 3]
    assert g.total_locked() == 12
    # every channel is drained in the forward direction
    assert [g.directed_balance(hops[i], hops[i + 1]) for i in range(3)] == [0, 0, 0]


def test_zero_fee_locks_length_times_amount():
    g, hops = line_graph([10_000] * 6)
    lock_path(g, hops, 2_000, expiry=40)
    assert g.total_locked() == 6 * 2_000


def test_below_dust_names_the_hop():
    g, hops = line_graph([10_000] * 3)
    with pytest.raises(BelowDust) as err:
        lock_path(g, hops, DUST_LIMIT - 1, expiry=40)
    assert err.value.hop == 0
    # fees push a later hop under the minimum
    with pytest.raises(BelowDust) as err:
        lock_path(g, hops, DUST_LIMIT + 1, expiry=40, fees=FeePolicy(1))
    assert err.value.hop == 2


def test_failed_lock_leaves_graph_untouched():
    g, hops = line_graph([10_000, 10_000, 999])
    before = balances_of(g)
    seq = g._htlc_seq
    with pytest.raises(InsufficientBalance) as err:
        lock_path(g, hops, 1_000, expiry=40)
    assert err.value.hop == 2
    assert balances_of(g) == before
    assert g._htlc_seq == seq


def test_expire_restores_balances_exactly():
    g, hops = line_graph([5_000, 6_000, 7_000], reverse=[1, 2, 3])
    before = balances_of(g)
    htlcs = lock_path(g, hops, 4_000, expiry=40, fees=FeePolicy(10))
    assert withhold_and_expire(g, htlcs, 39) == []
    assert all(h.state is HtlcState.PENDING for h in htlcs)
    assert g.total_locked() > 0
    failed = withhold_and_expire(g, htlcs, 40)
    assert failed == htlcs
    assert balances_of(g) == before
    # second call is a no-op
    assert withhold_and_expire(g, htlcs, 40) == []
    assert balances_of(g) == before


def test_per_hop_expiry_grows_towards_the_sender():
    g, hops = line_graph([10_000] * 4)
    htlcs = lock_path(g, hops, 1_000, expiry=100, cltv_delta=CLTV_DELTAS[0])
    assert [h.expiry for h in htlcs] == [142, 128, 114, 100]


def test_fulfill_pays_receiver_side_and_checks_preimage():
    g, hops = line_graph([10_000])
    (h,) = lock_path(g, hops, 1_000, expiry=40, preimage=b"x" * 32)
    with pytest.raises(PreimageMismatch):
        fulfill_htlc(g, h, b"y" * 32)
    fulfill_htlc(g, h, b"x" * 32)
    assert h.state is HtlcState.FULFILLED
    assert g.directed_balance("n1", "n0") == 1_000
    assert g.directed_balance("n0", "n1") == 9_000
    assert withhold_and_expire(g, [h], 100) == []


def test_slot_saturation_stops_at_483():
    g, hops = line_graph([10**9, 10**9])
    created = slot_saturation(g, hops, 500, dust_amount=DUST_LIMIT)
    assert len(created) == 2 * 483
    for ch in g.channels.values():
        assert ch.pending_htlcs_xy == 483
    with pytest.raises(SlotsExhausted):
        lock_path(g, hops, DUST_LIMIT, expiry=40)


def test_slot_saturation_edge_cases():
    g, hops = line_graph([10**6])
    assert slot_saturation(g, hops, 0) == []
    with pytest.raises(ValueError):
        slot_saturation(g, hops, 1, dust_amount=DUST_LIMIT - 1)
    # balance runs out before the slots do
    g, hops = line_graph([DUST_LIMIT * 3 + 10])
    assert len(slot_saturation(g, hops, 10)) == 3


def test_event_log_csv():
    log = HtlcEventLog()
    g, hops = line_graph([10_000, 10_000])
    htlcs = lock_path(g, hops, 1_000, expiry=40, log=log)
    withhold_and_expire(g, htlcs, 40, log=log)
    text = io.StringIO()
    log.write_csv(text)
    lines = text.getvalue().splitlines()
    assert lines[0] == "block_height,event,channel,amount,htlc_id"
    assert [line.split(",")[1] for line in lines[1:]] == ["create", "create", "fail", "fail"]
    assert lines[1] == f"0,create,n0->n1,1000,{htlcs[0].id}"


def test_fee_policy_rejects_negative():
    with pytest.raises(ValueError):
        FeePolicy(-1)


@given(
    balances=st.lists(st.integers(0, 50_000), min_size=1, max_size=6),
    amounts=st.lists(st.integers(0, 20_000), min_size=1, max_size=8),
    fee=st.integers(0, 50),
)
def test_lifecycle_conserves_balances(balances, amounts, fee):
    g, hops = line_graph(balances, reverse=[1] * len(balances))
    snap = snapshot(g)
    before = balances_of(g)
    htlcs = []
    for a in amounts:
        pre = balances_of(g)
        try:
            got = lock_path(g, hops, a, expiry=40, fees=FeePolicy(fee))
        except (BelowDust, InsufficientBalance):
            assert balances_of(g) == pre
            continue
        htlcs.extend(got)
        if fee == 0:
            assert sum(h.amount for h in got) == len(balances) * a
        assert g.check_conservation()
    withhold_and_expire(g, htlcs, 40)
    assert balances_of(g) == before
    assert g.to_dict() == restore(snap).to_dict()
