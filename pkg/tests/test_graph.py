from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcncongest.graph import (
    DuplicateChannel,
    DuplicateEndpoint,
    DuplicateNode,
    InvalidAmount,
    NoSuchChannel,
    PcnError,
    PcnGraph,
    UnknownNode,
    dump_graph,
    load_graph,
    restore,
    snapshot,
)
from pcncongest.htlc import lock_path

from .conftest import balances_of, line_graph


def test_open_channel_tracks_both_directions():
    g = PcnGraph()
    g.add_node("b")
    g.add_node("a")
    ch = g.open_channel("b", "a", 7, 3)
    assert g.directed_balance("b", "a") == 7
    assert g.directed_balance("a", "b") == 3
    assert ch.capacity == 10
    # stored under the sorted key regardless of call order
    assert (ch.x, ch.y) == ("a", "b")
    assert g.neighbors("a") == ["b"]


@pytest.mark.parametrize(
    "args, exc",
    [
        (("a", "a", 1, 1), DuplicateEndpoint),
        (("a", "zz", 1, 1), UnknownNode),
        (("a", "b", -1, 5), InvalidAmount),
        (("a", "b", 0, 0), InvalidAmount),
    ],
)
def test_open_channel_rejects_bad_input(args, exc):
    g = PcnGraph()
    g.add_node("a")
    g.add_node("b")
    with pytest.raises(exc):
        g.open_channel(*args)


def test_duplicates_rejected():
    g, _ = line_graph([5])
    with pytest.raises(DuplicateNode):
        g.add_node("n0")
    with pytest.raises(DuplicateChannel):
        g.open_channel("n1", "n0", 1, 1)
    with pytest.raises(NoSuchChannel):
        g.channel("n0", "n9")


def test_neighbors_sorted_and_degree():
    g = PcnGraph()
    for n in "dcab":
        g.add_node(n)
    for n in "dcb":
        g.open_channel("a", n, 1, 1)
    assert g.neighbors("a") == ["b", "c", "d"]
    assert g.degree("a") == 3


def test_block_height_is_monotone():
    g = PcnGraph()
    g.advance_block_height(10)
    with pytest.raises(ValueError):
        g.advance_block_height(9)


def test_json_round_trip_with_pairs(tmp_path):
    g, _ = line_graph([5, 6], reverse=[1, 2])
    g.add_node("s0", sybil=True)
    g.open_channel("s0", "n0", 100, 0)
    path = tmp_path / "g.json"
    dump_graph(g, path, [("s0", "n2")])
    doc = json.loads(path.read_text())
    assert set(doc) == {"nodes", "channels", "sybils", "pairs"}
    assert doc["channels"][0].keys() == {
        "x", "y", "balance_xy", "balance_yx", "max_accepted_htlcs", "htlc_minimum"
    }
    g2, pairs = load_graph(path)
    assert pairs == [("s0", "n2")]
    assert g2.sybil_set == {"s0"}
    assert g2.to_dict() == g.to_dict()


def test_export_refuses_pending_htlcs():
    g, hops = line_graph([5000, 5000])
    lock_path(g, hops, 1000, expiry=40)
    with pytest.raises(PcnError):
        g.to_dict()


def test_snapshot_restore_is_independent():
    g, hops = line_graph([5000, 5000])
    snap = snapshot(g)
    before = balances_of(g)
    lock_path(g, hops, 1000, expiry=40)
    assert balances_of(g) != before
    g2 = restore(snap)
    assert balances_of(g2) == before
    assert g2.block_height == g.block_height


@given(
    st.lists(
        st.tuples(st.integers(0, 10**9), st.integers(0, 10**9)).filter(lambda t: sum(t) > 0),
        min_size=1,
        max_size=12,
    )
)
def test_json_round_trip_property(funds):
    g, _ = line_graph([f for f, _ in funds], reverse=[b for _, b in funds])
    doc = g.to_dict()
    assert PcnGraph.from_dict(json.loads(json.dumps(doc))).to_dict() == doc
    assert g.check_conservation()
