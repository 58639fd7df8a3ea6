"""Congestion attacks on payment channel networks: metrics, planners and a
desk-scale simulator.

The pieces, bottom up:

* ``graph``: channels with directed balances, snapshots and JSON I/O
* ``htlc``: locking, expiring and settling HTLCs along a path
* ``pathfind``: attack path enumeration and bottleneck probing
* ``metrics``: CCR, PCR, SPCR, deviation, gamma and PCR histograms
* ``netgen``: seeded topologies with attached Sybil pairs
* ``planner``: MinPay, SPCR-Max and baseline allocators, attack rounds
* ``harness``: experiments, reports and the ``pcncongest`` CLI
"""
from __future__ import annotations

from .graph import PcnGraph, dump_graph, load_graph, restore, snapshot
from .metrics import build_report, ccr, gamma, pcr, spcr
from .pathfind import PathRecord, find_all_paths, probe

__version__ = "0.1.0"

__all__ = [
    "PathRecord",
    "PcnGraph",
    "build_report",
    "ccr",
    "dump_graph",
    "find_all_paths",
    "gamma",
    "load_graph",
    "pcr",
    "probe",
    "restore",
    "snapshot",
    "spcr",
]
