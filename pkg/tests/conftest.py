from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from pcncongest.graph import PcnGraph

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def line_graph(balances, reverse=None, htlc_minimum=546, names=None):
    """Path graph n0 - n1 - ... with the given forward balances."""
    names = names or [f"n{i}" for i in range(len(balances) + 1)]
    reverse = reverse or [0] * len(balances)
    g = PcnGraph()
    for n in names:
        g.add_node(n)
    for i, (fwd, back) in enumerate(zip(balances, reverse)):
        g.open_channel(names[i], names[i + 1], fwd, back, htlc_minimum=htlc_minimum)
    return g, tuple(names)


@pytest.fixture
def coin_ladder_path():
    """Sender, two intermediaries and receiver with 5, 4 and 3 coins forward."""
    names = ["Attacker1", "Alice", "Carol", "Attacker2"]
    return line_graph([5, 4, 3], htlc_minimum=1, names=names)


def balances_of(g: PcnGraph):
    return {
        k: (c.balance_xy, c.balance_yx, c.locked_xy, c.locked_yx) for k, c in g.channels.items()
    }


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(mod.RESULTS):
        checks = mod.RESULTS[criterion]
        failed = [name for name, ok, _ in checks if not ok]
        verdict = "PASS" if not failed else "FAIL (" + "; ".join(failed) + ")"
        terminalreporter.write_line(f"criterion {criterion:>2}: {verdict}")
