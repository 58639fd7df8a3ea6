from __future__ import annotations

import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcncongest.metrics import (
    METRICS_CSV_HEADER,
    SUMMARY_CSV_HEADER,
    AllocationExceedsBalance,
    AllocationExceedsBottleneck,
    AllocationView,
    build_report,
    ccr,
    gamma,
    pcr,
    pcr_histogram,
    spcr,
    spcr_deviation,
    write_metrics_csv,
    write_summary_csv,
)
from pcncongest.pathfind import PathRecord


def test_ccr_basic():
    assert ccr(0, 10) == 0.0
    assert ccr(5, 10) == 0.5
    assert ccr(10, 10) == 1.0
    with pytest.raises(AllocationExceedsBalance):
        ccr(11, 10)
    with pytest.raises(ValueError):
        ccr(1, 0)
    with pytest.raises(ValueError):
        ccr(-1, 5)


def test_pcr_uses_bottleneck():
    assert pcr(3, [5, 4, 3]) == 1.0
    assert pcr(2, [8, 4, 6]) == 0.5
    with pytest.raises(AllocationExceedsBottleneck):
        pcr(4, [5, 4, 3])
    with pytest.raises(ValueError):
        pcr(1, [])


def test_spcr_scales_by_length():
    assert spcr(3, [5, 4, 3], 3, 20) == pytest.approx(0.15)
    assert spcr(4, [4] * 20, 20, 20) == 1.0
    with pytest.raises(ValueError):
        spcr(1, [4], 21, 20)


def test_deviation_is_one_sided():
    assert spcr_deviation(0.2, 0.5) == pytest.approx(0.3)
    assert spcr_deviation(0.7, 0.5) == 0.0


def test_gamma_divides_by_iterations_and_skips_zero_spcr():
    terms = [(100, 0.5), (0, 0.0), (30, 0.1)]
    assert gamma(terms) == pytest.approx(200 + 300)
    assert gamma(terms, iterations=2) == pytest.approx(250)
    assert gamma([]) == 0.0
    with pytest.raises(ValueError):
        gamma(terms, iterations=0)


def test_gamma_from_allocation_views():
    p = PathRecord("a", "d", ("a", "b", "c", "d"))
    v = AllocationView(alpha=3, path=p, per_channel_balances=(5, 4, 3))
    # spcr = 3/20 * 1
    assert gamma([v], l_max=20) == pytest.approx(20.0)


def test_histogram_bin_edges():
    assert pcr_histogram([0.0, 0.2499, 0.25, 0.5, 0.75, 1.0]) == pytest.approx(
        (200 / 6, 100 / 6, 100 / 6, 200 / 6)
    )
    assert pcr_histogram([]) == (0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        pcr_histogram([1.01])


def test_build_report_and_csv():
    rows = [("a->b", 0, 50, 100, 4), ("a->b", 1, 0, 80, 10), ("a->b", 2, 80, 80, 10)]
    rep = build_report(rows, 20, threshold=0.3)
    assert rep.locked_payment == 130
    assert [m.pcr for m in rep.per_path] == [0.5, 0.0, 1.0]
    assert [m.spcr for m in rep.per_path] == [0.1, 0.0, 0.5]
    assert rep.mean_deviation == pytest.approx((0.2 + 0.3 + 0.0) / 3)
    assert rep.gamma == pytest.approx(50 / 0.1 + 80 / 0.5)
    assert rep.pcr_histogram == pytest.approx((100 / 3, 0, 100 / 3, 100 / 3))

    buf = io.StringIO()
    write_metrics_csv(buf, rep, "r1", "minpay", 0.3, 1000)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(METRICS_CSV_HEADER)
    assert lines[1] == "r1,minpay,0.3,1000,a->b,0,50,0.5,0.1,0.19999999999999998"
    buf = io.StringIO()
    write_summary_csv(buf, rep, "r1", "minpay", 0.3, 1000)
    head, row = buf.getvalue().splitlines()
    assert head == ",".join(SUMMARY_CSV_HEADER)
    assert row.startswith("r1,minpay,0.3,1000,130,0.5,")


def test_empty_report():
    rep = build_report([], 20, 0.5)
    assert rep.locked_payment == 0 and rep.gamma == 0.0
    assert rep.totals["mean_pcr"] == 0.0


balances_st = st.lists(st.integers(1, 10**12), min_size=1, max_size=20)


@given(balances_st, st.data())
def test_metric_ranges_property(balances, data):
    low = min(balances)
    alpha = data.draw(st.integers(0, low))
    length = len(balances)
    l_max = data.draw(st.integers(length, 40))
    p = pcr(alpha, balances)
    s = spcr(alpha, balances, length, l_max)
    assert 0.0 <= p <= 1.0 and 0.0 <= s <= 1.0
    assert p == max(ccr(alpha, b) for b in balances)
    assert math.isclose(s, (length / l_max) * p, rel_tol=0, abs_tol=math.ulp(s))
