from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfdcf.engine import MS, S
from dfdcf.metrics import (FlowStats, read_timeseries_csv, render_summary_csv, render_timeseries_csv,
                           summarize, write_timeseries_csv)


def test_jitter_from_consecutive_delays():
    st_ = FlowStats("f")
    st_.record_delivery(0, 30 * MS, 100)
    assert st_.jitter_series == []
    st_.record_delivery(10 * MS, 60 * MS, 100)
    assert st_.jitter_series == [(60 * MS, 20 * MS)]


def test_throughput_bucket():
    st_ = FlowStats("f")
    st_.record_delivery(50 * S, 50 * S + 19_100_000, 2312)
    assert st_.throughput_buckets[50] == 18_496
    assert sum(st_.throughput_buckets) == 18_496


def test_drop_causes():
    st_ = FlowStats("f")
    st_.record_drop("deadline", 1)
    st_.record_drop("retry", 2)
    assert st_.drops["deadline"] == 1 and st_.drops["retry"] == 1
    with pytest.raises(ValueError, match="unknown drop cause"):
        st_.record_drop("cosmic-ray", 3)


def test_summary_mean_and_empty_window():
    st_ = FlowStats("f")
    for i, d in enumerate((10, 20, 30)):
        st_.record_sent(i * S)
        st_.record_delivery(i * S, i * S + d * MS, 100)
    s = summarize(st_, (0, 10 * S))
    assert s.delay_mean_ms == pytest.approx(20.0) and s.delay_median_ms == pytest.approx(20.0)
    assert s.jitter_mean_ms == pytest.approx(10.0) and s.jitter_std_ms == pytest.approx(0.0)
    empty = summarize(st_, (100 * S, 200 * S))
    assert empty.delivered == 0 and empty.delay_mean_ms is None and empty.goodput_kbps is None
    assert "NA" in render_summary_csv([{"window": "w", "summary": empty}])
    with pytest.raises(ValueError):
        summarize(st_, (5, 5))


def test_timeseries_csv_contents(tmp_path):
    st_ = FlowStats("f")
    st_.record_delivery(0, 5 * MS, 10)
    text = render_timeseries_csv([st_])
    assert text.splitlines() == ["time_s,flow,metric,value",
                                 "0.000000,f,throughput_kbps,0.080000",
                                 "0.005000,f,delay_ms,5.000000"]
    assert render_timeseries_csv([]) == "time_s,flow,metric,value\n"
    p = tmp_path / "ts.csv"
    write_timeseries_csv([st_], p)
    assert p.read_text() == text
    assert read_timeseries_csv(p)[1] == (0.005, "f", "delay_ms", 5.0)


def test_csv_errors(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        write_timeseries_csv([], tmp_path / "missing" / "x.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("time_s,flow,metric,value\n1.0,f,delay_ms,oops\n")
    with pytest.raises(ValueError, match="row 2"):
        read_timeseries_csv(bad)


deliveries = st.lists(st.tuples(st.integers(0, 20 * S), st.integers(0, 2 * S), st.integers(1, 3000)),
                      max_size=60)


def _stats(items):
    st_ = FlowStats("f")
    for enq, delay, size in sorted(items):
        st_.record_sent(enq)
        st_.record_delivery(enq, enq + delay, size)
    return st_


@given(deliveries)
def test_jitter_law_and_bucket_sum(items):
    st_ = _stats(items)
    assert len(st_.jitter_series) == max(0, st_.delivered - 1)
    assert all(v >= 0 for _, v in st_.jitter_series)
    assert sum(st_.throughput_buckets) == sum(8 * s for _, _, s in items)


@given(deliveries, st.integers(1, 30 * S))
def test_disjoint_windows_recompose(items, cut):
    st_ = _stats(items)
    end = 30 * S
    if cut >= end:
        return
    a, b, full = st_.samples(0, cut), st_.samples(cut, end), st_.samples(0, end)
    for key in ("delay", "jitter", "bits"):
        assert np.array_equal(np.sort(np.concatenate([a[key], b[key]])), np.sort(full[key]))
    sa, sb, sf = summarize(st_, (0, cut)), summarize(st_, (cut, end)), summarize(st_, (0, end))
    assert sa.delivered + sb.delivered == sf.delivered
