import io
import math

import numpy as np
import pytest

from gapflow.errors import EmptySeries
from gapflow.gaps import extract_gap_series, load_gap_series, summarize_gaps, write_gap_series
from gapflow.orderflow import EventKind, OrderEvent, SessionStream, Side
from gapflow.synth import OrderFlowSpec, gen_order_flow
from reference_matcher import NaiveBook


def stream_of(rows):
    events = [OrderEvent(t, oid, side, price, qty, kind) for t, oid, side, price, qty, kind in rows]
    return SessionStream("T", None, events)


S, C, B, A = EventKind.SUBMIT, EventKind.CANCEL, Side.BUY, Side.SELL


def test_gap_is_log_ratio_of_top_levels():
    stream = stream_of([
        (0, 1, B, 999, 100, S),
        (1, 2, B, 1000, 100, S),
        (2, 3, A, 1005, 100, S),
        (3, 4, A, 1007, 100, S),
    ])
    buy, sell = extract_gap_series(stream)
    assert buy.defined[1] and buy.gap[1] == math.log(1000 / 999)
    assert buy.gap[1] == pytest.approx(1.0005e-3, rel=1e-3)
    assert sell.defined[3] and sell.gap[3] == math.log(1007 / 1005)
    assert buy.tick_diff[1] == 1 and sell.tick_diff[3] == 2


def test_single_level_side_is_undefined():
    stream = stream_of([(0, 1, B, 999, 100, S)])
    buy, sell = extract_gap_series(stream)
    assert not buy.defined[0] and np.isnan(buy.gap[0])
    assert not sell.defined[0]
    assert len(buy) == len(sell) == 1


def test_one_observation_per_side_per_event_even_when_unchanged():
    stream = stream_of([
        (0, 1, B, 999, 100, S),
        (1, 2, B, 998, 100, S),
        (2, 3, A, 1005, 100, S),  # buy side unchanged here
    ])
    buy, _ = extract_gap_series(stream)
    assert len(buy) == 3
    assert buy.defined[1] and buy.defined[2]
    assert buy.gap[1] == buy.gap[2]


def test_gap_sequence_matches_independent_rescan_oracle():
    stream = gen_order_flow(OrderFlowSpec(n_events=50, warmup_levels=2), seed=31)
    buy, sell = extract_gap_series(stream)
    naive = NaiveBook()
    for i, event in enumerate(stream.events):
        naive.apply(event)
        for side, series in ((B, buy), (A, sell)):
            expected = naive.gap(side)
            if expected is None:
                assert not series.defined[i]
            else:
                assert series.defined[i]
                assert series.gap[i] == expected  # same log expression, bit-identical


def test_summary_moments_match_direct_formulas():
    gaps = np.array([1.0, 2.0, 2.0, 3.0, 5.0, 1.0, 4.0, 2.0, 2.0, 8.0]) * 1e-3
    series = _series_with(gaps, tick_diff=np.array([1, 2, 2, 3, 5, 1, 4, 2, 2, 8]), n_submitted=30)
    summary = summarize_gaps(series, session_minutes=10.0)
    m = gaps.mean()
    m2 = ((gaps - m) ** 2).mean()
    assert summary.orders_per_minute == 3.0
    assert summary.one_tick_fraction == 0.2
    assert summary.mean == pytest.approx(m, abs=0)
    assert summary.median == np.median(gaps)
    assert summary.std == pytest.approx(math.sqrt(m2), rel=1e-15)
    assert summary.skewness == pytest.approx(((gaps - m) ** 3).mean() / m2**1.5, rel=1e-12)
    assert summary.kurtosis == pytest.approx(((gaps - m) ** 4).mean() / m2**2, rel=1e-12)
    assert summary.n_defined == 10


def test_constant_gaps_have_undefined_shape_moments():
    series = _series_with(np.full(6, 2e-3), tick_diff=np.full(6, 2, dtype=np.int64), n_submitted=6)
    summary = summarize_gaps(series, session_minutes=1.0)
    assert summary.std == 0.0
    assert summary.skewness is None and summary.kurtosis is None
    assert summary.one_tick_fraction == 0.0


def test_summary_requires_defined_observations():
    series = _series_with(np.array([]), tick_diff=np.array([], dtype=np.int64), n_submitted=0)
    with pytest.raises(EmptySeries):
        summarize_gaps(series, session_minutes=1.0)


def test_one_tick_ratio_uses_integer_difference():
    # same log gap value cannot be one tick at different price levels;
    # the integer diff is authoritative
    gaps = np.array([math.log(1000 / 999), math.log(2000 / 1998)])
    series = _series_with(gaps, tick_diff=np.array([1, 2], dtype=np.int64), n_submitted=2)
    assert summarize_gaps(series, 1.0).one_tick_fraction == 0.5


def test_undefined_observations_excluded_from_moments():
    from gapflow.gaps import GapSeries

    series = GapSeries(
        instrument="T", side=B,
        event_index=np.arange(4), timestamp=np.arange(4),
        gap=np.array([np.nan, 1e-3, np.nan, 3e-3]),
        defined=np.array([False, True, False, True]),
        tick_diff=np.array([0, 1, 0, 3], dtype=np.int64),
        n_submitted=4,
    )
    summary = summarize_gaps(series, 1.0)
    assert summary.n_defined == 2 and summary.n_total == 4
    assert summary.mean == pytest.approx(2e-3)


def test_gap_csv_round_trip():
    stream = gen_order_flow(OrderFlowSpec(n_events=200), seed=8)
    buy, _ = extract_gap_series(stream)
    sink = io.StringIO()
    write_gap_series(buy, sink)
    loaded = load_gap_series(io.StringIO(sink.getvalue()), instrument="T")
    assert loaded.side is B
    assert np.array_equal(loaded.gap, buy.gap, equal_nan=True)
    assert np.array_equal(loaded.defined, buy.defined)
    assert np.array_equal(loaded.timestamp, buy.timestamp)
    assert loaded.tick_diff is None


def _series_with(gaps, tick_diff, n_submitted):
    from gapflow.gaps import GapSeries

    n = len(gaps)
    return GapSeries(
        instrument="T", side=B,
        event_index=np.arange(n), timestamp=np.arange(n),
        gap=np.asarray(gaps, dtype=float),
        defined=np.ones(n, dtype=bool),
        tick_diff=np.asarray(tick_diff, dtype=np.int64),
        n_submitted=n_submitted,
    )
