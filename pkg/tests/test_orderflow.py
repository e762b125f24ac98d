import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapflow.errors import MalformedRow, NonMonotoneTimestamp, PriceNotOnTick, UnknownCancelTarget
from gapflow.orderflow import (
    CSV_HEADER,
    EventKind,
    OrderEvent,
    Side,
    format_price,
    parse_order_flow,
    write_order_flow,
)
from gapflow.synth import OrderFlowSpec, gen_order_flow

HEADER = ",".join(CSV_HEADER)


def parse(text, tick="0.01"):
    return parse_order_flow(text.encode(), tick_size=tick)


def test_parse_single_submit_row():
    stream = parse(f"{HEADER}\n34200.00,17,B,9.99,500,S\n")
    assert stream.events == [OrderEvent(3420000, 17, Side.BUY, 999, 500, EventKind.SUBMIT)]


def test_empty_file_gives_empty_stream():
    assert parse("").events == []
    assert parse(HEADER + "\n").events == []


def test_cancel_for_unknown_id_names_line():
    with pytest.raises(UnknownCancelTarget) as err:
        parse(f"{HEADER}\n34200.00,1,B,9.99,500,S\n34200.01,2,B,0,0,C\n")
    assert err.value.line == 3


def test_cancel_side_must_match_submit():
    with pytest.raises(UnknownCancelTarget):
        parse(f"{HEADER}\n34200.00,1,B,9.99,500,S\n34200.01,1,S,0,0,C\n")


def test_cancel_of_known_order_parses():
    stream = parse(f"{HEADER}\n34200.00,1,B,9.99,500,S\n34200.01,1,B,0,0,C\n")
    assert stream.events[1] == OrderEvent(3420001, 1, Side.BUY, 0, 0, EventKind.CANCEL)


def test_non_monotone_timestamp_rejected():
    with pytest.raises(NonMonotoneTimestamp) as err:
        parse(f"{HEADER}\n34200.01,1,B,9.99,500,S\n34200.00,2,B,9.98,100,S\n")
    assert err.value.line == 3


def test_price_off_tick_rejected():
    with pytest.raises(PriceNotOnTick):
        parse(f"{HEADER}\n34200.00,1,B,9.995,500,S\n")
    with pytest.raises(PriceNotOnTick):
        parse(f"{HEADER}\n34200.00,1,B,0.00,500,S\n")  # zero price submit


@pytest.mark.parametrize(
    "row",
    [
        "34200.00,1,B,9.99,500",  # missing field
        "34200.00,1,X,9.99,500,S",  # bad side
        "34200.00,1,B,9.99,500,Q",  # bad kind
        "34200.00,0,B,9.99,500,S",  # non-positive id
        "34200.00,1,B,9.99,-5,S",  # non-positive quantity
        "34200.0,1,B,9.99,500,S",  # one fractional digit
        "34200.00,abc,B,9.99,500,S",  # non-integer id
    ],
)
def test_malformed_rows_rejected(row):
    with pytest.raises(MalformedRow) as err:
        parse(f"{HEADER}\n{row}\n")
    assert err.value.line == 2


def test_duplicate_submit_id_rejected():
    with pytest.raises(MalformedRow):
        parse(f"{HEADER}\n34200.00,1,B,9.99,500,S\n34200.01,1,B,9.98,100,S\n")


def test_bad_header_rejected():
    with pytest.raises(MalformedRow) as err:
        parse("time,id,side,price,qty,kind\n34200.00,1,B,9.99,500,S\n")
    assert err.value.line == 1


def test_round_trip_preserves_events():
    stream = gen_order_flow(OrderFlowSpec(n_events=500), seed=3)
    sink = io.StringIO()
    write_order_flow(stream, sink, "0.01")
    reparsed = parse_order_flow(sink.getvalue().encode(), "0.01")
    assert reparsed.events == stream.events


@settings(max_examples=50, deadline=None)
@given(ticks=st.integers(min_value=1, max_value=10_000_000), tick=st.sampled_from(["0.01", "0.5", "0.001", "25"]))
def test_tick_scaling_round_trips_exactly(ticks, tick):
    text = f"{HEADER}\n0.00,1,S,{format_price(ticks, tick)},10,S\n"
    assert parse(text, tick).events[0].price == ticks


def test_file_path_source(tmp_path):
    path = tmp_path / "X.csv"
    path.write_text(f"{HEADER}\n34200.00,1,B,9.99,500,S\n")
    assert len(parse_order_flow(path).events) == 1
