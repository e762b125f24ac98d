import numpy as np
import pytest

from gapflow.engine import BookState, Fill
from gapflow.orderflow import EventKind, OrderEvent, Side
from gapflow.synth import OrderFlowSpec, gen_order_flow
from reference_matcher import NaiveBook


def submit(oid, side, price, qty, t=0):
    return OrderEvent(t, oid, side, price, qty, EventKind.SUBMIT)


def cancel(oid, side, t=0):
    return OrderEvent(t, oid, side, 0, 0, EventKind.CANCEL)


def test_submit_into_empty_book_rests():
    book = BookState()
    fills = book.apply_event(submit(1, Side.BUY, 999, 100))
    assert fills == []
    assert book.best_two(Side.BUY) == (999, None)
    assert book.live_orders() == {1: (Side.BUY, 999, 100)}


def test_crossing_buy_fills_then_rests_remainder():
    book = BookState()
    book.apply_event(submit(1, Side.SELL, 1000, 100))
    fills = book.apply_event(submit(2, Side.BUY, 1001, 150))
    assert fills == [Fill(resting_id=1, incoming_id=2, price=1000, quantity=100)]
    assert book.best_two(Side.SELL) == (None, None)
    assert book.live_orders() == {2: (Side.BUY, 1001, 50)}


def test_fifo_within_level_and_price_priority_across_levels():
    book = BookState()
    book.apply_event(submit(1, Side.SELL, 1001, 50))
    book.apply_event(submit(2, Side.SELL, 1000, 30))
    book.apply_event(submit(3, Side.SELL, 1000, 40))
    fills = book.apply_event(submit(4, Side.BUY, 1001, 100))
    assert fills == [
        Fill(2, 4, 1000, 30),  # better price first
        Fill(3, 4, 1000, 40),  # then FIFO at the same price
        Fill(1, 4, 1001, 30),
    ]


def test_cancel_removes_remaining_quantity():
    book = BookState()
    book.apply_event(submit(1, Side.BUY, 999, 100))
    book.apply_event(cancel(1, Side.BUY))
    assert book.best_two(Side.BUY) == (None, None)
    assert book.live_orders() == {}


def test_unknown_cancel_is_skipped_not_fatal():
    book = BookState()
    assert book.apply_event(cancel(7, Side.BUY)) == []
    assert book.cancel_misses == 1


def random_stream(n, seed, style="uniform_band"):
    spec = OrderFlowSpec(n_events=n, style=style, warmup_levels=3, book_target=40)
    return gen_order_flow(spec, seed=seed)


def test_matches_naive_rescan_matcher_on_random_streams():
    for k in range(25):
        stream = random_stream(200, seed=[101, k])
        book, naive = BookState(), NaiveBook()
        for event in stream.events:
            engine_fills = book.apply_event(event)
            naive_fills = naive.apply(event)
            assert [(f.resting_id, f.incoming_id, f.price, f.quantity) for f in engine_fills] == naive_fills
            for side in (Side.BUY, Side.SELL):
                assert book.best_two(side) == naive.top_two(side)
        assert book.live_orders() == naive.snapshot()


def test_book_never_crossed_at_rest():
    stream = random_stream(1500, seed=55)
    book = BookState()
    for event in stream.events:
        book.apply_event(event)
        assert not book.crossed()


def test_price_time_priority_within_incoming_order():
    entry_index = {}
    for k in range(10):
        stream = random_stream(400, seed=[77, k])
        book = BookState()
        for i, event in enumerate(stream.events):
            fills = book.apply_event(event)
            if event.kind is EventKind.SUBMIT:
                entry_index[event.order_id] = i
            for first, second in zip(fills, fills[1:]):
                if event.side is Side.BUY:
                    assert first.price <= second.price
                else:
                    assert first.price >= second.price
                if first.price == second.price:
                    assert entry_index[first.resting_id] < entry_index[second.resting_id]


def test_quantity_conservation():
    stream = random_stream(1000, seed=9)
    book = BookState()
    submitted = {}
    taker = {}
    maker = {}
    cancelled_at = {}
    for event in stream.events:
        fills = book.apply_event(event)
        if event.kind is EventKind.SUBMIT:
            submitted[event.order_id] = event.quantity
        for f in fills:
            taker[f.incoming_id] = taker.get(f.incoming_id, 0) + f.quantity
            maker[f.resting_id] = maker.get(f.resting_id, 0) + f.quantity
        if event.kind is EventKind.CANCEL:
            traded = taker.get(event.order_id, 0) + maker.get(event.order_id, 0)
            cancelled_at[event.order_id] = submitted[event.order_id] - traded
    resting = {oid: qty for oid, (_, _, qty) in book.live_orders().items()}
    for oid, qty in submitted.items():
        accounted = taker.get(oid, 0) + maker.get(oid, 0) + cancelled_at.get(oid, 0) + resting.get(oid, 0)
        assert accounted == qty, f"order {oid}: {accounted} != {qty}"
    assert sum(taker.values()) == sum(maker.values())  # every fill has two sides


def test_replay_is_deterministic():
    from gapflow.gaps import extract_gap_series

    stream = random_stream(800, seed=42, style="around_best")
    buy1, sell1 = extract_gap_series(stream)
    buy2, sell2 = extract_gap_series(stream)
    assert np.array_equal(buy1.gap, buy2.gap, equal_nan=True)
    assert np.array_equal(sell1.gap, sell2.gap, equal_nan=True)
    assert np.array_equal(buy1.defined, buy2.defined)
