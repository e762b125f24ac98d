"""Continuous double auction with price-time priority.

The book keeps one FIFO queue per occupied integer-tick price level.
Incoming limit orders execute against the opposite side at resting
prices while they cross, and any remainder is queued with last time
priority. Cancellations remove the referenced order's remaining size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from sortedcontainers import SortedDict

from .orderflow import EventKind, OrderEvent, Side

log = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Fill:
    """One execution: ``quantity`` shares at the resting order's price."""

    resting_id: int
    incoming_id: int
    price: int
    quantity: int


class BookState:
    """Two-sided limit order book over integer tick prices.

    Levels are ``SortedDict`` price -> {order_id: remaining_qty}; the
    inner dicts preserve insertion order, which is the time priority.
    Unknown cancellations (target already filled or cancelled) are
    counted and skipped rather than treated as fatal.
    """

    def __init__(self):
        self.bids = SortedDict()
        self.asks = SortedDict()
        self._index: dict[int, tuple[Side, int]] = {}  # live order -> (side, price)
        self.cancel_misses = 0

    def _levels(self, side: Side) -> SortedDict:
        return self.bids if side is Side.BUY else self.asks

    def best_two(self, side: Side) -> tuple[int | None, int | None]:
        """Top two occupied price levels on ``side`` (best first)."""
        levels = self._levels(side)
        n = len(levels)
        if n == 0:
            return None, None
        if side is Side.BUY:
            first = levels.keys()[-1]
            second = levels.keys()[-2] if n > 1 else None
        else:
            first = levels.keys()[0]
            second = levels.keys()[1] if n > 1 else None
        return first, second

    def depth(self, side: Side) -> int:
        return len(self._levels(side))

    def live_orders(self) -> dict[int, tuple[Side, int, int]]:
        """Snapshot ``order_id -> (side, price, remaining)`` of resting orders."""
        out = {}
        for side, levels in ((Side.BUY, self.bids), (Side.SELL, self.asks)):
            for price, queue in levels.items():
                for oid, qty in queue.items():
                    out[oid] = (side, price, qty)
        return out

    def crossed(self) -> bool:
        if not self.bids or not self.asks:
            return False
        return self.bids.keys()[-1] >= self.asks.keys()[0]

    def _enqueue(self, side: Side, price: int, order_id: int, qty: int) -> None:
        levels = self._levels(side)
        queue = levels.get(price)
        if queue is None:
            queue = {}
            levels[price] = queue
        queue[order_id] = qty
        self._index[order_id] = (side, price)

    def _match(self, event: OrderEvent) -> tuple[int, list[Fill]]:
        """Execute ``event`` against the opposite side while it crosses."""
        opp = self.asks if event.side is Side.BUY else self.bids
        remaining = event.quantity
        fills: list[Fill] = []
        while remaining > 0 and opp:
            best_price = opp.keys()[0] if event.side is Side.BUY else opp.keys()[-1]
            if event.side is Side.BUY:
                if best_price > event.price:
                    break
            else:
                if best_price < event.price:
                    break
            queue = opp[best_price]
            while remaining > 0 and queue:
                maker_id = next(iter(queue))
                maker_qty = queue[maker_id]
                traded = min(remaining, maker_qty)
                fills.append(Fill(maker_id, event.order_id, best_price, traded))
                remaining -= traded
                if traded == maker_qty:
                    del queue[maker_id]
                    del self._index[maker_id]
                else:
                    queue[maker_id] = maker_qty - traded
            if not queue:
                del opp[best_price]
        return remaining, fills

    def apply_event(self, event: OrderEvent) -> list[Fill]:
        """Process one event, returning the fills it produced."""
        if event.kind is EventKind.CANCEL:
            loc = self._index.pop(event.order_id, None)
            if loc is None:
                self.cancel_misses += 1
                log.warning("cancel for unknown order %d (already filled or cancelled)", event.order_id)
                return []
            side, price = loc
            levels = self._levels(side)
            queue = levels[price]
            del queue[event.order_id]
            if not queue:
                del levels[price]
            return []

        remaining, fills = self._match(event)
        if remaining > 0:
            self._enqueue(event.side, event.price, event.order_id, remaining)
        return fills


def apply_event(book: BookState, event: OrderEvent) -> tuple[BookState, list[Fill]]:
    """Functional wrapper over :meth:`BookState.apply_event` (mutates ``book``)."""
    return book, book.apply_event(event)
