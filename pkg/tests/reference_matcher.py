"""Brute-force order-list matcher, the oracle for the book engine.

Keeps every live order in one flat list and rescans it per event: no
price levels, no queues, no indexes. Deliberately independent of the
engine implementation.
"""

import math

from gapflow.orderflow import EventKind, Side


class NaiveBook:
    def __init__(self):
        self.orders = []  # live orders: [order_id, side, price, qty, seq]
        self._seq = 0

    def top_two(self, side: Side):
        prices = {o[2] for o in self.orders if o[1] is side}
        ranked = sorted(prices, reverse=(side is Side.BUY))
        first = ranked[0] if ranked else None
        second = ranked[1] if len(ranked) > 1 else None
        return first, second

    def gap(self, side: Side):
        first, second = self.top_two(side)
        if second is None:
            return None
        if side is Side.BUY:
            return math.log(first / second)
        return math.log(second / first)

    def _best_opposite(self, side: Side):
        best = None
        for order in self.orders:
            if order[1] is side:
                continue
            if best is None:
                best = order
            elif side is Side.BUY:
                if order[2] < best[2] or (order[2] == best[2] and order[4] < best[4]):
                    best = order
            else:
                if order[2] > best[2] or (order[2] == best[2] and order[4] < best[4]):
                    best = order
        return best

    def apply(self, event):
        fills = []
        if event.kind is EventKind.CANCEL:
            for i, order in enumerate(self.orders):
                if order[0] == event.order_id:
                    del self.orders[i]
                    break
            return fills
        qty = event.quantity
        while qty > 0:
            best = self._best_opposite(event.side)
            if best is None:
                break
            if event.side is Side.BUY and best[2] > event.price:
                break
            if event.side is Side.SELL and best[2] < event.price:
                break
            traded = min(qty, best[3])
            fills.append((best[0], event.order_id, best[2], traded))
            qty -= traded
            best[3] -= traded
            if best[3] == 0:
                self.orders.remove(best)
        if qty > 0:
            self._seq += 1
            self.orders.append([event.order_id, event.side, event.price, qty, self._seq])
        return fills

    def snapshot(self):
        """{order_id: (side, price, qty)} of the resting orders."""
        return {o[0]: (o[1], o[2], o[3]) for o in self.orders}
