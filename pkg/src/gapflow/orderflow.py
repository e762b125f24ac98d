"""Order-flow event model and CSV ingestion.

One file holds one instrument-day of limit-order submissions and
cancellations. Prices are converted to integer ticks on the way in and
stay integers everywhere downstream; timestamps are integer centiseconds.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import date
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import IO, Union

from .errors import MalformedRow, NonMonotoneTimestamp, PriceNotOnTick, UnknownCancelTarget

CSV_HEADER = ["timestamp", "order_id", "side", "price", "quantity", "kind"]

_TIMESTAMP_RE = re.compile(r"^\d+\.\d{2}$")


class Side(str, Enum):
    BUY = "B"
    SELL = "S"

    @property
    def label(self) -> str:
        return "buy" if self is Side.BUY else "sell"


class EventKind(str, Enum):
    SUBMIT = "S"
    CANCEL = "C"


@dataclass(frozen=True, slots=True)
class OrderEvent:
    """A single submission or cancellation.

    ``price`` is in integer ticks and ``quantity`` in shares; both are 0
    for cancellations, which identify their target by ``order_id``.
    """

    timestamp: int  # centiseconds since session open
    order_id: int
    side: Side
    price: int
    quantity: int
    kind: EventKind


@dataclass
class SessionStream:
    """Ordered event sequence for one instrument-day."""

    instrument: str
    trading_day: date | None
    events: list[OrderEvent]

    def __len__(self) -> int:
        return len(self.events)


def as_tick_size(tick_size: Union[str, Decimal, float, int]) -> Decimal:
    """Coerce a tick size to an exact Decimal (floats go through str())."""
    if isinstance(tick_size, Decimal):
        tick = tick_size
    else:
        tick = Decimal(str(tick_size))
    if tick <= 0:
        raise ValueError(f"tick_size must be positive, got {tick_size}")
    return tick


def _open_source(source) -> IO[str]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"unsupported source type: {type(source)!r}")


def parse_order_flow(
    source,
    tick_size: Union[str, Decimal, float] = "0.01",
    instrument: str = "",
    trading_day: date | None = None,
) -> SessionStream:
    """Parse an order-flow CSV into a validated :class:`SessionStream`.

    ``source`` may be a path, bytes, or an open file. Rows must carry the
    header ``timestamp,order_id,side,price,quantity,kind``; timestamps are
    decimal seconds with exactly two fractional digits, sides are B/S and
    kinds are S (submit) / C (cancel). Cancel rows carry price=0 and
    quantity=0, which are ignored.

    Raises :class:`MalformedRow`, :class:`NonMonotoneTimestamp`,
    :class:`UnknownCancelTarget` or :class:`PriceNotOnTick`, each naming
    the offending file line.
    """
    tick = as_tick_size(tick_size)
    fh = _open_source(source)
    events: list[OrderEvent] = []
    submitted: dict[int, Side] = {}
    last_t = -1
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return SessionStream(instrument, trading_day, [])
        if [h.strip() for h in header] != CSV_HEADER:
            raise MalformedRow(f"bad header {header!r}, expected {','.join(CSV_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise MalformedRow(f"expected 6 fields, got {len(row)}", line=lineno)
            ts_raw, id_raw, side_raw, price_raw, qty_raw, kind_raw = (f.strip() for f in row)

            if not _TIMESTAMP_RE.match(ts_raw):
                raise MalformedRow(f"bad timestamp {ts_raw!r} (want seconds with 2 decimals)", line=lineno)
            whole, frac = ts_raw.split(".")
            t = int(whole) * 100 + int(frac)
            if t < last_t:
                raise NonMonotoneTimestamp(f"timestamp {ts_raw} decreases", line=lineno)
            last_t = t

            try:
                order_id = int(id_raw)
            except ValueError:
                raise MalformedRow(f"bad order_id {id_raw!r}", line=lineno) from None
            if order_id <= 0:
                raise MalformedRow(f"order_id must be positive, got {order_id}", line=lineno)

            try:
                side = Side(side_raw)
            except ValueError:
                raise MalformedRow(f"bad side {side_raw!r} (want B or S)", line=lineno) from None
            try:
                kind = EventKind(kind_raw)
            except ValueError:
                raise MalformedRow(f"bad kind {kind_raw!r} (want S or C)", line=lineno) from None

            if kind is EventKind.SUBMIT:
                try:
                    price_dec = Decimal(price_raw)
                    quantity = int(qty_raw)
                except (InvalidOperation, ValueError):
                    raise MalformedRow(f"bad price/quantity {price_raw!r},{qty_raw!r}", line=lineno) from None
                ticks = price_dec / tick
                if ticks != ticks.to_integral_value() or ticks <= 0:
                    raise PriceNotOnTick(f"price {price_raw} is not a positive multiple of tick {tick}", line=lineno)
                if quantity <= 0:
                    raise MalformedRow(f"quantity must be positive, got {qty_raw}", line=lineno)
                if order_id in submitted:
                    raise MalformedRow(f"duplicate order_id {order_id}", line=lineno)
                submitted[order_id] = side
                events.append(OrderEvent(t, order_id, side, int(ticks), quantity, kind))
            else:
                ref_side = submitted.get(order_id)
                if ref_side is None:
                    raise UnknownCancelTarget(f"cancel references unknown order_id {order_id}", line=lineno)
                if ref_side is not side:
                    raise UnknownCancelTarget(
                        f"cancel side {side.value} does not match submit side {ref_side.value} for order {order_id}",
                        line=lineno,
                    )
                events.append(OrderEvent(t, order_id, side, 0, 0, kind))
    finally:
        fh.close()
    return SessionStream(instrument, trading_day, events)


def format_price(ticks: int, tick_size: Union[str, Decimal, float]) -> str:
    """Render an integer tick count as a decimal currency price."""
    tick = as_tick_size(tick_size)
    return str((Decimal(ticks) * tick).quantize(tick))


def write_order_flow(stream: SessionStream, sink, tick_size: Union[str, Decimal, float] = "0.01") -> None:
    """Serialize a stream back to the order-flow CSV format.

    Round-trips: re-parsing the output with the same tick size yields an
    identical event sequence.
    """
    tick = as_tick_size(tick_size)
    own = isinstance(sink, (str, Path))
    fh = open(sink, "w", encoding="utf-8", newline="") if own else sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for ev in stream.events:
            ts = f"{ev.timestamp // 100}.{ev.timestamp % 100:02d}"
            if ev.kind is EventKind.SUBMIT:
                writer.writerow([ts, ev.order_id, ev.side.value, format_price(ev.price, tick), ev.quantity, "S"])
            else:
                writer.writerow([ts, ev.order_id, ev.side.value, "0", "0", "C"])
    finally:
        if own:
            fh.close()
