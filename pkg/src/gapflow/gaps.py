"""Best-level price-gap extraction and summary statistics.

The gap on a book side is the log distance between its two best occupied
levels: ln(b1/b2) for bids, ln(a2/a1) for asks, from integer tick prices
(the tick size cancels in the ratio). One observation is recorded per
side per event; when a side has fewer than two occupied levels the
observation is emitted as undefined and excluded from all statistics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import BookState
from .errors import EmptySeries, MalformedRow
from .orderflow import EventKind, SessionStream, Side

GAP_CSV_HEADER = ["event_index", "timestamp", "side", "gap", "defined"]


@dataclass(frozen=True, slots=True)
class GapObservation:
    event_index: int
    timestamp: int
    side: Side
    gap: float
    defined: bool


@dataclass
class GapSeries:
    """Event-indexed gap observations for one side of one instrument.

    ``tick_diff`` keeps the integer price difference behind each gap so
    the one-tick ratio can be tested exactly; it is None for series
    loaded back from CSV, which do not carry tick information.
    """

    instrument: str
    side: Side
    event_index: np.ndarray
    timestamp: np.ndarray
    gap: np.ndarray
    defined: np.ndarray
    tick_diff: np.ndarray | None = None
    n_submitted: int | None = None  # submissions on this side, for the flow rate

    def __len__(self) -> int:
        return len(self.gap)

    def __getitem__(self, i: int) -> GapObservation:
        return GapObservation(
            int(self.event_index[i]), int(self.timestamp[i]), self.side,
            float(self.gap[i]), bool(self.defined[i]),
        )

    def defined_gaps(self) -> np.ndarray:
        """Gap values of the defined observations only."""
        return self.gap[self.defined]


@dataclass
class GapSummary:
    """Per-side liquidity summary over the defined gaps."""

    orders_per_minute: float
    one_tick_fraction: float
    mean: float
    median: float
    std: float
    skewness: float | None
    kurtosis: float | None
    n_defined: int
    n_total: int

    def to_dict(self) -> dict:
        return {
            "orders_per_minute": self.orders_per_minute,
            "one_tick_fraction": self.one_tick_fraction,
            "mean": self.mean,
            "median": self.median,
            "std": self.std,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "n_defined": self.n_defined,
            "n_total": self.n_total,
        }


def extract_gap_series(stream: SessionStream) -> tuple[GapSeries, GapSeries]:
    """Replay ``stream`` and record the buy- and sell-side gap at every event.

    Returns the (buy, sell) series; identical streams produce bit-identical
    output.
    """
    n = len(stream.events)
    book = BookState()
    ts = np.empty(n, dtype=np.int64)
    out = {}
    for side in (Side.BUY, Side.SELL):
        out[side] = {
            "gap": np.full(n, np.nan),
            "defined": np.zeros(n, dtype=bool),
            "tick_diff": np.zeros(n, dtype=np.int64),
            "n_submitted": 0,
        }
    for i, event in enumerate(stream.events):
        book.apply_event(event)
        ts[i] = event.timestamp
        if event.kind is EventKind.SUBMIT:
            out[event.side]["n_submitted"] += 1
        for side in (Side.BUY, Side.SELL):
            first, second = book.best_two(side)
            if second is None:
                continue
            rec = out[side]
            if side is Side.BUY:
                rec["gap"][i] = math.log(first / second)
                rec["tick_diff"][i] = first - second
            else:
                rec["gap"][i] = math.log(second / first)
                rec["tick_diff"][i] = second - first
            rec["defined"][i] = True

    idx = np.arange(n, dtype=np.int64)
    series = tuple(
        GapSeries(
            instrument=stream.instrument,
            side=side,
            event_index=idx.copy(),
            timestamp=ts.copy(),
            gap=out[side]["gap"],
            defined=out[side]["defined"],
            tick_diff=out[side]["tick_diff"],
            n_submitted=out[side]["n_submitted"],
        )
        for side in (Side.BUY, Side.SELL)
    )
    return series


def summarize_gaps(series: GapSeries, session_minutes: float, tick_size="0.01") -> GapSummary:
    """Flow rate, one-tick gap fraction and moments of the defined gaps.

    The one-tick test is exact (integer price difference == 1), not a
    comparison on the log gap. Skewness and kurtosis are the third and
    raw fourth standardized moments with 1/n normalization; both are
    None when the gaps are constant.
    """
    if series.tick_diff is None or series.n_submitted is None:
        raise ValueError("series lacks tick/flow information (loaded from CSV?); summarize at replay time")
    g = series.defined_gaps()
    if g.size == 0:
        raise EmptySeries(f"no defined gap observations on side {series.side.value}")
    if session_minutes <= 0:
        raise ValueError("session_minutes must be positive")

    ticks = series.tick_diff[series.defined]
    m = g.mean()
    centered = g - m
    m2 = np.mean(centered**2)
    if m2 > 0:
        skew = float(np.mean(centered**3) / m2**1.5)
        kurt = float(np.mean(centered**4) / m2**2)
    else:
        skew = None
        kurt = None
    return GapSummary(
        orders_per_minute=series.n_submitted / session_minutes,
        one_tick_fraction=float(np.mean(ticks == 1)),
        mean=float(m),
        median=float(np.median(g)),
        std=float(np.sqrt(m2)),
        skewness=skew,
        kurtosis=kurt,
        n_defined=int(g.size),
        n_total=len(series),
    )


def write_gap_series(series: GapSeries, sink) -> None:
    """Write one side's observations as ``event_index,timestamp,side,gap,defined``."""
    own = isinstance(sink, (str, Path))
    fh = open(sink, "w", encoding="utf-8", newline="") if own else sink
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GAP_CSV_HEADER)
        for i in range(len(series)):
            writer.writerow([
                int(series.event_index[i]),
                int(series.timestamp[i]),
                series.side.value,
                repr(float(series.gap[i])),
                "true" if series.defined[i] else "false",
            ])
    finally:
        if own:
            fh.close()


def load_gap_series(source, instrument: str = "") -> GapSeries:
    """Load a single-side gap CSV written by :func:`write_gap_series`.

    Tick and flow metadata are not part of the format, so the result
    supports the statistical analyses but not :func:`summarize_gaps`.
    """
    own = isinstance(source, (str, Path))
    fh = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != GAP_CSV_HEADER:
            raise MalformedRow(f"bad gap CSV header {header!r}", line=1)
        idx, ts, gaps, defined = [], [], [], []
        side = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(f"expected 5 fields, got {len(row)}", line=lineno)
            row_side = Side(row[2].strip())
            if side is None:
                side = row_side
            elif row_side is not side:
                raise MalformedRow("mixed sides in one gap CSV", line=lineno)
            idx.append(int(row[0]))
            ts.append(int(row[1]))
            gaps.append(float(row[3]))
            defined.append(row[4].strip() == "true")
        if side is None:
            raise EmptySeries("gap CSV has no observations")
    finally:
        if own:
            fh.close()
    return GapSeries(
        instrument=instrument,
        side=side,
        event_index=np.asarray(idx, dtype=np.int64),
        timestamp=np.asarray(ts, dtype=np.int64),
        gap=np.asarray(gaps, dtype=float),
        defined=np.asarray(defined, dtype=bool),
    )
