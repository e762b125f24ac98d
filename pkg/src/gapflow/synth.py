"""Seeded synthetic data: heavy-tailed draws, exact fractional Gaussian
noise, deterministic multiplicative cascades, and random order flow.

These serve as ground-truth inputs for the estimators and as demo data
for the CLI. Everything is reproducible from (parameters, seed).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .engine import BookState
from .errors import BadParams
from .orderflow import EventKind, OrderEvent, SessionStream, Side


def pareto_quantile(u, exponent: float, x_min: float):
    """Inverse CDF of the power-law tail: u in (0, 1] -> x_min * u^(-1/exponent)."""
    return x_min * np.asarray(u, dtype=float) ** (-1.0 / exponent)


def gen_pareto(exponent: float, x_min: float, n: int, seed=0) -> np.ndarray:
    """n draws from the density proportional to x^-(exponent+1) above x_min."""
    if exponent <= 0 or x_min <= 0 or n < 1:
        raise BadParams(f"need exponent > 0, x_min > 0, n >= 1; got {exponent}, {x_min}, {n}")
    rng = np.random.default_rng(seed)
    return pareto_quantile(1.0 - rng.random(n), exponent, x_min)


def gen_pareto_mixture(exponent: float, x_min: float, body_fraction: float, n: int, seed=0) -> np.ndarray:
    """Uniform(0, x_min) body plus power-law tail, randomly interleaved.

    ``body_fraction`` of the n points (rounded) come from the body.
    """
    if exponent <= 0 or x_min <= 0 or n < 1:
        raise BadParams(f"need exponent > 0, x_min > 0, n >= 1; got {exponent}, {x_min}, {n}")
    if not 0.0 <= body_fraction < 1.0:
        raise BadParams(f"body_fraction must be in [0, 1), got {body_fraction}")
    rng = np.random.default_rng(seed)
    n_body = int(round(body_fraction * n))
    body = rng.uniform(0.0, x_min, n_body)
    tail = pareto_quantile(1.0 - rng.random(n - n_body), exponent, x_min)
    out = np.concatenate([body, tail])
    return out[rng.permutation(n)]


def gen_iid_gaussian(n: int, seed=0) -> np.ndarray:
    """Standard normal draws; the uncorrelated baseline for the estimators."""
    if n < 1:
        raise BadParams(f"n must be >= 1, got {n}")
    return np.random.default_rng(seed).standard_normal(n)


def fgn_autocovariance(hurst: float, lags) -> np.ndarray:
    """Autocovariance of unit-variance fractional Gaussian noise."""
    k = np.abs(np.asarray(lags, dtype=float))
    return 0.5 * ((k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst))


def gen_fgn(hurst: float, n: int, seed=0) -> np.ndarray:
    """Exact stationary fractional Gaussian noise by circulant embedding.

    ``n`` must be a power of two. The embedding is provably nonnegative
    definite for 0 < H < 1; if rounding still produces negative
    eigenvalues beyond dust level they are clipped with a warning.
    """
    if not 0.0 < hurst < 1.0:
        raise BadParams(f"hurst must be in (0, 1), got {hurst}")
    if n < 2 or n & (n - 1):
        raise BadParams(f"n must be a power of two >= 2, got {n}")
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma[:n], gamma[n : n + 1], gamma[n - 1 : 0 : -1]])  # length 2n
    lam = np.fft.fft(row).real
    if np.any(lam < 0):
        if lam.min() < -1e-8 * lam.max():
            warnings.warn(
                f"circulant embedding not PSD (min eigenvalue {lam.min():.3e}); clipping to zero",
                RuntimeWarning,
            )
        lam = np.clip(lam, 0.0, None)
    m = 2 * n
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m)
    w = np.empty(m, dtype=complex)
    w[0] = np.sqrt(lam[0] / m) * v[0]
    w[n] = np.sqrt(lam[n] / m) * v[n]
    w[1:n] = np.sqrt(lam[1:n] / (2 * m)) * (v[1:n] + 1j * v[n + 1 :])
    w[n + 1 :] = np.conj(w[1:n][::-1])
    return np.fft.fft(w)[:n].real


def gen_binomial_cascade(p: float, levels: int) -> np.ndarray:
    """Deterministic binomial measure on 2**levels cells.

    Each dyadic split sends mass fraction p to the left child and 1 - p
    to the right; total mass stays 1. The construction is deterministic,
    so no seed is taken.
    """
    if not 0.0 < p < 1.0:
        raise BadParams(f"p must be in (0, 1), got {p}")
    if not isinstance(levels, (int, np.integer)) or levels < 1:
        raise BadParams(f"levels must be a positive integer, got {levels}")
    mass = np.ones(1)
    for _ in range(levels):
        split = np.empty(2 * mass.size)
        split[0::2] = mass * p
        split[1::2] = mass * (1.0 - p)
        mass = split
    return mass


@dataclass
class OrderFlowSpec:
    """Parameters for the random limit-order stream generator.

    ``around_best`` places passive orders near the same-side best with a
    geometric depth profile plus occasional marketable orders;
    ``uniform_band`` draws prices uniformly from a band around the start
    price (heavy crossing, small books - useful for matcher stress tests).
    """

    n_events: int
    instrument: str = "SYNTH"
    start_price: int = 1000  # ticks
    style: str = "around_best"
    band: int = 20
    cancel_prob: float = 0.45  # cancellation share when the book is at book_target
    book_target: int = 40  # live-order count the cancel intensity stabilizes around
    cross_prob: float = 0.10
    improve_prob: float = 0.15
    depth_geom_p: float = 0.10
    max_offset: int = 50
    mean_gap_cs: float = 20.0
    start_time_cs: int = 0
    warmup_levels: int = 5

    def validate(self) -> None:
        if self.n_events < 0 or self.start_price <= self.warmup_levels:
            raise BadParams("n_events must be >= 0 and start_price > warmup_levels")
        if self.style not in ("around_best", "uniform_band"):
            raise BadParams(f"unknown style {self.style!r}")
        if not 0 <= self.cancel_prob < 1 or self.book_target < 1:
            raise BadParams("cancel_prob must be in [0, 1) and book_target >= 1")


class _LiveSet:
    """Constant-time random pick / removal over live order ids."""

    def __init__(self):
        self.ids: list[int] = []
        self.pos: dict[int, int] = {}
        self.side: dict[int, Side] = {}

    def add(self, oid: int, side: Side) -> None:
        self.pos[oid] = len(self.ids)
        self.ids.append(oid)
        self.side[oid] = side

    def remove(self, oid: int) -> None:
        i = self.pos.pop(oid)
        last = self.ids.pop()
        if last != oid:
            self.ids[i] = last
            self.pos[last] = i
        del self.side[oid]

    def __len__(self) -> int:
        return len(self.ids)

    def pick(self, rng) -> int:
        return self.ids[int(rng.integers(len(self.ids)))]


def gen_order_flow(spec: OrderFlowSpec, seed=0) -> SessionStream:
    """Random submissions and cancellations, guaranteed replayable.

    Every cancellation references a then-live order (the generator runs
    its own book to know which orders have survived matching).
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    book = BookState()
    live = _LiveSet()
    remaining: dict[int, int] = {}
    events: list[OrderEvent] = []
    t = spec.start_time_cs
    next_id = 1

    def submit(side: Side, price: int, qty: int) -> None:
        nonlocal next_id
        event = OrderEvent(t, next_id, side, price, qty, EventKind.SUBMIT)
        next_id += 1
        fills = book.apply_event(event)
        filled = 0
        for fill in fills:
            filled += fill.quantity
            remaining[fill.resting_id] -= fill.quantity
            if remaining[fill.resting_id] == 0:
                live.remove(fill.resting_id)
                del remaining[fill.resting_id]
        if filled < qty:
            live.add(event.order_id, side)
            remaining[event.order_id] = qty - filled
        events.append(event)

    def advance() -> None:
        nonlocal t
        t += int(round(rng.exponential(spec.mean_gap_cs)))

    # seed both sides with a few standing levels
    for k in range(1, spec.warmup_levels + 1):
        submit(Side.BUY, spec.start_price - k, int(rng.integers(1, 11)) * 100)
        advance()
        submit(Side.SELL, spec.start_price + k, int(rng.integers(1, 11)) * 100)
        advance()

    n_main = max(0, spec.n_events - len(events))
    for _ in range(n_main):
        # cancel intensity scales with book size so the book neither
        # empties nor saturates over long streams
        p_cancel = min(0.9, spec.cancel_prob * len(live) / spec.book_target)
        if len(live) > 0 and rng.random() < p_cancel:
            oid = live.pick(rng)
            side = live.side[oid]
            events.append(OrderEvent(t, oid, side, 0, 0, EventKind.CANCEL))
            book.apply_event(events[-1])
            live.remove(oid)
            del remaining[oid]
            advance()
            continue

        side = Side.BUY if rng.random() < 0.5 else Side.SELL
        sign = 1 if side is Side.BUY else -1
        qty = int(rng.integers(1, 11)) * 100
        if spec.style == "uniform_band":
            price = spec.start_price + int(rng.integers(-(spec.band // 2), spec.band // 2 + 1))
        else:
            best_same, _ = book.best_two(side)
            best_opp, _ = book.best_two(Side.SELL if side is Side.BUY else Side.BUY)
            ref = best_same
            if ref is None:
                ref = (best_opp - sign) if best_opp is not None else spec.start_price - sign
            u = rng.random()
            if best_opp is not None and u < spec.cross_prob:
                price = best_opp  # marketable against the current best
            elif u < spec.cross_prob + spec.improve_prob:
                price = ref + sign  # one tick inside the current best
                if best_opp is not None and (price - best_opp) * sign >= 0:
                    price = best_opp
            else:
                offset = min(int(rng.geometric(spec.depth_geom_p)) - 1, spec.max_offset)
                price = ref - sign * offset
        price = max(price, 1)
        submit(side, price, qty)
        advance()

    # trim in case warmup already exceeded the requested length
    events = events[: spec.n_events] if spec.n_events < len(events) else events
    return SessionStream(spec.instrument, None, events)
