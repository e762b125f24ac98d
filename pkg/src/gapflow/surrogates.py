"""Shuffle surrogates: destroy temporal order, keep the value distribution.

Comparing a statistic on the original series against its distribution
over random permutations separates correlation-driven structure from
purely distributional effects.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import multifractal, scaling
from .errors import GapflowError

log = logging.getLogger(__name__)

STATISTICS = ("H_DFA", "H_DMA", "delta_alpha")


def shuffle_series(series, seed) -> np.ndarray:
    """Uniform random permutation of the input (Fisher-Yates).

    The value multiset is preserved exactly; (seed) fully determines the
    permutation.
    """
    x = np.asarray(series)
    if x.size == 0:
        raise ValueError("cannot shuffle an empty series")
    rng = np.random.default_rng(seed)
    return x[rng.permutation(x.size)]


@dataclass
class SurrogateReport:
    n_shuffles: int
    statistic_name: str
    original_value: float
    surrogate_mean: float
    surrogate_std: float
    surrogate_values: np.ndarray
    n_failed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_shuffles": self.n_shuffles,
            "statistic_name": self.statistic_name,
            "original_value": self.original_value,
            "surrogate_mean": self.surrogate_mean,
            "surrogate_std": self.surrogate_std,
            "surrogate_values": np.asarray(self.surrogate_values).tolist(),
            "n_failed": self.n_failed,
        }


def _resolve_statistic(statistic, params: dict | None):
    p = dict(params or {})
    if callable(statistic):
        return getattr(statistic, "__name__", "statistic"), statistic
    if statistic == "H_DFA":
        return statistic, lambda x: scaling.hurst_dfa(x, **p).hurst
    if statistic == "H_DMA":
        return statistic, lambda x: scaling.hurst_dma(x, **p).hurst
    if statistic == "delta_alpha":
        return statistic, lambda x: multifractal.spectrum(x, **p).delta_alpha
    raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS} or a callable")


def surrogate_test(
    series,
    statistic,
    n_shuffles: int = 100,
    master_seed: int = 0,
    statistic_params: dict | None = None,
) -> SurrogateReport:
    """Evaluate ``statistic`` on the original series and on ``n_shuffles``
    independent permutations.

    Shuffle i is seeded from (master_seed, i), so serial and parallel
    execution give bit-identical reports. Per-shuffle analysis failures
    are recorded as NaN and skipped in the summary; if every shuffle
    fails the error propagates.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    x = np.asarray(series, dtype=float)
    name, fn = _resolve_statistic(statistic, statistic_params)
    original = float(fn(x))
    values = np.full(n_shuffles, np.nan)
    last_error: GapflowError | None = None
    for i in range(n_shuffles):
        shuffled = shuffle_series(x, seed=[master_seed, i])
        try:
            values[i] = fn(shuffled)
        except GapflowError as exc:
            last_error = exc
            log.warning("shuffle %d failed: %s", i, exc)
    ok = values[np.isfinite(values)]
    if ok.size == 0:
        raise last_error if last_error is not None else GapflowError("all shuffles failed")
    return SurrogateReport(
        n_shuffles=n_shuffles,
        statistic_name=name,
        original_value=original,
        surrogate_mean=float(ok.mean()),
        surrogate_std=float(ok.std()),
        surrogate_values=values,
        n_failed=int(n_shuffles - ok.size),
    )
