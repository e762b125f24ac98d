"""Long-range correlation estimators for event-time series.

Both estimators integrate the mean-centered series into a profile, remove
a local trend at each window size s (a least-squares polynomial for the
detrended fluctuation analysis, a moving average for the detrending
moving average), and measure how the root-mean-square residual grows
with s. The slope of log F(s) vs log s is the Hurst exponent.

Windows partition the profile from the front; when the length is not a
multiple of s the same number of windows is added from the back end, so
no data is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvenScaleForCentered, ScaleOutOfRange, TooFewScales, TooShort

DMA_MODES = ("centered", "backward", "forward")


@dataclass(frozen=True)
class Profile:
    """Cumulative sum of a mean-centered series."""

    values: np.ndarray


@dataclass
class FluctuationCurve:
    method: str
    scales: np.ndarray
    F: np.ndarray
    q: float = 2.0
    # share of zero-variance windows per scale; populated by the q-order analysis
    zero_fraction: np.ndarray | None = None


@dataclass
class HurstEstimate:
    hurst: float
    stderr: float
    fit_range: tuple[int, int]
    r_squared: float
    n_scales: int
    intercept: float


def build_profile(series) -> Profile:
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 2:
        raise TooShort(f"need at least 2 points, got {x.size}")
    return Profile(np.cumsum(x - x.mean()))


def default_scales(n: int, s_min: int = 10, s_max: int | None = None, num: int = 30, odd: bool = False) -> np.ndarray:
    """~``num`` log-spaced integer window sizes in [s_min, n/10]."""
    if s_max is None:
        s_max = n // 10
    if s_max <= s_min:
        raise ScaleOutOfRange(f"series of length {n} leaves no scales in [{s_min}, {s_max}]")
    raw = np.logspace(np.log10(s_min), np.log10(s_max), num)
    scales = np.unique(np.rint(raw).astype(np.int64))
    if odd:
        scales = np.unique(np.maximum(scales | 1, 3))
    return scales


def _check_scales(scales, n: int, s_floor: int) -> np.ndarray:
    s = np.asarray(scales, dtype=np.int64).ravel()
    if s.size == 0 or np.any(np.diff(s) <= 0):
        raise ScaleOutOfRange("scales must be non-empty and strictly increasing")
    if s[0] < s_floor or s[-1] > n // 4:
        raise ScaleOutOfRange(f"scales must lie in [{s_floor}, n/4 = {n // 4}], got [{s[0]}, {s[-1]}]")
    return s


def _window_starts(n: int, s: int) -> np.ndarray:
    count = n // s
    starts = np.arange(count, dtype=np.int64) * s
    if n % s:
        starts = np.concatenate([starts, n - count * s + starts])
    return starts


def _poly_window_variances(values: np.ndarray, s: int, order: int) -> np.ndarray:
    """Mean squared residual of an order-``order`` polynomial fit per window."""
    starts = _window_starts(values.size, s)
    windows = values[starts[:, None] + np.arange(s)]
    t = np.arange(s, dtype=float)
    t = 2.0 * t / (s - 1) - 1.0  # rescale for conditioning
    design, _ = np.linalg.qr(np.vander(t, order + 1))
    resid = windows - (windows @ design) @ design.T
    return np.mean(resid * resid, axis=1)


def dfa_fluctuation(profile: Profile, scales, order: int = 1) -> FluctuationCurve:
    """Second-order detrended fluctuation function F(s).

    Requires ``order + 2 <= s <= N/4`` for every scale.
    """
    values = profile.values
    s_arr = _check_scales(scales, values.size, order + 2)
    F = np.empty(s_arr.size)
    for i, s in enumerate(s_arr):
        F[i] = np.sqrt(np.mean(_poly_window_variances(values, int(s), order)))
    return FluctuationCurve(method=f"dfa{order}", scales=s_arr, F=F)


def _moving_average_residuals(values: np.ndarray, s: int, mode: str) -> np.ndarray:
    n = values.size
    csum = np.concatenate(([0.0], np.cumsum(values)))
    ma = (csum[s:] - csum[:-s]) / s  # ma[i] = mean(values[i : i + s])
    if mode == "centered":
        half = (s - 1) // 2
        return values[half : n - half] - ma
    if mode == "backward":
        return values[s - 1 :] - ma
    return values[: n - s + 1] - ma  # forward


def dma_fluctuation(profile: Profile, scales, mode: str = "centered") -> FluctuationCurve:
    """Moving-average detrended fluctuation function.

    ``mode`` picks the window alignment; the centered variant needs odd
    scales (>= 3). Edge positions without a full window are excluded,
    and the remaining residuals are aggregated window-wise exactly as in
    the polynomial variant.
    """
    if mode not in DMA_MODES:
        raise ValueError(f"mode must be one of {DMA_MODES}, got {mode!r}")
    values = profile.values
    s_arr = _check_scales(scales, values.size, 2 if mode != "centered" else 3)
    if mode == "centered" and np.any(s_arr % 2 == 0):
        raise EvenScaleForCentered("centered mode requires odd scales")
    F = np.empty(s_arr.size)
    for i, s in enumerate(s_arr):
        resid = _moving_average_residuals(values, int(s), mode)
        starts = _window_starts(resid.size, int(s))
        windows = resid[starts[:, None] + np.arange(int(s))]
        F[i] = np.sqrt(np.mean(np.mean(windows * windows, axis=1)))
    return FluctuationCurve(method=f"dma-{mode}", scales=s_arr, F=F)


def fit_hurst(curve: FluctuationCurve, fit_range: tuple[float, float] | None = None) -> HurstEstimate:
    """Least-squares slope of log F vs log s.

    Scales with F == 0 (perfectly detrended) are excluded from the fit;
    at least 5 usable scales are required.
    """
    s = curve.scales.astype(float)
    mask = np.isfinite(curve.F) & (curve.F > 0)
    if fit_range is not None:
        lo, hi = fit_range
        mask &= (s >= lo) & (s <= hi)
    if mask.sum() < 5:
        raise TooFewScales(f"only {int(mask.sum())} usable scales in fit range")
    x = np.log(s[mask])
    y = np.log(curve.F[mask])
    xc = x - x.mean()
    sxx = xc @ xc
    slope = (xc @ y) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - intercept - slope * x
    ssr = resid @ resid
    k = x.size
    stderr = np.sqrt(ssr / (k - 2) / sxx) if k > 2 else 0.0
    sst = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - ssr / sst if sst > 0 else 1.0
    used = curve.scales[mask]
    return HurstEstimate(
        hurst=float(slope),
        stderr=float(stderr),
        fit_range=(int(used[0]), int(used[-1])),
        r_squared=float(r_squared),
        n_scales=k,
        intercept=float(intercept),
    )


def hurst_dfa(series, scales=None, order: int = 1, fit_range=None) -> HurstEstimate:
    """Convenience: profile + DFA + log-log fit in one call."""
    profile = build_profile(series)
    if scales is None:
        scales = default_scales(profile.values.size)
    return fit_hurst(dfa_fluctuation(profile, scales, order), fit_range)


def hurst_dma(series, scales=None, mode: str = "centered", fit_range=None) -> HurstEstimate:
    """Convenience: profile + DMA + log-log fit in one call."""
    profile = build_profile(series)
    if scales is None:
        scales = default_scales(profile.values.size, odd=(mode == "centered"))
    return fit_hurst(dma_fluctuation(profile, scales, mode), fit_range)
