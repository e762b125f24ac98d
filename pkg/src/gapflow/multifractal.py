"""q-order fluctuation analysis and the singularity spectrum.

Generalizes the detrended fluctuation analysis by aggregating the
per-window RMS residuals at every moment order q. The slope h(q) of each
q-order fluctuation function gives the mass exponents tau(q) = q h(q) - 1,
whose Legendre transform yields the singularity spectrum f(alpha); the
spectrum width delta_alpha measures multifractal strength.

The q = 2 curve is computed through exactly the same operations as
:func:`gapflow.scaling.dfa_fluctuation`, so the two agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import AllBoxesDegenerate, GridTooSparse, TooFewScales
from .scaling import (
    FluctuationCurve,
    Profile,
    _check_scales,
    _poly_window_variances,
    build_profile,
    default_scales,
    fit_hurst,
)

# above this share of zero-variance windows at any scale, negative-q
# exponents are flagged unreliable
ZERO_WINDOW_TOLERANCE = 0.01


def default_q_grid() -> np.ndarray:
    """q from -4 to 4 in steps of 0.25 (includes 0 and 2)."""
    return np.linspace(-4.0, 4.0, 33)


def validate_q_grid(q_grid) -> np.ndarray:
    q = np.asarray(q_grid, dtype=float).ravel()
    if q.size < 2 or np.any(np.diff(q) <= 0):
        raise ValueError("q grid must be strictly increasing")
    if not (np.any(q == 0.0) and np.any(q == 2.0)):
        raise ValueError("q grid must contain 0 (log-average order) and 2 (the plain DFA order)")
    return q


def mfdfa_fluctuation(profile: Profile, scales, q_grid, order: int = 1) -> list[FluctuationCurve]:
    """q-order fluctuation functions F_q(s), one curve per q.

    For q != 0 the window RMS values are averaged at power q and the mean
    is taken to the 1/q; q = 0 uses the log-average limit. Zero-variance
    windows contribute nothing for q > 0 and are excluded (and counted)
    for q <= 0; a scale whose windows are all degenerate raises
    :class:`AllBoxesDegenerate`.
    """
    q = validate_q_grid(q_grid)
    values = profile.values
    s_arr = _check_scales(scales, values.size, order + 2)

    variances = []  # per scale: array of window mean-square residuals
    zero_frac = np.empty(s_arr.size)
    for i, s in enumerate(s_arr):
        v = _poly_window_variances(values, int(s), order)
        if not np.any(v > 0):
            raise AllBoxesDegenerate(f"all windows perfectly detrended at scale {s}")
        variances.append(v)
        zero_frac[i] = 1.0 - np.count_nonzero(v) / v.size

    curves = []
    for qi in q:
        F = np.empty(s_arr.size)
        for i, v in enumerate(variances):
            if qi == 2.0:
                F[i] = np.sqrt(np.mean(v))  # same ops as the plain DFA path
                continue
            pos = v[v > 0]
            log_pos = np.log(pos)
            if qi == 0.0:
                F[i] = np.exp(0.5 * np.mean(log_pos))
            elif qi > 0:
                F[i] = np.exp((logsumexp(0.5 * qi * log_pos) - np.log(v.size)) / qi)
            else:
                F[i] = np.exp((logsumexp(0.5 * qi * log_pos) - np.log(pos.size)) / qi)
        curves.append(
            FluctuationCurve(method=f"mfdfa{order}", scales=s_arr, F=F, q=float(qi), zero_fraction=zero_frac.copy())
        )
    return curves


def mass_exponents(q, h) -> np.ndarray:
    """tau(q) = q h(q) - 1, pointwise."""
    return np.asarray(q, dtype=float) * np.asarray(h, dtype=float) - 1.0


def legendre_spectrum(q, tau) -> tuple[np.ndarray, np.ndarray, float]:
    """Singularity strengths alpha = dtau/dq and spectrum f = q alpha - tau.

    alpha uses central finite differences with one-sided stencils at the
    grid ends; returns (alpha, f_alpha, delta_alpha).
    """
    q = np.asarray(q, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if q.size < 3:
        raise GridTooSparse(f"need at least 3 grid points, got {q.size}")
    alpha = np.empty_like(tau)
    alpha[1:-1] = (tau[2:] - tau[:-2]) / (q[2:] - q[:-2])
    alpha[0] = (tau[1] - tau[0]) / (q[1] - q[0])
    alpha[-1] = (tau[-1] - tau[-2]) / (q[-1] - q[-2])
    f_alpha = q * alpha - tau
    return alpha, f_alpha, float(alpha.max() - alpha.min())


@dataclass
class MultifractalSpectrum:
    """Full q-order analysis of one series."""

    q: np.ndarray
    hq: np.ndarray
    hq_stderr: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    delta_alpha: float
    unreliable_q: list = field(default_factory=list)  # q with too many zero windows
    warnings: list = field(default_factory=list)

    def hurst(self) -> float:
        """h at q = 2; identical to the plain DFA exponent."""
        return float(self.hq[self.q == 2.0][0])

    def to_dict(self) -> dict:
        return {
            "q": self.q.tolist(),
            "hq": self.hq.tolist(),
            "hq_stderr": self.hq_stderr.tolist(),
            "tau": self.tau.tolist(),
            "alpha": self.alpha.tolist(),
            "f_alpha": self.f_alpha.tolist(),
            "delta_alpha": self.delta_alpha,
            "unreliable_q": self.unreliable_q,
            "warnings": self.warnings,
        }


def _consistency_warnings(q, tau, alpha, f_alpha) -> list[str]:
    out = []
    if np.any(np.diff(tau) < -1e-6):
        out.append("tau(q) is not non-decreasing")
    if np.any(np.diff(alpha) > 1e-6):
        out.append("alpha(q) is not non-increasing (tau not concave)")
    if np.any(f_alpha > 1.0 + 0.05):
        out.append("f(alpha) exceeds 1 beyond estimation tolerance")
    return out


def spectrum(series, q_grid=None, scales=None, order: int = 1, fit_range=None) -> MultifractalSpectrum:
    """Run the whole chain on a raw series: profile, F_q(s), h(q), tau, f(alpha)."""
    profile = build_profile(series)
    if scales is None:
        scales = default_scales(profile.values.size)
    if q_grid is None:
        q_grid = default_q_grid()
    curves = mfdfa_fluctuation(profile, scales, q_grid, order)

    q = np.array([c.q for c in curves])
    hq = np.empty(q.size)
    stderr = np.empty(q.size)
    unreliable = []
    for i, c in enumerate(curves):
        est = fit_hurst(c, fit_range)
        hq[i] = est.hurst
        stderr[i] = est.stderr
        if c.q <= 0 and c.zero_fraction is not None and np.any(c.zero_fraction > ZERO_WINDOW_TOLERANCE):
            unreliable.append(float(c.q))
    tau = mass_exponents(q, hq)
    alpha, f_alpha, width = legendre_spectrum(q, tau)
    return MultifractalSpectrum(
        q=q,
        hq=hq,
        hq_stderr=stderr,
        tau=tau,
        alpha=alpha,
        f_alpha=f_alpha,
        delta_alpha=width,
        unreliable_q=unreliable,
        warnings=_consistency_warnings(q, tau, alpha, f_alpha),
    )
