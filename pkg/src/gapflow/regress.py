"""Robust line fitting and the cross-sectional comparison report.

The fit is iteratively reweighted least squares with Tukey bisquare
weights (tuning constant 4.685) and scale set by the normalized median
absolute deviation of the residuals, restarted each iteration. P-values
come from large-sample t statistics on the final weighted fit with
n - 2 degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateX, InsufficientData

BISQUARE_TUNING = 4.685
MAD_TO_SIGMA = 0.6744897501960817  # Phi^-1(3/4)


@dataclass
class RegressionResult:
    intercept: float
    slope: float
    p_intercept: float
    p_slope: float
    n: int
    weights: np.ndarray
    se_intercept: float
    se_slope: float
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "slope": self.slope,
            "p_intercept": self.p_intercept,
            "p_slope": self.p_slope,
            "n": self.n,
            "se_intercept": self.se_intercept,
            "se_slope": self.se_slope,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _weighted_line(x, y, w):
    sw = w.sum()
    if sw <= 0:
        return None
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    if sxx <= 0:
        return None
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    return intercept, slope, xm, sxx, sw


def _coef_pvalue(coef, se, dof):
    if se == 0.0:
        return 0.0 if coef != 0.0 else 1.0
    t = coef / se
    return float(2.0 * stats.t.sf(abs(t), dof))


def robust_fit(x, y, tuning: float = BISQUARE_TUNING, tol: float = 1e-8, max_iter: int = 50) -> RegressionResult:
    """Bisquare IRLS fit of y = intercept + slope * x.

    Iterates until the largest weight change drops below ``tol`` or
    ``max_iter`` rounds; a run that never converges keeps the last
    iterate with ``converged=False``. A residual scale of zero (perfect
    fit) short-circuits with unit weights.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    n = x.size
    if n < 3:
        raise InsufficientData(f"need at least 3 points, got {n}")
    if np.ptp(x) == 0:
        raise DegenerateX("x is constant")

    w = np.ones(n)
    converged = False
    iterations = 0
    intercept = slope = 0.0
    for iterations in range(1, max_iter + 1):
        fitted = _weighted_line(x, y, w)
        if fitted is None:
            converged = False
            break
        intercept, slope = fitted[0], fitted[1]
        resid = y - intercept - slope * x
        scale = np.median(np.abs(resid)) / MAD_TO_SIGMA
        if scale == 0.0:
            w = np.ones(n)
            converged = True
            break
        u = resid / (tuning * scale)
        w_new = np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)
        if np.max(np.abs(w_new - w)) < tol:
            w = w_new
            converged = True
            break
        w = w_new

    final = _weighted_line(x, y, w)
    if final is None:
        raise DegenerateX("robust weights eliminated all points")
    intercept, slope, xm, sxx, sw = final
    resid = y - intercept - slope * x
    dof = n - 2
    sigma2 = (w * resid**2).sum() / dof
    se_slope = float(np.sqrt(sigma2 / sxx))
    se_intercept = float(np.sqrt(sigma2 * (1.0 / sw + xm**2 / sxx)))
    return RegressionResult(
        intercept=float(intercept),
        slope=float(slope),
        p_intercept=_coef_pvalue(intercept, se_intercept, dof),
        p_slope=_coef_pvalue(slope, se_slope, dof),
        n=n,
        weights=w,
        se_intercept=se_intercept,
        se_slope=se_slope,
        converged=converged,
        iterations=iterations,
    )


# cross-section pairing: (report key, buy column, sell column)
PAIRED_STATS = (
    ("tail_exponent", "tail_exponent_buy", "tail_exponent_sell"),
    ("hurst_dma", "hurst_dma_buy", "hurst_dma_sell"),
    ("hurst_dfa", "hurst_dfa_buy", "hurst_dfa_sell"),
    ("delta_alpha", "delta_alpha_buy", "delta_alpha_sell"),
)

# regressions mirroring the per-stock comparisons: sell-vs-buy for each
# statistic plus the cross-method Hurst comparisons
REGRESSIONS = (
    ("tail_exponent_sell_vs_buy", "tail_exponent_buy", "tail_exponent_sell"),
    ("hurst_dma_sell_vs_buy", "hurst_dma_buy", "hurst_dma_sell"),
    ("hurst_dfa_sell_vs_buy", "hurst_dfa_buy", "hurst_dfa_sell"),
    ("hurst_dfa_vs_dma_buy", "hurst_dma_buy", "hurst_dfa_buy"),
    ("hurst_dfa_vs_dma_sell", "hurst_dma_sell", "hurst_dfa_sell"),
    ("delta_alpha_sell_vs_buy", "delta_alpha_buy", "delta_alpha_sell"),
)


def cross_section_report(per_stock: dict[str, dict]) -> dict:
    """Pool per-instrument statistics into comparison tables.

    ``per_stock`` maps instrument -> flat dict with any of the columns
    named in :data:`PAIRED_STATS`. Emits per-statistic tables, means and
    stds across instruments, counts of sell > buy, and the robust
    regressions; regressions that cannot be fit (too few points,
    degenerate x) are flagged rather than fatal. Instrument order does
    not affect any number.
    """
    if len(per_stock) < 2:
        raise InsufficientData(f"cross-section needs >= 2 instruments, got {len(per_stock)}")
    instruments = sorted(per_stock)

    def column(col: str) -> np.ndarray:
        return np.array([per_stock[i].get(col, np.nan) for i in instruments], dtype=float)

    report: dict = {"instruments": instruments, "tables": {}, "summary": {}, "regressions": {}}
    for key, buy_col, sell_col in PAIRED_STATS:
        buy = column(buy_col)
        sell = column(sell_col)
        ok = np.isfinite(buy) & np.isfinite(sell)
        if not ok.any():
            continue
        report["tables"][key] = {
            "instrument": [i for i, m in zip(instruments, ok) if m],
            "buy": buy[ok].tolist(),
            "sell": sell[ok].tolist(),
        }
        report["summary"][key] = {
            "buy_mean": float(buy[ok].mean()),
            "buy_std": float(buy[ok].std()),
            "sell_mean": float(sell[ok].mean()),
            "sell_std": float(sell[ok].std()),
            "n": int(ok.sum()),
            "n_sell_gt_buy": int(np.sum(sell[ok] > buy[ok])),
        }
    if not report["tables"]:
        raise InsufficientData("no paired statistics present in any instrument")

    for name, x_col, y_col in REGRESSIONS:
        x = column(x_col)
        y = column(y_col)
        ok = np.isfinite(x) & np.isfinite(y)
        try:
            result = robust_fit(x[ok], y[ok])
            report["regressions"][name] = result.to_dict()
        except (InsufficientData, DegenerateX) as exc:
            report["regressions"][name] = {"degenerate": True, "reason": str(exc)}
    return report


def format_cross_section(report: dict) -> str:
    """Aligned-text rendering of a cross-section report."""
    lines = []
    for key, table in report["tables"].items():
        lines.append(key)
        lines.append(f"  {'instrument':<12} {'buy':>10} {'sell':>10}")
        for inst, b, s in zip(table["instrument"], table["buy"], table["sell"]):
            lines.append(f"  {inst:<12} {b:>10.4f} {s:>10.4f}")
        summ = report["summary"][key]
        lines.append(
            f"  {'mean +- std':<12} {summ['buy_mean']:>10.4f} {summ['sell_mean']:>10.4f}"
            f"   (buy std {summ['buy_std']:.4f}, sell std {summ['sell_std']:.4f},"
            f" sell>buy {summ['n_sell_gt_buy']}/{summ['n']})"
        )
        lines.append("")
    lines.append("regressions (y = a + b x)")
    for name, reg in report["regressions"].items():
        if reg.get("degenerate"):
            lines.append(f"  {name:<28} degenerate: {reg['reason']}")
        else:
            lines.append(
                f"  {name:<28} a={reg['intercept']:+.4f} (p={reg['p_intercept']:.4f})"
                f"  b={reg['slope']:+.4f} (p={reg['p_slope']:.4f})  n={reg['n']}"
            )
    return "\n".join(lines) + "\n"
