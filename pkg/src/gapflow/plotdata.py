"""Plot-ready CSV exports derived from a finished pipeline run.

Nothing here renders charts; the outputs are tables meant for a log-log
gap-density figure with its fitted tail overlay, fluctuation-function
figures, mass-exponent and singularity-spectrum figures, and buy-vs-sell
scatter figures.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import MissingAnalysis
from .gaps import load_gap_series
from .pipeline import pooled_gap_values

SECTIONS = ("pdf", "fluctuation", "mfdfa", "scatter")


def log_binned_pdf(values, n_bins: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Empirical density over bins equal-width in log value.

    Returns (bin centers, density); centers are the geometric bin means.
    Empty bins are dropped.
    """
    x = np.asarray(values, dtype=float)
    x = x[x > 0]
    if x.size == 0:
        raise ValueError("no positive values to bin")
    lo, hi = x.min(), x.max()
    if lo == hi:
        return np.array([lo]), np.array([np.inf])
    edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
    edges[-1] = np.nextafter(edges[-1], np.inf)  # keep the max in the last bin
    counts, _ = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    keep = counts > 0
    density = counts[keep] / (x.size * widths[keep])
    return centers[keep], density


def tail_density_overlay(centers: np.ndarray, fit: dict, n_total: int) -> np.ndarray:
    """Fitted tail density at the given abscissas (NaN below the threshold).

    The power-law density exponent/x_min * (g/x_min)^-(exponent+1) is
    weighted by the tail share n_tail/n_total so it overlays the full
    empirical density.
    """
    x_min, exponent, n_tail = fit["x_min"], fit["exponent"], fit["n_tail"]
    out = np.full(centers.size, np.nan)
    tail = centers >= x_min
    out[tail] = (n_tail / n_total) * (exponent / x_min) * (centers[tail] / x_min) ** (-exponent - 1.0)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    return repr(float(value))


def emit_plot_data(report_dir, out_dir=None, sections: list[str] | None = None, n_bins: int = 40) -> list[Path]:
    """Write plot tables for every completed instrument under ``report_dir``.

    ``sections`` restricts the export; asking for a section whose
    analysis was disabled raises :class:`MissingAnalysis`. With the
    default (None) only the available sections are emitted. Returns the
    written paths.
    """
    report_dir = Path(report_dir)
    manifest_path = report_dir / "manifest.json"
    if not manifest_path.exists():
        raise MissingAnalysis(f"no manifest.json under {report_dir}; run the pipeline first")
    manifest = json.loads(manifest_path.read_text())
    out_root = Path(out_dir) if out_dir else report_dir / "plots"
    explicit = sections is not None
    wanted = list(sections) if explicit else list(SECTIONS)
    for section in wanted:
        if section not in SECTIONS:
            raise ValueError(f"unknown section {section!r}; expected subset of {SECTIONS}")

    written: list[Path] = []
    for instrument in manifest["completed"]:
        report = json.loads((report_dir / instrument / "report.json").read_text())
        for side, side_report in sorted(report["sides"].items()):
            tag = f"{instrument}_{side}"
            if "pdf" in wanted:
                values = _side_values(report_dir, instrument, side)
                if values is None or side_report.get("powerlaw") is None:
                    if explicit:
                        raise MissingAnalysis(f"tail fit unavailable for {tag}")
                else:
                    centers, density = log_binned_pdf(values, n_bins)
                    overlay = tail_density_overlay(centers, side_report["powerlaw"], values.size)
                    _write_csv(
                        out_root / f"pdf_{tag}.csv",
                        ["gap", "density", "fit_density"],
                        (
                            [_fmt(c), _fmt(d), "" if np.isnan(f) else _fmt(f)]
                            for c, d, f in zip(centers, density, overlay)
                        ),
                    )
                    written.append(out_root / f"pdf_{tag}.csv")
            if "fluctuation" in wanted:
                curves = side_report.get("curves") or {}
                if not curves and explicit:
                    raise MissingAnalysis(f"no fluctuation curves for {tag}")
                for method, curve in sorted(curves.items()):
                    path = out_root / f"fs_{method}_{tag}.csv"
                    _write_csv(
                        path,
                        ["s", "F"],
                        ([int(s), _fmt(F)] for s, F in zip(curve["scales"], curve["F"])),
                    )
                    written.append(path)
            if "mfdfa" in wanted:
                mf = side_report.get("mfdfa")
                if mf is None:
                    if explicit:
                        raise MissingAnalysis(f"q-order analysis disabled for {tag}")
                else:
                    path = out_root / f"fqs_{tag}.csv"
                    rows = []
                    for qi, F_row in zip(mf["q"], mf["curves"]["F_by_q"]):
                        for s, F in zip(mf["curves"]["scales"], F_row):
                            rows.append([_fmt(qi), int(s), _fmt(F)])
                    _write_csv(path, ["q", "s", "F"], rows)
                    written.append(path)
                    path = out_root / f"tau_{tag}.csv"
                    _write_csv(path, ["q", "tau"], ([_fmt(q), _fmt(t)] for q, t in zip(mf["q"], mf["tau"])))
                    written.append(path)
                    path = out_root / f"falpha_{tag}.csv"
                    _write_csv(
                        path,
                        ["alpha", "f"],
                        ([_fmt(a), _fmt(f)] for a, f in zip(mf["alpha"], mf["f_alpha"])),
                    )
                    written.append(path)

    if "scatter" in wanted:
        cross_path = report_dir / "cross_section.json"
        if not cross_path.exists():
            if explicit:
                raise MissingAnalysis("no cross-section report (needs >= 2 instruments and regressions enabled)")
        else:
            cross = json.loads(cross_path.read_text())
            for stat, table in sorted(cross.get("tables", {}).items()):
                path = out_root / f"scatter_{stat}.csv"
                _write_csv(
                    path,
                    ["instrument", "buy", "sell"],
                    (
                        [inst, _fmt(b), _fmt(s)]
                        for inst, b, s in zip(table["instrument"], table["buy"], table["sell"])
                    ),
                )
                written.append(path)
            ensemble = cross.get("ensemble") or {}
            pooled = pooled_gap_values(report_dir, manifest["completed"]) if ensemble else {}
            for side, fit in sorted(ensemble.items()):
                if "x_min" not in fit or side not in pooled:
                    continue
                centers, density = log_binned_pdf(pooled[side], n_bins)
                overlay = tail_density_overlay(centers, fit, pooled[side].size)
                path = out_root / f"pdf_ensemble_{side}.csv"
                _write_csv(
                    path,
                    ["gap", "density", "fit_density"],
                    (
                        [_fmt(c), _fmt(d), "" if np.isnan(f) else _fmt(f)]
                        for c, d, f in zip(centers, density, overlay)
                    ),
                )
                written.append(path)
    return written


def _side_values(report_dir: Path, instrument: str, side: str) -> np.ndarray | None:
    if side in ("buy", "sell"):
        path = report_dir / instrument / f"gaps_{side}.csv"
        if not path.exists():
            return None
        return load_gap_series(path, instrument=instrument).defined_gaps()
    path = report_dir / instrument / "series.csv"
    if not path.exists():
        return None
    return np.loadtxt(path)
