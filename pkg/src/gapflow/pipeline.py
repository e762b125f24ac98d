"""End-to-end orchestration: ingest or synthesize order flow, replay,
extract gaps, run the enabled analyses, and write machine-readable
reports.

Every report embeds the full serialized configuration, all randomness
derives from the master seed plus stable per-instrument indexes, and no
output carries wall-clock state, so identical (config, seed) runs
produce byte-identical files. Instruments are independent jobs; deleting
one instrument's outputs and rerunning regenerates them without touching
anything else.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from . import multifractal, powerlaw, scaling, surrogates
from .errors import GapflowError, InsufficientData
from .gaps import GapSeries, extract_gap_series, load_gap_series, summarize_gaps, write_gap_series
from .orderflow import Side, parse_order_flow, write_order_flow
from .regress import cross_section_report, format_cross_section
from .synth import (
    OrderFlowSpec,
    gen_binomial_cascade,
    gen_fgn,
    gen_iid_gaussian,
    gen_order_flow,
    gen_pareto,
    gen_pareto_mixture,
)

log = logging.getLogger(__name__)

ENV_WORKERS = "GAPFLOW_WORKERS"
ENV_OUTPUT_DIR = "GAPFLOW_OUTPUT_DIR"


# --- configuration -----------------------------------------------------------


class GeneratorConfig(BaseModel):
    """Synthetic input in place of order-flow files."""

    kind: Literal["order_flow", "fgn", "pareto", "pareto_mixture", "cascade", "iid_gaussian"]
    length: int = Field(default=100_000, ge=1)
    count: int = Field(default=1, ge=1)  # how many instruments to synthesize
    prefix: str = "SYN"
    seed: Optional[int] = None  # defaults to the master seed
    # fgn
    hurst: float = Field(default=0.75, gt=0.0, lt=1.0)
    # pareto / pareto_mixture
    exponent: float = Field(default=3.0, gt=0.0)
    x_min: float = Field(default=0.001, gt=0.0)
    body_fraction: float = Field(default=0.5, ge=0.0, lt=1.0)
    # cascade
    p: float = Field(default=0.3, gt=0.0, lt=1.0)
    levels: int = Field(default=16, ge=8)
    # order_flow extras
    start_price: int = Field(default=1000, ge=2)
    style: Literal["around_best", "uniform_band"] = "around_best"


class ScalingParams(BaseModel):
    s_min: int = Field(default=10, ge=3)
    s_max: Optional[int] = None  # None -> series length // 10
    num_scales: int = Field(default=30, ge=5)
    dfa_order: int = Field(default=1, ge=0, le=3)
    dma_mode: Literal["centered", "backward", "forward"] = "centered"
    fit_lo: Optional[float] = None
    fit_hi: Optional[float] = None

    def fit_range(self):
        if self.fit_lo is None and self.fit_hi is None:
            return None
        return (self.fit_lo or 0.0, self.fit_hi or np.inf)

    def scales_for(self, n: int, odd: bool = False) -> np.ndarray:
        return scaling.default_scales(n, s_min=self.s_min, s_max=self.s_max, num=self.num_scales, odd=odd)


class MultifractalParams(BaseModel):
    q_min: float = -4.0
    q_max: float = 4.0
    q_step: float = Field(default=0.25, gt=0.0)

    @model_validator(mode="after")
    def _grid_is_valid(self):
        multifractal.validate_q_grid(self.grid())
        return self

    def grid(self) -> np.ndarray:
        count = int(round((self.q_max - self.q_min) / self.q_step)) + 1
        return np.linspace(self.q_min, self.q_max, count)


class PowerlawParams(BaseModel):
    tail_floor: int = Field(default=100, ge=2)
    min_distinct: int = Field(default=50, ge=2)
    max_candidates: int = Field(default=256, ge=1)
    bootstrap: bool = True
    n_bootstrap: int = Field(default=100, ge=1)


class SurrogateParams(BaseModel):
    n_shuffles: int = Field(default=100, ge=1)
    statistics: list[Literal["H_DFA", "H_DMA", "delta_alpha"]] = ["H_DFA", "H_DMA", "delta_alpha"]


class AnalysisToggles(BaseModel):
    powerlaw: bool = True
    dfa: bool = True
    dma: bool = True
    mfdfa: bool = True
    surrogates: bool = True
    regressions: bool = True


class PipelineConfig(BaseModel):
    """Fully serializable description of one pipeline run."""

    inputs: list[str] = []  # order-flow CSVs, <instrument>[_<date>].csv
    gap_inputs: list[str] = []  # gap CSVs from an earlier replay
    series_inputs: list[str] = []  # one-column series files
    generator: Optional[GeneratorConfig] = None
    tick_size: str = "0.01"
    session_minutes: Optional[float] = None  # None -> derive from timestamps
    analyses: AnalysisToggles = AnalysisToggles()
    scaling: ScalingParams = ScalingParams()
    multifractal: MultifractalParams = MultifractalParams()
    powerlaw: PowerlawParams = PowerlawParams()
    surrogates: SurrogateParams = SurrogateParams()
    seed: int = 0
    output_dir: str = ""
    workers: int = Field(default=0, ge=0)  # 0 -> env GAPFLOW_WORKERS or 1

    def resolved_output_dir(self) -> Path:
        out = self.output_dir or os.environ.get(ENV_OUTPUT_DIR, "gapflow-out")
        return Path(out)

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        return max(1, int(os.environ.get(ENV_WORKERS, "1")))


# --- helpers -----------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, Side):
        return obj.value
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


_FILE_RE = re.compile(r"^(?P<instrument>.+?)(?:_(?P<date>\d{4}-\d{2}-\d{2}|\d{8}))?$")


def group_input_files(paths: list[str]) -> dict[str, list[Path]]:
    """Group order-flow files by instrument; date suffixes order the days.

    Accepts ``<instrument>.csv`` or ``<instrument>_<YYYY-MM-DD|YYYYMMDD>.csv``.
    """
    groups: dict[str, list[tuple[str, Path]]] = {}
    for raw in paths:
        path = Path(raw)
        m = _FILE_RE.match(path.stem)
        instrument = m.group("instrument") if m else path.stem
        date_key = (m.group("date") or "") if m else ""
        groups.setdefault(instrument, []).append((date_key, path))
    return {inst: [p for _, p in sorted(entries)] for inst, entries in sorted(groups.items())}


def _concat_series(parts: list[GapSeries]) -> GapSeries:
    """Concatenate per-day series in date order; event indexes keep counting."""
    if len(parts) == 1:
        return parts[0]
    offsets = np.cumsum([0] + [len(p) for p in parts[:-1]])
    return GapSeries(
        instrument=parts[0].instrument,
        side=parts[0].side,
        event_index=np.concatenate([p.event_index + off for p, off in zip(parts, offsets)]),
        timestamp=np.concatenate([p.timestamp for p in parts]),
        gap=np.concatenate([p.gap for p in parts]),
        defined=np.concatenate([p.defined for p in parts]),
        tick_diff=np.concatenate([p.tick_diff for p in parts]),
        n_submitted=sum(p.n_submitted for p in parts),
    )


def replay_instrument(instrument: str, files: list[Path], tick_size: str) -> tuple[GapSeries, GapSeries, float, int]:
    """Replay one instrument's day files; returns (buy, sell, minutes, events).

    The book resets at each day boundary; gap series are concatenated in
    date order. Session minutes are summed per-day durations (at least
    one centisecond each).
    """
    per_day: list[tuple[GapSeries, GapSeries]] = []
    total_cs = 0
    n_events = 0
    for path in files:
        stream = parse_order_flow(path, tick_size, instrument=instrument)
        n_events += len(stream.events)
        if stream.events:
            total_cs += max(stream.events[-1].timestamp - stream.events[0].timestamp, 1)
        per_day.append(extract_gap_series(stream))
    if n_events == 0:
        raise InsufficientData(f"instrument {instrument}: no events in {len(files)} file(s)")
    buy = _concat_series([d[0] for d in per_day])
    sell = _concat_series([d[1] for d in per_day])
    return buy, sell, total_cs / 6000.0, n_events


# --- per-side analysis -------------------------------------------------------


def _analyze_values(values: np.ndarray, config: PipelineConfig, seed_path: list[int]) -> dict:
    """Run the toggled analyses on one side's defined gap values."""
    out: dict = {"n_values": int(values.size)}
    toggles = config.analyses
    stage = "powerlaw"
    try:
        if toggles.powerlaw:
            pl = config.powerlaw
            fit = powerlaw.fit_power_law(
                values, tail_floor=pl.tail_floor, min_distinct=pl.min_distinct, max_candidates=pl.max_candidates
            )
            if pl.bootstrap:
                fit.p_value = powerlaw.bootstrap_p_value(
                    values,
                    fit,
                    n_replicas=pl.n_bootstrap,
                    seed=_subseed(seed_path + [1]),
                    tail_floor=pl.tail_floor,
                    min_distinct=pl.min_distinct,
                    max_candidates=pl.max_candidates,
                )
            out["powerlaw"] = fit.to_dict()

        profile = scaling.build_profile(values)
        n = values.size
        fit_range = config.scaling.fit_range()
        curves: dict = {}
        stage = "dfa"
        if toggles.dfa or toggles.mfdfa:
            dfa_scales = config.scaling.scales_for(n)
        if toggles.dfa:
            curve = scaling.dfa_fluctuation(profile, dfa_scales, config.scaling.dfa_order)
            out["hurst_dfa"] = dataclasses.asdict(scaling.fit_hurst(curve, fit_range))
            curves["dfa"] = {"scales": curve.scales, "F": curve.F}
        stage = "dma"
        if toggles.dma:
            mode = config.scaling.dma_mode
            curve = scaling.dma_fluctuation(profile, config.scaling.scales_for(n, odd=mode == "centered"), mode)
            out["hurst_dma"] = dataclasses.asdict(scaling.fit_hurst(curve, fit_range))
            curves["dma"] = {"scales": curve.scales, "F": curve.F}
        if curves:
            out["curves"] = curves
        stage = "mfdfa"
        if toggles.mfdfa:
            q_grid = config.multifractal.grid()
            mf_curves = multifractal.mfdfa_fluctuation(profile, dfa_scales, q_grid, config.scaling.dfa_order)
            spec = multifractal.spectrum(
                values, q_grid=q_grid, scales=dfa_scales, order=config.scaling.dfa_order, fit_range=fit_range
            )
            mf = spec.to_dict()
            mf["curves"] = {"scales": dfa_scales, "F_by_q": [c.F for c in mf_curves]}
            out["mfdfa"] = mf
        stage = "surrogates"
        if toggles.surrogates:
            reports = {}
            stat_params = {
                "H_DFA": {"scales": config.scaling.scales_for(n), "order": config.scaling.dfa_order,
                          "fit_range": fit_range},
                "H_DMA": {"scales": config.scaling.scales_for(n, odd=config.scaling.dma_mode == "centered"),
                          "mode": config.scaling.dma_mode, "fit_range": fit_range},
                "delta_alpha": {"scales": config.scaling.scales_for(n), "order": config.scaling.dfa_order,
                                "q_grid": config.multifractal.grid(), "fit_range": fit_range},
            }
            wanted = [s for s in config.surrogates.statistics
                      if {"H_DFA": toggles.dfa, "H_DMA": toggles.dma, "delta_alpha": toggles.mfdfa}[s]]
            for k, stat in enumerate(wanted):
                report = surrogates.surrogate_test(
                    values,
                    stat,
                    n_shuffles=config.surrogates.n_shuffles,
                    master_seed=_subseed(seed_path + [2, k]),
                    statistic_params=stat_params[stat],
                )
                reports[stat] = report.to_dict()
            out["surrogates"] = reports
    except GapflowError as exc:
        exc.stage = stage  # let the caller name the failing module
        raise
    return out


def _subseed(path: list[int]) -> int:
    """Fold a seed path into one integer (SeedSequence does the mixing)."""
    return int(np.random.SeedSequence(path).generate_state(1)[0])


GENERATED_SERIES = {
    "fgn": lambda g, seed: gen_fgn(g.hurst, g.length, seed),
    "pareto": lambda g, seed: gen_pareto(g.exponent, g.x_min, g.length, seed),
    "pareto_mixture": lambda g, seed: gen_pareto_mixture(g.exponent, g.x_min, g.body_fraction, g.length, seed),
    "cascade": lambda g, seed: gen_binomial_cascade(g.p, g.levels),
    "iid_gaussian": lambda g, seed: gen_iid_gaussian(g.length, seed),
}


def generate_inputs(gen: GeneratorConfig, master_seed: int) -> list[tuple[str, object]]:
    """Materialize generator instruments: (name, SessionStream | ndarray)."""
    base_seed = gen.seed if gen.seed is not None else master_seed
    out = []
    for i in range(gen.count):
        name = f"{gen.prefix}{i:02d}" if gen.count > 1 else gen.prefix
        seed = [base_seed, i]
        if gen.kind == "order_flow":
            spec = OrderFlowSpec(
                n_events=gen.length, instrument=name, start_price=gen.start_price, style=gen.style
            )
            out.append((name, gen_order_flow(spec, seed)))
        else:
            out.append((name, GENERATED_SERIES[gen.kind](gen, seed)))
    return out


# --- pipeline ----------------------------------------------------------------


@dataclasses.dataclass
class PipelineResult:
    output_dir: Path
    instruments: list[str]
    report_paths: dict[str, Path]
    cross_section_path: Path | None
    errors: dict[str, dict]

    @property
    def ok(self) -> bool:
        return not self.errors


def _instrument_of_gap_file(path: Path) -> str:
    if path.stem in ("gaps_buy", "gaps_sell"):
        return path.parent.name
    return re.sub(r"_(buy|sell)$", "", path.stem)


def _run_one_instrument(instrument: str, job: dict, config: PipelineConfig, inst_index: int, out_root: Path) -> dict:
    inst_dir = out_root / instrument
    inst_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {"instrument": instrument, "config": config.model_dump(), "sides": {}}
    sides: dict[str, np.ndarray] = {}

    if job["mode"] == "orderflow":
        buy, sell, derived_minutes, n_events = job["replay"]()
        minutes = config.session_minutes if config.session_minutes else derived_minutes
        report["n_events"] = n_events
        report["session_minutes"] = minutes
        summaries = {}
        for series in (buy, sell):
            write_gap_series(series, inst_dir / f"gaps_{series.side.label}.csv")
            summaries[series.side.label] = summarize_gaps(series, minutes, config.tick_size).to_dict()
            sides[series.side.label] = series.defined_gaps()
        write_json(inst_dir / "summary.json", {"instrument": instrument, "tick_size": config.tick_size, **summaries})
        report["summary"] = summaries
    elif job["mode"] == "gaps":
        for side_label, series in job["series"].items():
            sides[side_label] = series.defined_gaps()
    else:  # plain series
        values = job["values"]
        np.savetxt(inst_dir / "series.csv", values)
        sides["series"] = np.asarray(values, dtype=float)

    for side_index, (side_label, values) in enumerate(sorted(sides.items())):
        report["sides"][side_label] = _analyze_values(values, config, [config.seed, inst_index, side_index])

    write_json(inst_dir / "report.json", report)
    return report


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute the configured run; returns paths and per-instrument errors.

    Instruments run as independent jobs (``config.workers`` threads);
    failures are recorded per instrument and do not abort the others.
    """
    out_root = config.resolved_output_dir()
    out_root.mkdir(parents=True, exist_ok=True)

    jobs: dict[str, dict] = {}
    for instrument, files in group_input_files(config.inputs).items():
        missing = [str(p) for p in files if not p.exists()]
        if missing:
            raise InsufficientData(f"missing input file(s): {missing}")
        jobs[instrument] = {
            "mode": "orderflow",
            "replay": (lambda inst=instrument, fs=files: replay_instrument(inst, fs, config.tick_size)),
        }
    gap_groups: dict[str, dict] = {}
    for raw in config.gap_inputs:
        path = Path(raw)
        series = load_gap_series(path)
        instrument = _instrument_of_gap_file(path)
        gap_groups.setdefault(instrument, {})[series.side.label] = series
    for instrument, series_by_side in gap_groups.items():
        jobs[instrument] = {"mode": "gaps", "series": series_by_side}
    for raw in config.series_inputs:
        path = Path(raw)
        jobs[path.stem] = {"mode": "series", "values": np.loadtxt(path)}
    if config.generator is not None:
        for name, payload in generate_inputs(config.generator, config.seed):
            if config.generator.kind == "order_flow":
                jobs[name] = {
                    "mode": "orderflow",
                    "stream": payload,
                    "replay": (lambda s=payload: _replay_stream(s)),
                }
            else:
                jobs[name] = {"mode": "series", "values": payload}
    if not jobs:
        raise InsufficientData("no inputs: provide order-flow files, gap files, series files or a generator")

    instruments = sorted(jobs)
    reports: dict[str, dict] = {}
    report_paths: dict[str, Path] = {}
    errors: dict[str, dict] = {}

    def worker(item):
        index, instrument = item
        job = jobs[instrument]
        if "stream" in job:
            (out_root / instrument).mkdir(parents=True, exist_ok=True)
            write_order_flow(job["stream"], out_root / instrument / "orderflow.csv", config.tick_size)
        return instrument, _run_one_instrument(instrument, job, config, index, out_root)

    max_workers = config.resolved_workers()
    indexed = list(enumerate(instruments))
    if max_workers == 1:
        results = []
        for item in indexed:
            results.append(_guarded(worker, item))
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda it: _guarded(worker, it), indexed))
    for item, outcome in zip(indexed, results):
        instrument = item[1]
        if isinstance(outcome, dict) and "error" in outcome:
            errors[instrument] = outcome
            log.error("instrument %s failed in %s: %s", instrument, outcome.get("stage"), outcome["error"])
        else:
            reports[instrument] = outcome[1]
            report_paths[instrument] = out_root / instrument / "report.json"

    cross_path = None
    if config.analyses.regressions and len(reports) >= 2:
        cross = build_cross_section(reports, config)
        if config.analyses.powerlaw:
            cross["ensemble"] = _ensemble_fits(out_root, sorted(reports), config)
        cross_path = out_root / "cross_section.json"
        write_json(cross_path, cross)
        if cross.get("tables"):
            (out_root / "cross_section.txt").write_text(format_cross_section(cross), encoding="utf-8")

    if errors:
        write_json(out_root / "errors.json", errors)
    write_json(
        out_root / "manifest.json",
        {
            "config": config.model_dump(),
            "instruments": instruments,
            "completed": sorted(reports),
            "failed": sorted(errors),
            "cross_section": cross_path,
        },
    )
    return PipelineResult(out_root, instruments, report_paths, cross_path, errors)


def _replay_stream(stream) -> tuple[GapSeries, GapSeries, float, int]:
    buy, sell = extract_gap_series(stream)
    if not stream.events:
        raise InsufficientData("generated stream is empty")
    minutes = max(stream.events[-1].timestamp - stream.events[0].timestamp, 1) / 6000.0
    return buy, sell, minutes, len(stream.events)


def _guarded(fn, item):
    try:
        return fn(item)
    except GapflowError as exc:
        return {"error": str(exc), "type": type(exc).__name__, "stage": getattr(exc, "stage", "input")}


def build_cross_section(reports: dict[str, dict], config: PipelineConfig) -> dict:
    """Pool per-instrument scalars and the ensemble tail fit."""
    per_stock: dict[str, dict] = {}
    for instrument, report in reports.items():
        row = {}
        for side in ("buy", "sell"):
            side_report = report["sides"].get(side)
            if not side_report:
                continue
            if side_report.get("powerlaw"):
                row[f"tail_exponent_{side}"] = side_report["powerlaw"]["exponent"]
            if side_report.get("hurst_dfa"):
                row[f"hurst_dfa_{side}"] = side_report["hurst_dfa"]["hurst"]
            if side_report.get("hurst_dma"):
                row[f"hurst_dma_{side}"] = side_report["hurst_dma"]["hurst"]
            if side_report.get("mfdfa"):
                row[f"delta_alpha_{side}"] = side_report["mfdfa"]["delta_alpha"]
        if row:
            per_stock[instrument] = row
    try:
        cross = cross_section_report(per_stock)
    except InsufficientData as exc:
        return {"note": str(exc), "tables": {}}
    cross["config"] = config.model_dump()
    return cross


def pooled_gap_values(output_dir: Path, instruments: list[str]) -> dict[str, np.ndarray]:
    """Ensemble mode: defined gaps pooled across instruments, per side."""
    pools: dict[str, list[np.ndarray]] = {}
    for instrument in instruments:
        for side in ("buy", "sell"):
            path = Path(output_dir) / instrument / f"gaps_{side}.csv"
            if path.exists():
                series = load_gap_series(path, instrument=instrument)
                pools.setdefault(side, []).append(series.defined_gaps())
    return {side: np.concatenate(parts) for side, parts in pools.items() if parts}


def _ensemble_fits(output_dir: Path, instruments: list[str], config: PipelineConfig) -> dict:
    """Tail fit of the gaps pooled across all instruments, per side."""
    out: dict = {}
    pl = config.powerlaw
    for side, values in pooled_gap_values(output_dir, instruments).items():
        try:
            fit = powerlaw.fit_power_law(
                values, tail_floor=pl.tail_floor, min_distinct=pl.min_distinct, max_candidates=pl.max_candidates
            )
            out[side] = {**fit.to_dict(), "n_pooled": int(values.size)}
        except GapflowError as exc:
            out[side] = {"error": str(exc), "type": type(exc).__name__}
    return out
