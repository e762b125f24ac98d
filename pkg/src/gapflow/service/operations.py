"""Service operations: the one implementation behind both the HTTP
endpoints and the CLI's in-process mode."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import InsufficientData
from ..gaps import summarize_gaps, write_gap_series
from ..orderflow import write_order_flow
from ..pipeline import (
    PipelineConfig,
    build_cross_section,
    generate_inputs,
    group_input_files,
    replay_instrument,
    run_pipeline,
    write_json,
)
from ..plotdata import emit_plot_data
from . import schemas


def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


def synth(request: schemas.SynthRequest) -> schemas.SynthResponse:
    """Materialize generator output: order-flow CSVs or one-column series."""
    out_dir = Path(request.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for name, payload in generate_inputs(request.generator, request.seed):
        path = out_dir / f"{name}.csv"
        if request.generator.kind == "order_flow":
            write_order_flow(payload, path, request.tick_size)
        else:
            np.savetxt(path, np.asarray(payload, dtype=float))
        files.append(str(path))
    return schemas.SynthResponse(kind=request.generator.kind, files=files)


def replay(request: schemas.ReplayRequest) -> schemas.ReplayResponse:
    """Order flow to gap series and per-side summaries, one dir per instrument."""
    groups = group_input_files(request.inputs)
    if not groups:
        raise InsufficientData("no input files given")
    out_root = Path(request.output_dir)
    gap_files: dict[str, dict[str, str]] = {}
    summary_files: dict[str, str] = {}
    for instrument, files in groups.items():
        missing = [str(p) for p in files if not p.exists()]
        if missing:
            raise InsufficientData(f"missing input file(s): {missing}")
        buy, sell, derived_minutes, _ = replay_instrument(instrument, files, request.tick_size)
        minutes = request.session_minutes or derived_minutes
        inst_dir = out_root / instrument
        inst_dir.mkdir(parents=True, exist_ok=True)
        gap_files[instrument] = {}
        summaries = {}
        for series in (buy, sell):
            path = inst_dir / f"gaps_{series.side.label}.csv"
            write_gap_series(series, path)
            gap_files[instrument][series.side.label] = str(path)
            summaries[series.side.label] = summarize_gaps(series, minutes, request.tick_size).to_dict()
        summary_path = inst_dir / "summary.json"
        write_json(summary_path, {"instrument": instrument, "tick_size": request.tick_size, **summaries})
        summary_files[instrument] = str(summary_path)
    return schemas.ReplayResponse(
        instruments=sorted(groups), gap_files=gap_files, summary_files=summary_files
    )


def run(request: schemas.PipelineRequest) -> schemas.PipelineResponse:
    result = run_pipeline(request.config)
    return schemas.PipelineResponse(
        output_dir=str(result.output_dir),
        instruments=result.instruments,
        completed=sorted(result.report_paths),
        failed=result.errors,
        report_files={k: str(v) for k, v in result.report_paths.items()},
        cross_section=str(result.cross_section_path) if result.cross_section_path else None,
    )


def cross_section(request: schemas.CrossSectionRequest) -> schemas.CrossSectionResponse:
    """Rebuild the cross-section from the per-instrument reports of a run."""
    run_dir = Path(request.run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise InsufficientData(f"no manifest.json under {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    reports = {}
    for instrument in manifest["completed"]:
        report_path = run_dir / instrument / "report.json"
        if report_path.exists():
            reports[instrument] = json.loads(report_path.read_text())
    if len(reports) < 2:
        raise InsufficientData(f"cross-section needs >= 2 completed instruments, found {len(reports)}")
    config = PipelineConfig.model_validate(manifest["config"])
    cross = build_cross_section(reports, config)
    path = run_dir / "cross_section.json"
    write_json(path, cross)
    return schemas.CrossSectionResponse(path=str(path), report=json.loads(path.read_text()))


def plot_data(request: schemas.PlotDataRequest) -> schemas.PlotDataResponse:
    files = emit_plot_data(
        request.run_dir, out_dir=request.output_dir, sections=request.sections, n_bins=request.n_bins
    )
    return schemas.PlotDataResponse(files=[str(p) for p in files])
