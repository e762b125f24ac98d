"""Request/response models for the HTTP service (and the CLI client)."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel

from ..pipeline import GeneratorConfig, PipelineConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class SynthRequest(BaseModel):
    generator: GeneratorConfig
    output_dir: str
    tick_size: str = "0.01"
    seed: int = 0


class SynthResponse(BaseModel):
    kind: str
    files: list[str]


class ReplayRequest(BaseModel):
    inputs: list[str]
    tick_size: str = "0.01"
    session_minutes: Optional[float] = None
    output_dir: str


class ReplayResponse(BaseModel):
    instruments: list[str]
    gap_files: dict[str, dict[str, str]]  # instrument -> side -> path
    summary_files: dict[str, str]


class PipelineRequest(BaseModel):
    config: PipelineConfig


class PipelineResponse(BaseModel):
    output_dir: str
    instruments: list[str]
    completed: list[str]
    failed: dict[str, dict]
    report_files: dict[str, str]
    cross_section: Optional[str] = None


class CrossSectionRequest(BaseModel):
    run_dir: str


class CrossSectionResponse(BaseModel):
    path: Optional[str]
    report: dict


class PlotDataRequest(BaseModel):
    run_dir: str
    output_dir: Optional[str] = None
    sections: Optional[list[str]] = None
    n_bins: int = 40


class PlotDataResponse(BaseModel):
    files: list[str]


class ErrorResponse(BaseModel):
    error: str
    detail: str
