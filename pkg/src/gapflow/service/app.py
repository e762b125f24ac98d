"""FastAPI application exposing the pipeline operations."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import GapflowError
from . import operations, schemas

app = FastAPI(
    title="gapflow",
    description="Limit-order-book replay and price-gap liquidity statistics",
)


@app.exception_handler(GapflowError)
async def domain_error_handler(request: Request, exc: GapflowError):
    return JSONResponse(
        status_code=400,
        content=schemas.ErrorResponse(error=type(exc).__name__, detail=str(exc)).model_dump(),
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return operations.health()


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(request: schemas.SynthRequest) -> schemas.SynthResponse:
    return operations.synth(request)


@app.post("/replay", response_model=schemas.ReplayResponse)
def replay(request: schemas.ReplayRequest) -> schemas.ReplayResponse:
    return operations.replay(request)


@app.post("/pipeline/run", response_model=schemas.PipelineResponse)
def run(request: schemas.PipelineRequest) -> schemas.PipelineResponse:
    return operations.run(request)


@app.post("/report", response_model=schemas.CrossSectionResponse)
def report(request: schemas.CrossSectionRequest) -> schemas.CrossSectionResponse:
    return operations.cross_section(request)


@app.post("/plotdata", response_model=schemas.PlotDataResponse)
def plotdata(request: schemas.PlotDataRequest) -> schemas.PlotDataResponse:
    return operations.plot_data(request)
