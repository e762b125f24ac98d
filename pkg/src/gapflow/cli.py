"""Command-line client for the pipeline.

Runs in-process by default; ``--server URL`` sends the same request
models to a running service instead. Results print as JSON so they pipe
cleanly into other tools.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import GapflowError
from .pipeline import ENV_OUTPUT_DIR, ENV_WORKERS, GeneratorConfig, PipelineConfig
from .service import operations, schemas

REMOTE = {
    "synth": ("/synth", operations.synth),
    "replay": ("/replay", operations.replay),
    "run": ("/pipeline/run", operations.run),
    "report": ("/report", operations.cross_section),
    "plotdata": ("/plotdata", operations.plot_data),
}


def _dispatch(ctx, name: str, request) -> dict:
    path, local = REMOTE[name]
    server = ctx.obj.get("server")
    try:
        if server:
            import httpx

            response = httpx.post(server.rstrip("/") + path, json=request.model_dump(), timeout=None)
            if response.status_code != 200:
                click.echo(response.text, err=True)
                sys.exit(1)
            payload = response.json()
        else:
            payload = local(request).model_dump()
    except GapflowError as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), err=True)
        sys.exit(1)
    click.echo(json.dumps(payload, indent=2, sort_keys=True))
    return payload


@click.group()
@click.option("--server", default=None, metavar="URL", help="Send requests to a running service instead of in-process.")
@click.pass_context
def main(ctx, server):
    """Order-flow replay and price-gap liquidity statistics."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


def _generator_options(fn):
    opts = [
        click.option("--kind", type=click.Choice(list(GeneratorConfig.model_fields["kind"].annotation.__args__)),
                     required=True),
        click.option("--length", type=int, default=100_000, show_default=True),
        click.option("--count", type=int, default=1, show_default=True, help="Number of instruments."),
        click.option("--prefix", default="SYN", show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--hurst", type=float, default=0.75, show_default=True, help="fgn only."),
        click.option("--exponent", type=float, default=3.0, show_default=True, help="pareto kinds."),
        click.option("--x-min", type=float, default=0.001, show_default=True, help="pareto kinds."),
        click.option("--body-fraction", type=float, default=0.5, show_default=True, help="pareto_mixture only."),
        click.option("--p-weight", "p", type=float, default=0.3, show_default=True, help="cascade split mass."),
        click.option("--levels", type=int, default=16, show_default=True, help="cascade only."),
        click.option("--start-price", type=int, default=1000, show_default=True, help="order_flow only (ticks)."),
        click.option("--style", type=click.Choice(["around_best", "uniform_band"]), default="around_best",
                     show_default=True, help="order_flow only."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_generator(kind, length, count, prefix, seed, hurst, exponent, x_min, body_fraction, p, levels,
                     start_price, style) -> GeneratorConfig:
    return GeneratorConfig(
        kind=kind, length=length, count=count, prefix=prefix, seed=seed, hurst=hurst, exponent=exponent,
        x_min=x_min, body_fraction=body_fraction, p=p, levels=levels, start_price=start_price, style=style,
    )


@main.command()
@_generator_options
@click.option("--out", "output_dir", required=True, help="Directory for the generated files.")
@click.option("--tick-size", default="0.01", show_default=True)
@click.pass_context
def synth(ctx, output_dir, tick_size, **gen_kwargs):
    """Write synthetic order-flow CSVs or one-column series files."""
    generator = _build_generator(**gen_kwargs)
    _dispatch(ctx, "synth", schemas.SynthRequest(
        generator=generator, output_dir=output_dir, tick_size=tick_size, seed=gen_kwargs["seed"]))


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--tick-size", default="0.01", show_default=True)
@click.option("--session-minutes", type=float, default=None, help="Override the duration derived from timestamps.")
@click.option("--out", "output_dir", required=True)
@click.pass_context
def replay(ctx, inputs, tick_size, session_minutes, output_dir):
    """Replay order-flow CSVs into gap series and per-side summaries."""
    _dispatch(ctx, "replay", schemas.ReplayRequest(
        inputs=list(inputs), tick_size=tick_size, session_minutes=session_minutes, output_dir=output_dir))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Declarative pipeline config (JSON); flags below override it.")
@click.option("--input", "-i", "inputs", multiple=True, help="Order-flow CSV (repeatable).")
@click.option("--gaps", "gap_inputs", multiple=True, help="Gap CSV from an earlier replay (repeatable).")
@click.option("--series", "series_inputs", multiple=True, help="One-column series file (repeatable).")
@click.option("--tick-size", default=None)
@click.option("--session-minutes", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "output_dir", default=None, help=f"Output directory (default ${ENV_OUTPUT_DIR} or gapflow-out).")
@click.option("--workers", type=int, default=None, help=f"Parallel instruments (default ${ENV_WORKERS} or 1).")
@click.option("--powerlaw/--no-powerlaw", "do_powerlaw", default=None)
@click.option("--dfa/--no-dfa", "do_dfa", default=None)
@click.option("--dma/--no-dma", "do_dma", default=None)
@click.option("--mfdfa/--no-mfdfa", "do_mfdfa", default=None)
@click.option("--surrogates/--no-surrogates", "do_surrogates", default=None)
@click.option("--regressions/--no-regressions", "do_regressions", default=None)
@click.option("--bootstrap/--no-bootstrap", "do_bootstrap", default=None)
@click.option("--dfa-order", type=int, default=None)
@click.option("--dma-mode", type=click.Choice(["centered", "backward", "forward"]), default=None)
@click.option("--s-min", type=int, default=None)
@click.option("--s-max", type=int, default=None)
@click.option("--num-scales", type=int, default=None)
@click.option("--fit-lo", type=float, default=None)
@click.option("--fit-hi", type=float, default=None)
@click.option("--q-min", type=float, default=None)
@click.option("--q-max", type=float, default=None)
@click.option("--q-step", type=float, default=None)
@click.option("--n-shuffles", type=int, default=None)
@click.option("--n-bootstrap", type=int, default=None)
@click.option("--tail-floor", type=int, default=None)
@click.pass_context
def analyze(ctx, config_path, **flags):
    """Run the full pipeline: ingest, replay, analyze, report."""
    raw = json.loads(Path(config_path).read_text()) if config_path else {}
    config = PipelineConfig.model_validate(raw)
    for key in ("inputs", "gap_inputs", "series_inputs"):
        if flags[key]:
            setattr(config, key, list(flags[key]))
    for key in ("tick_size", "session_minutes", "seed", "output_dir", "workers"):
        if flags[key] is not None:
            setattr(config, key, flags[key])
    toggle_map = {"do_powerlaw": "powerlaw", "do_dfa": "dfa", "do_dma": "dma", "do_mfdfa": "mfdfa",
                  "do_surrogates": "surrogates", "do_regressions": "regressions"}
    for flag, field in toggle_map.items():
        if flags[flag] is not None:
            setattr(config.analyses, field, flags[flag])
    scale_map = {"dfa_order": "dfa_order", "dma_mode": "dma_mode", "s_min": "s_min", "s_max": "s_max",
                 "num_scales": "num_scales", "fit_lo": "fit_lo", "fit_hi": "fit_hi"}
    for flag, field in scale_map.items():
        if flags[flag] is not None:
            setattr(config.scaling, field, flags[flag])
    for flag, field in {"q_min": "q_min", "q_max": "q_max", "q_step": "q_step"}.items():
        if flags[flag] is not None:
            setattr(config.multifractal, field, flags[flag])
    if flags["n_shuffles"] is not None:
        config.surrogates.n_shuffles = flags["n_shuffles"]
    if flags["do_bootstrap"] is not None:
        config.powerlaw.bootstrap = flags["do_bootstrap"]
    if flags["n_bootstrap"] is not None:
        config.powerlaw.n_bootstrap = flags["n_bootstrap"]
    if flags["tail_floor"] is not None:
        config.powerlaw.tail_floor = flags["tail_floor"]
    payload = _dispatch(ctx, "run", schemas.PipelineRequest(config=config))
    if payload.get("failed"):
        sys.exit(1)


@main.command()
@click.option("--run-dir", required=True, type=click.Path(exists=True), help="Output directory of a pipeline run.")
@click.pass_context
def report(ctx, run_dir):
    """Rebuild the cross-sectional comparison for a finished run."""
    _dispatch(ctx, "report", schemas.CrossSectionRequest(run_dir=run_dir))


@main.command()
@click.option("--run-dir", required=True, type=click.Path(exists=True))
@click.option("--out", "output_dir", default=None, help="Defaults to <run-dir>/plots.")
@click.option("--section", "sections", multiple=True,
              type=click.Choice(["pdf", "fluctuation", "mfdfa", "scatter"]),
              help="Restrict the export (repeatable); omit for everything available.")
@click.option("--n-bins", type=int, default=40, show_default=True)
@click.pass_context
def plotdata(ctx, run_dir, output_dir, sections, n_bins):
    """Export plot-ready CSV tables from a finished run."""
    _dispatch(ctx, "plotdata", schemas.PlotDataRequest(
        run_dir=run_dir, output_dir=output_dir, sections=list(sections) or None, n_bins=n_bins))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("gapflow.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
