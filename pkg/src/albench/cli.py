"""Command line entry points.

Every subcommand can run fully in process; `run` and `sweep-tolerance` can
also talk to a running service instance with `--server`, keeping this layer a
thin client over the same code paths.  Exit codes: 0 success, 2 configuration
error, 3 runtime failure.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .adapter.check import run_check
from .annotation.sweep import SweepRow, write_sweep_csv
from .core.records import record_from_json
from .errors import AlbenchError, ConfigError
from .orchestrator import (
    apply_overrides,
    execute_run,
    load_raw_config,
    parse_dataset,
    parse_settings,
    read_records,
    run_tolerance_sweep,
    summarize,
    write_plot_csv,
    write_run_outputs,
    write_summary,
)
from .orchestrator.runner import RunResult
from .orchestrator.summary import Summary

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

DEFAULT_TOLERANCES = "0,1,2,5,10"
POLL_INTERVAL = 0.5


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(str(exc), EXIT_CONFIG)
        except AlbenchError as exc:
            _fail(str(exc), EXIT_RUNTIME)
        except OSError as exc:
            _fail(str(exc), EXIT_RUNTIME)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _echo_summary(summary: Summary) -> None:
    click.echo(f"metric: {summary.metric}")
    for s in summary.strategies:
        click.echo(
            f"  {s.strategy:<12} trials={s.trials}"
            f" final={s.mean_value[-1]:.4f}"
            f" delta_vs_random={s.delta_vs_random_final:+.4f}"
        )
        for key, values in sorted(s.aux_means.items()):
            click.echo(f"    {key}: final={values[-1]:.4f}")
    if summary.failures:
        click.echo(f"  failed trials: {len(summary.failures)}")
        for failure in summary.failures:
            click.echo(f"    {failure}")


@click.group()
@click.version_option(__version__, prog_name="albench")
def main() -> None:
    """Active-learning benchmark harness."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML or JSON config file.")
@click.option("--trials", type=click.IntRange(min=1), default=None,
              help="Override the preset trial count.")
@click.option("--seed", type=click.IntRange(min=0), default=None,
              help="Override the master seed.")
@click.option("--out", "out_dir", default=None,
              help="Override the [output] directory.")
@click.option("--server", default=None, metavar="URL",
              help="Submit to a running service instead of executing locally.")
@_guarded
def run(config_path: str, trials: int | None, seed: int | None,
        out_dir: str | None, server: str | None) -> None:
    """Run every roster strategy over its trials and write curves + summary."""
    raw = load_raw_config(config_path)
    settings = parse_settings(raw)
    settings = apply_overrides(settings, trials=trials, seed=seed)
    if out_dir is not None:
        settings = replace(settings, out_dir=out_dir)

    if server is None:
        result, summary = execute_run(settings, workdir=settings.out_dir)
        records, failures = list(result.records), list(result.failures)
    else:
        payload = _remote_run(server, raw, trials, seed)
        records = [record_from_json(json.dumps(r)) for r in payload["records"]]
        failures = payload["failures"]
        summary = summarize(records, failures)

    result = RunResult(records=tuple(records), failures=tuple(failures))
    out = write_run_outputs(result, summary, settings.out_dir)
    _echo_summary(summary)
    click.echo(f"wrote {len(records)} records to {out}")


def _remote_run(server: str, raw_config: dict, trials: int | None, seed: int | None) -> dict:
    import httpx

    base = server.rstrip("/")
    body = {"config": raw_config, "trials": trials, "seed": seed}
    try:
        with httpx.Client(timeout=30.0) as client:
            response = client.post(f"{base}/experiments", json=body)
            if response.status_code == 400:
                raise ConfigError(response.json().get("detail", response.text))
            if response.status_code != 202:
                raise AlbenchError(f"submit failed with HTTP {response.status_code}: {response.text}")
            job_id = response.json()["id"]
            click.echo(f"submitted job {job_id}")
            while True:
                status = client.get(f"{base}/experiments/{job_id}").json()
                if status["state"] == "done":
                    return status["result"]
                if status["state"] == "failed":
                    raise AlbenchError(f"remote run failed: {status['error']}")
                time.sleep(POLL_INTERVAL)
    except httpx.HTTPError as exc:
        raise AlbenchError(f"cannot reach server {server}: {exc}") from exc


@main.command("sweep-tolerance")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Config file; only its [dataset] section is used.")
@click.option("--tolerances", default=DEFAULT_TOLERANCES, show_default=True,
              help="Comma-separated outline tolerances, strictly increasing.")
@click.option("--out", "out_path", default="sweep.csv", show_default=True,
              help="Destination CSV.")
@click.option("--server", default=None, metavar="URL",
              help="Compute on a running service instead of locally.")
@_guarded
def sweep_tolerance(config_path: str, tolerances: str, out_path: str, server: str | None) -> None:
    """Sweep outline tolerance vs. click cost and label fidelity."""
    raw = load_raw_config(config_path)
    if "dataset" not in raw:
        raise ConfigError("config must have a [dataset] section")
    try:
        values = [float(t) for t in tolerances.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --tolerances value: {exc}") from exc

    if server is None:
        rows = run_tolerance_sweep(parse_dataset(raw["dataset"]), values)
    else:
        rows = _remote_sweep(server, raw["dataset"], values)

    write_sweep_csv(rows, out_path)
    click.echo(f"{'tolerance':>10} {'mean_clicks':>12} {'miou':>8}")
    for row in rows:
        click.echo(f"{row.tolerance:>10.3f} {row.mean_clicks:>12.2f} {row.miou:>8.4f}")
    click.echo(f"wrote {out_path}")


def _remote_sweep(server: str, dataset: dict, tolerances: list[float]) -> list[SweepRow]:
    import httpx

    base = server.rstrip("/")
    try:
        with httpx.Client(timeout=600.0) as client:
            response = client.post(
                f"{base}/tolerance-sweeps",
                json={"dataset": dataset, "tolerances": tolerances},
            )
    except httpx.HTTPError as exc:
        raise AlbenchError(f"cannot reach server {server}: {exc}") from exc
    if response.status_code == 400:
        raise ConfigError(response.json().get("detail", response.text))
    if response.status_code != 200:
        raise AlbenchError(f"sweep failed with HTTP {response.status_code}: {response.text}")
    return [
        SweepRow(row["tolerance"], row["mean_clicks"], row["miou"])
        for row in response.json()["rows"]
    ]


@main.command("summarize")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@_guarded
def summarize_cmd(directory: str) -> None:
    """Aggregate record files in DIRECTORY into summary tables."""
    records = read_records(directory)
    summary = summarize(records, [])
    write_summary(summary, directory)
    _echo_summary(summary)
    click.echo(f"wrote summary tables to {directory}")


@main.command("plot-data")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", default=None,
              help="Destination CSV (default: DIRECTORY/plot.csv).")
@_guarded
def plot_data(directory: str, out_path: str | None) -> None:
    """Emit long-form per-trial curve CSV for external plotting tools."""
    records = read_records(directory)
    target = Path(out_path) if out_path else Path(directory) / "plot.csv"
    write_plot_csv(records, target)
    points = sum(len(r.points) for r in records)
    click.echo(f"wrote {points} curve points from {len(records)} records to {target}")


@main.command("adapter-check")
@click.argument("command")
@click.option("--transcript", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Alternative transcript file (defaults to the packaged golden one).")
@_guarded
def adapter_check(command: str, transcript: str | None) -> None:
    """Replay the golden protocol transcript against an adapter COMMAND."""
    report = run_check(command, transcript_path=transcript)
    for line in report.lines():
        click.echo(line)
    if not report.passed:
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@_guarded
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
