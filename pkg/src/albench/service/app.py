"""HTTP facade over the benchmark: presets, runs, sweeps, and summaries.

Experiments run as background jobs polled by id; sweeps and summaries are
quick enough to answer inline.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException

import albench

from ..core.records import record_from_json, record_to_json
from ..errors import AlbenchError, ConfigError
from ..orchestrator import (
    BUILTIN_PRESETS,
    apply_overrides,
    parse_dataset,
    parse_settings,
    run_tolerance_sweep,
    summarize,
    summary_to_json,
)
from ..orchestrator.presets import ProtocolPreset
from ..orchestrator.session import execute_run
from .jobs import JobStore
from .schemas import (
    ExperimentRequest,
    ExperimentResult,
    ExperimentStatus,
    HealthResponse,
    JobRef,
    PresetInfo,
    SummarizeRequest,
    SummaryResponse,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
)


def _preset_info(preset: ProtocolPreset) -> PresetInfo:
    return PresetInfo(
        name=preset.name,
        unit=preset.budget.unit,
        initial=preset.budget.initial,
        per_cycle=preset.budget.per_cycle,
        cycles=preset.budget.cycles,
        mode=preset.mode,
        regime=preset.regime,
        trials=preset.trials,
        roster=[spec.kind for spec in preset.roster],
    )


def create_app() -> FastAPI:
    jobs = JobStore()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        jobs.shutdown()

    app = FastAPI(title="albench", version=albench.__version__, lifespan=lifespan)
    app.state.jobs = jobs

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=albench.__version__)

    @app.get("/presets", response_model=list[PresetInfo])
    def presets() -> list[PresetInfo]:
        return [_preset_info(p) for p in BUILTIN_PRESETS.values()]

    @app.post("/experiments", response_model=JobRef, status_code=202)
    def submit_experiment(request: ExperimentRequest) -> JobRef:
        try:
            settings = parse_settings(request.config)
            settings = apply_overrides(settings, trials=request.trials, seed=request.seed)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

        def run() -> ExperimentResult:
            result, summary = execute_run(settings)
            return ExperimentResult(
                summary=json.loads(summary_to_json(summary)),
                records=[json.loads(record_to_json(r)) for r in result.records],
                failures=[dict(f) for f in result.failures],
            )

        job = jobs.submit(run)
        return JobRef(id=job.id, state=job.state)

    @app.get("/experiments/{job_id}", response_model=ExperimentStatus)
    def experiment_status(job_id: str) -> ExperimentStatus:
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id!r}")
        return ExperimentStatus(id=job.id, state=job.state, error=job.error, result=job.result)

    @app.post("/tolerance-sweeps", response_model=SweepResponse)
    def tolerance_sweeps(request: SweepRequest) -> SweepResponse:
        try:
            cfg = parse_dataset(request.dataset)
            rows = run_tolerance_sweep(cfg, request.tolerances)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except AlbenchError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return SweepResponse(
            rows=[
                SweepRowModel(tolerance=r.tolerance, mean_clicks=r.mean_clicks, miou=r.miou)
                for r in rows
            ]
        )

    @app.post("/summaries", response_model=SummaryResponse)
    def summaries(request: SummarizeRequest) -> SummaryResponse:
        try:
            records = [record_from_json(json.dumps(r)) for r in request.records]
            summary = summarize(records, request.failures)
        except AlbenchError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SummaryResponse(summary=json.loads(summary_to_json(summary)))

    return app
