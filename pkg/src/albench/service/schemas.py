"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"
JOB_STATES = (JOB_QUEUED, JOB_RUNNING, JOB_DONE, JOB_FAILED)


class HealthResponse(BaseModel):
    status: str
    version: str


class PresetInfo(BaseModel):
    name: str
    unit: str
    initial: int
    per_cycle: int
    cycles: int
    mode: str
    regime: str
    trials: int
    roster: list[str]


class ExperimentRequest(BaseModel):
    """A full run request: config document plus optional overrides."""

    config: dict[str, Any]
    trials: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)


class JobRef(BaseModel):
    id: str
    state: str


class ExperimentResult(BaseModel):
    summary: dict[str, Any]
    records: list[dict[str, Any]]
    failures: list[dict[str, Any]]


class ExperimentStatus(BaseModel):
    id: str
    state: str
    error: Optional[str] = None
    result: Optional[ExperimentResult] = None


class SweepRequest(BaseModel):
    """Tolerance sweep over the pool corpus of a segmentation dataset."""

    dataset: dict[str, Any]
    tolerances: list[float] = Field(min_length=1)


class SweepRowModel(BaseModel):
    tolerance: float
    mean_clicks: float
    miou: float


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]


class SummarizeRequest(BaseModel):
    records: list[dict[str, Any]] = Field(min_length=1)
    failures: list[dict[str, Any]] = Field(default_factory=list)


class SummaryResponse(BaseModel):
    summary: dict[str, Any]
