"""HTTP service exposing runs, sweeps, and summaries over the core package."""

from .app import create_app
from .jobs import Job, JobStore
from .schemas import (
    JOB_DONE,
    JOB_FAILED,
    JOB_QUEUED,
    JOB_RUNNING,
    JOB_STATES,
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

__all__ = [
    "ExperimentRequest",
    "ExperimentResult",
    "ExperimentStatus",
    "HealthResponse",
    "JOB_DONE",
    "JOB_FAILED",
    "JOB_QUEUED",
    "JOB_RUNNING",
    "JOB_STATES",
    "Job",
    "JobRef",
    "JobStore",
    "PresetInfo",
    "SummarizeRequest",
    "SummaryResponse",
    "SweepRequest",
    "SweepResponse",
    "SweepRowModel",
    "create_app",
]
