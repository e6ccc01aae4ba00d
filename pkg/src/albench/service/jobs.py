"""Serial in-process job queue for long-running experiment requests."""

from __future__ import annotations

import logging
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

from .schemas import JOB_DONE, JOB_FAILED, JOB_QUEUED, JOB_RUNNING

logger = logging.getLogger(__name__)


@dataclass
class Job:
    id: str
    state: str = JOB_QUEUED
    error: str | None = None
    result: Any = None
    done: threading.Event = field(default_factory=threading.Event)


class JobStore:
    """Runs submitted callables one at a time, keeping results in memory.

    Experiments are CPU bound and share no state, so a single worker keeps
    wall-clock behavior predictable; results persist for the process life.
    """

    def __init__(self, workers: int = 1) -> None:
        self._pool = ThreadPoolExecutor(max_workers=workers)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, fn: Callable[[], Any]) -> Job:
        job = Job(id=uuid.uuid4().hex)
        with self._lock:
            self._jobs[job.id] = job

        def run() -> None:
            with self._lock:
                job.state = JOB_RUNNING
            try:
                result = fn()
            except Exception as exc:  # noqa: BLE001 - reported via job state
                logger.warning("job %s failed: %s", job.id, exc)
                with self._lock:
                    job.state = JOB_FAILED
                    job.error = str(exc)
            else:
                with self._lock:
                    job.state = JOB_DONE
                    job.result = result
            job.done.set()

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: float | None = None) -> Job:
        job = self.get(job_id)
        if job is None:
            raise KeyError(job_id)
        job.done.wait(timeout)
        return job

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)
