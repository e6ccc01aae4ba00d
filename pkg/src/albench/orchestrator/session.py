"""One-call execution of a configured benchmark run.

Shared by the command line and the HTTP service so both produce identical
artifacts: per-trial record files plus the aggregated summary tables.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from ..adapter.driver import AdapterLearner
from ..annotation.sweep import SweepRow, tolerance_sweep
from ..core.dataset import CLASSIFICATION, Dataset, save_csv_dataset
from .config import ADAPTER, DatasetConfig, RunSettings, build_datasets, build_pool
from .presets import scale_preset
from .runner import BuiltinLearner, RunResult, run_experiment
from .summary import Summary, summarize, write_records, write_summary

logger = logging.getLogger(__name__)

COMBINED_CSV = "adapter-dataset.csv"


def apply_overrides(
    settings: RunSettings, trials: int | None = None, seed: int | None = None
) -> RunSettings:
    """Fold command-line style overrides into parsed settings."""
    if trials is not None:
        settings = replace(settings, preset=scale_preset(settings.preset, trials=trials))
    if seed is not None:
        settings = replace(settings, master_seed=seed)
    return settings


def _combined_dataset(pool: Dataset, test: Dataset) -> Dataset:
    """Pool rows first, held-out rows after, in one shared index space."""
    targets = np.concatenate([np.asarray(pool.targets), np.asarray(test.targets)])
    return Dataset(
        items=list(pool.items) + list(test.items),
        targets=targets,
        num_classes=pool.num_classes,
        task=pool.task,
    )


def make_driver(settings: RunSettings, pool: Dataset, test: Dataset, workdir: str | Path):
    """Build the learner driver, materializing the adapter dataset if needed."""
    if settings.learner.model != ADAPTER:
        return BuiltinLearner(settings.learner, settings.ssl)
    if pool.task != CLASSIFICATION:
        # Compatibility checks reject this earlier; keep the guard local too.
        raise ValueError("external adapters serve classification tasks only")
    root = Path(workdir)
    root.mkdir(parents=True, exist_ok=True)
    path = root / COMBINED_CSV
    save_csv_dataset(_combined_dataset(pool, test), path)
    return AdapterLearner(
        settings.learner.command,
        str(path),
        pool=pool,
        train_cfg=settings.learner.train,
        ssl_cfg=settings.ssl,
    )


def execute_run(
    settings: RunSettings,
    trials: int | None = None,
    seed: int | None = None,
    workdir: str | Path | None = None,
) -> tuple[RunResult, Summary]:
    """Run every roster strategy over its trials and aggregate the curves."""
    settings = apply_overrides(settings, trials=trials, seed=seed)
    pool, test = build_datasets(settings.dataset)

    def _go(scratch: str | Path) -> tuple[RunResult, Summary]:
        driver = make_driver(settings, pool, test, scratch)
        result = run_experiment(
            settings.preset,
            pool,
            test,
            driver,
            settings.annotation,
            settings.master_seed,
        )
        return result, summarize(result.records, result.failures)

    if workdir is not None:
        return _go(workdir)
    with TemporaryDirectory(prefix="albench-run-") as tmp:
        return _go(tmp)


def run_tolerance_sweep(cfg: DatasetConfig, tolerances: list[float]) -> list[SweepRow]:
    """Sweep outline tolerances over the pool corpus of a segmentation dataset."""
    pool = build_pool(cfg)
    return tolerance_sweep(list(pool.targets), pool.num_classes, list(tolerances))


def write_run_outputs(result: RunResult, summary: Summary, out_dir: str | Path) -> Path:
    """Persist record files and summary tables; returns the output directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = write_records(result.records, out)
    write_summary(summary, out)
    logger.info("wrote %d record files and summary tables to %s", len(paths), out)
    return out
