"""Aggregation of trial records: mean curves and deltas against random.

Output files are deterministic byte-for-byte: rows are sorted, floats use
repr, and nothing derives from wall-clock time.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..core.records import ExperimentRecord, record_from_json, record_to_json
from ..errors import AlbenchError, ConfigError
from ..strategies.selectors import RANDOM

SUMMARY_CSV_HEADER = ["strategy", "cycle", "mean_spent", "mean_value", "trials"]
PLOT_CSV_HEADER = ["strategy", "trial", "seed", "cycle", "spent", "value"]

RECORDS_DIR = "records"
SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    trials: int
    cycles: tuple[int, ...]
    mean_spent: tuple[float, ...]
    mean_value: tuple[float, ...]
    aux_means: dict[str, tuple[float, ...]] = field(default_factory=dict)
    delta_vs_random_final: float = 0.0


@dataclass(frozen=True)
class Summary:
    metric: str
    strategies: tuple[StrategySummary, ...]
    failures: tuple[dict, ...] = ()


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def summarize(
    records: list[ExperimentRecord], failures: list[dict] | None = None
) -> Summary:
    """Mean curve per strategy plus each strategy's final-cycle delta vs random."""
    if not records:
        raise AlbenchError("no records to summarize")
    metrics = {r.metric for r in records}
    if len(metrics) > 1:
        raise AlbenchError(f"records mix metrics: {sorted(metrics)}")
    by_strategy: dict[str, list[ExperimentRecord]] = {}
    for r in records:
        by_strategy.setdefault(r.strategy, []).append(r)
    if RANDOM not in by_strategy:
        raise AlbenchError("summaries require the random baseline, which is missing")

    partial: dict[str, StrategySummary] = {}
    for name in sorted(by_strategy):
        group = sorted(by_strategy[name], key=lambda r: r.seed)
        cycle_tuples = {tuple(p.cycle for p in r.points) for r in group}
        if len(cycle_tuples) > 1:
            raise AlbenchError(
                f"strategy {name!r} has mismatched cycle counts across trials"
            )
        cycles = cycle_tuples.pop()
        mean_spent = tuple(
            _mean([float(r.points[i].spent) for r in group]) for i in range(len(cycles))
        )
        mean_value = tuple(
            _mean([r.points[i].value for r in group]) for i in range(len(cycles))
        )
        aux_keys = sorted(set().union(*(set(r.aux_curves) for r in group)))
        aux_means = {
            key: tuple(
                _mean([r.aux_curves[key][i] for r in group if key in r.aux_curves])
                for i in range(len(cycles))
            )
            for key in aux_keys
        }
        partial[name] = StrategySummary(
            strategy=name,
            trials=len(group),
            cycles=cycles,
            mean_spent=mean_spent,
            mean_value=mean_value,
            aux_means=aux_means,
        )

    random_final = partial[RANDOM].mean_value[-1]
    final = tuple(
        StrategySummary(
            strategy=s.strategy,
            trials=s.trials,
            cycles=s.cycles,
            mean_spent=s.mean_spent,
            mean_value=s.mean_value,
            aux_means=s.aux_means,
            delta_vs_random_final=s.mean_value[-1] - random_final,
        )
        for _, s in sorted(partial.items())
    )
    return Summary(
        metric=records[0].metric,
        strategies=final,
        failures=tuple(failures or ()),
    )


def write_summary_csv(summary: Summary, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_HEADER)
        for s in summary.strategies:
            for i, cycle in enumerate(s.cycles):
                writer.writerow(
                    [s.strategy, cycle, repr(s.mean_spent[i]), repr(s.mean_value[i]), s.trials]
                )


def summary_to_json(summary: Summary) -> str:
    doc = {
        "metric": summary.metric,
        "strategies": {
            s.strategy: {
                "trials": s.trials,
                "cycles": list(s.cycles),
                "mean_spent": list(s.mean_spent),
                "mean_value": list(s.mean_value),
                "aux_means": {k: list(v) for k, v in sorted(s.aux_means.items())},
                "delta_vs_random_final": s.delta_vs_random_final,
            }
            for s in summary.strategies
        },
        "failures": list(summary.failures),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def write_summary(summary: Summary, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summary, out / SUMMARY_CSV)
    (out / SUMMARY_JSON).write_text(summary_to_json(summary) + "\n", encoding="utf-8")


def write_records(records: list[ExperimentRecord], out_dir: str | Path) -> list[Path]:
    """One JSON file per trial under records/, named by strategy and position."""
    out = Path(out_dir) / RECORDS_DIR
    out.mkdir(parents=True, exist_ok=True)
    counters: dict[str, int] = {}
    paths = []
    for r in records:
        t = counters.get(r.strategy, 0)
        counters[r.strategy] = t + 1
        path = out / f"{r.strategy}-trial{t}.json"
        path.write_text(record_to_json(r) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def read_records(path: str | Path) -> list[ExperimentRecord]:
    """Load every record under <dir>/records (or a bare directory of .json)."""
    root = Path(path)
    records_dir = root / RECORDS_DIR
    if not records_dir.is_dir():
        records_dir = root
    if not records_dir.is_dir():
        raise ConfigError(f"no records directory at {root}")
    files = sorted(records_dir.glob("*.json"))
    if not files:
        raise ConfigError(f"no record files in {records_dir}")
    return [record_from_json(f.read_text(encoding="utf-8")) for f in files]


def write_plot_csv(records: list[ExperimentRecord], path: str | Path) -> None:
    """Long-form per-trial curve data for external plotting tools."""
    aux_keys = sorted(set().union(*(set(r.aux_curves) for r in records))) if records else []
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLOT_CSV_HEADER + aux_keys)
        ordered = sorted(records, key=lambda r: (r.strategy, r.seed))
        counters: dict[str, int] = {}
        for r in ordered:
            t = counters.get(r.strategy, 0)
            counters[r.strategy] = t + 1
            for i, p in enumerate(r.points):
                row = [r.strategy, t, r.seed, p.cycle, p.spent, repr(p.value)]
                for key in aux_keys:
                    row.append(repr(r.aux_curves[key][i]) if key in r.aux_curves else "")
                writer.writerow(row)
