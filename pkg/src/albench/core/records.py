"""Per-trial learning-curve records with full provenance."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import ConfigError

ACCURACY = "accuracy"
MIOU = "miou"


@dataclass(frozen=True)
class CurvePoint:
    cycle: int
    spent: int
    value: float


@dataclass(frozen=True)
class ExperimentRecord:
    """One trial's metric-vs-budget curve for one (preset, strategy, learner)."""

    preset: str
    strategy: str
    learner: str
    seed: int
    metric: str
    points: tuple[CurvePoint, ...]
    # Labeled auxiliary curves aligned with `points`, e.g. mIoU measured
    # against the polygon-approximated ground truth next to the original one.
    aux_curves: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(
            self, "aux_curves", {k: tuple(v) for k, v in dict(self.aux_curves).items()}
        )
        if self.metric not in (ACCURACY, MIOU):
            raise ValueError(f"unknown metric {self.metric!r}")
        cycles = [p.cycle for p in self.points]
        if any(b <= a for a, b in zip(cycles, cycles[1:])):
            raise ValueError("points must be strictly increasing in cycle index")
        spend = [p.spent for p in self.points]
        if any(b < a for a, b in zip(spend, spend[1:])):
            raise ValueError("cumulative spend must be non-decreasing")
        for name, vals in self.aux_curves.items():
            if len(vals) != len(self.points):
                raise ValueError(f"aux curve {name!r} length differs from points")


def record_to_json(r: ExperimentRecord) -> str:
    doc = {
        "preset": r.preset,
        "strategy": r.strategy,
        "learner": r.learner,
        "seed": r.seed,
        "metric": r.metric,
        "points": [[p.cycle, p.spent, p.value] for p in r.points],
        "aux_curves": {k: list(v) for k, v in sorted(r.aux_curves.items())},
    }
    return json.dumps(doc)


def record_from_json(text: str) -> ExperimentRecord:
    try:
        doc = json.loads(text)
        return ExperimentRecord(
            preset=doc["preset"],
            strategy=doc["strategy"],
            learner=doc["learner"],
            seed=int(doc["seed"]),
            metric=doc["metric"],
            points=tuple(CurvePoint(int(c), int(s), float(v)) for c, s, v in doc["points"]),
            aux_curves={
                k: tuple(float(x) for x in v) for k, v in doc.get("aux_curves", {}).items()
            },
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed experiment record: {exc}") from exc
