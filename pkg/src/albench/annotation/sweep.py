"""Trade-off sweep between outline fidelity and click cost.

For each tolerance the whole corpus is polygonized, rasterized back, and
scored against the original masks with a single pooled confusion matrix.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .mask import LabelMask
from .metrics import confusion_matrix, miou_from_confusion
from .pricing import polygonize_mask
from .raster import rasterize_polygons

CSV_HEADER = ["tolerance", "mean_clicks", "miou"]


@dataclass(frozen=True)
class SweepRow:
    tolerance: float
    mean_clicks: float
    miou: float


def tolerance_sweep(
    masks: list[LabelMask], num_classes: int, tolerances: list[float]
) -> list[SweepRow]:
    if not masks:
        raise ConfigError("tolerance sweeps need at least one mask")
    if not tolerances:
        raise ConfigError("at least one tolerance value is required")
    if any(b <= a for a, b in zip(tolerances, tolerances[1:])):
        raise ConfigError(f"tolerances must be strictly increasing, got {list(tolerances)}")
    rows: list[SweepRow] = []
    for tol in tolerances:
        if tol < 0:
            raise ConfigError(f"tolerance must be non-negative, got {tol}")
        conf = np.zeros((num_classes, num_classes), dtype=np.int64)
        clicks = 0
        for mask in masks:
            pset = polygonize_mask(mask, tol)
            clicks += pset.clicks
            approx = rasterize_polygons(
                pset, mask.height, mask.width, void_id=mask.void_id
            )
            conf += confusion_matrix(mask, approx, num_classes)
        rows.append(
            SweepRow(
                tolerance=float(tol),
                mean_clicks=clicks / len(masks),
                miou=miou_from_confusion(conf),
            )
        )
    return rows


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([repr(row.tolerance), repr(row.mean_clicks), repr(row.miou)])


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected sweep header: {header}")
        return [
            SweepRow(float(t), float(c), float(m)) for t, c, m in reader
        ]
