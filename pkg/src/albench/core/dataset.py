"""Datasets: ordered samples plus targets, with loaders and validation.

Samples are identified everywhere by their integer position in ``items``.
Classification datasets hold a dense feature matrix and integer class ids;
segmentation datasets hold per-sample image tensors (H, W, C) in [0, 1] and
dense class-id label masks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..annotation.mask import LabelMask

CLASSIFICATION = "classification"
SEGMENTATION = "segmentation"


@dataclass(frozen=True)
class Dataset:
    """An ordered pool of samples with targets.

    For ``task="classification"`` items is a (n, d) float array and targets a
    (n,) int array. For ``task="segmentation"`` items is a list of (H, W, C)
    float arrays and targets a list of LabelMask of matching size.
    """

    items: np.ndarray | list[np.ndarray]
    targets: np.ndarray | list[LabelMask]
    num_classes: int
    task: str = CLASSIFICATION

    def __len__(self) -> int:
        return len(self.items)

    @property
    def feature_dim(self) -> int:
        if self.task != CLASSIFICATION:
            raise ValueError("feature_dim is only defined for classification datasets")
        return int(np.asarray(self.items).shape[1])

    def class_counts(self) -> np.ndarray:
        if self.task != CLASSIFICATION:
            raise ValueError("class_counts is only defined for classification datasets")
        return np.bincount(np.asarray(self.targets, dtype=int), minlength=self.num_classes)


@dataclass(frozen=True)
class Violation:
    """One broken dataset invariant: which index, which rule."""

    index: int
    rule: str

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"index {self.index}: {self.rule}"


def validate_dataset(d: Dataset) -> list[Violation]:
    """Check every Dataset invariant; returns an empty list iff all hold.

    Validation never raises: each problem is reported as a Violation naming
    the offending sample index (-1 for dataset-level problems) and the rule.
    """
    out: list[Violation] = []
    if d.num_classes <= 0:
        out.append(Violation(-1, "num_classes must be positive"))
    if len(d.items) != len(d.targets):
        out.append(
            Violation(
                -1,
                f"items length {len(d.items)} != targets length {len(d.targets)}",
            )
        )
    n = min(len(d.items), len(d.targets))
    if d.task == CLASSIFICATION:
        dims = {np.asarray(d.items[i]).shape for i in range(len(d.items))}
        if len(dims) > 1:
            out.append(Violation(-1, f"feature vectors have mixed shapes {sorted(dims)}"))
        for i in range(n):
            t = int(d.targets[i])
            if not 0 <= t < d.num_classes:
                out.append(Violation(i, f"class id {t} outside [0, {d.num_classes})"))
    elif d.task == SEGMENTATION:
        for i in range(n):
            mask = d.targets[i]
            ids = np.unique(mask.pixels)
            ids = ids[ids != mask.void_id]
            bad = ids[(ids < 0) | (ids >= d.num_classes)]
            if bad.size:
                out.append(
                    Violation(i, f"mask class id {int(bad[0])} outside [0, {d.num_classes})")
                )
            img = np.asarray(d.items[i])
            if img.shape[:2] != (mask.height, mask.width):
                out.append(Violation(i, "image and mask dimensions differ"))
    else:
        out.append(Violation(-1, f"unknown task {d.task!r}"))
    return out


def load_csv_dataset(path: str | Path, num_classes: int | None = None) -> Dataset:
    """Load a classification dataset from CSV.

    Expected header: ``feature_0,...,feature_{d-1},target``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "target":
            raise ValueError(f"{path}: last CSV column must be 'target', got {header[-1:]}")
        expected = [f"feature_{i}" for i in range(len(header) - 1)]
        if header[:-1] != expected:
            raise ValueError(f"{path}: feature columns must be feature_0..feature_{{d-1}}")
        feats: list[list[float]] = []
        targets: list[int] = []
        for row in reader:
            if not row:
                continue
            feats.append([float(v) for v in row[:-1]])
            targets.append(int(row[-1]))
    items = np.asarray(feats, dtype=np.float64)
    y = np.asarray(targets, dtype=np.int64)
    k = num_classes if num_classes is not None else int(y.max()) + 1
    return Dataset(items=items, targets=y, num_classes=k, task=CLASSIFICATION)


def save_csv_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a classification dataset in the CSV wire format."""
    if dataset.task != CLASSIFICATION:
        raise ValueError("CSV format only carries classification datasets")
    path = Path(path)
    items = np.asarray(dataset.items)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"feature_{i}" for i in range(items.shape[1])] + ["target"])
        for row, t in zip(items, dataset.targets):
            writer.writerow([repr(float(v)) for v in row] + [int(t)])


def load_image_dataset(
    root: str | Path,
    num_classes: int,
    void_id: int = 255,
) -> Dataset:
    """Load a segmentation dataset from a directory of raster files.

    Layout: ``<root>/images/*`` holds RGB images, ``<root>/masks/*`` holds
    8-bit grayscale (or palette-indexed) masks whose pixel values are class
    ids. Files are paired by stem and ordered by stem.
    """
    from PIL import Image

    root = Path(root)
    mask_dir = root / "masks"
    image_dir = root / "images"
    if not mask_dir.is_dir() or not image_dir.is_dir():
        raise ValueError(f"{root}: expected images/ and masks/ subdirectories")
    masks_by_stem = {p.stem: p for p in sorted(mask_dir.iterdir()) if p.is_file()}
    images_by_stem = {p.stem: p for p in sorted(image_dir.iterdir()) if p.is_file()}
    stems = sorted(masks_by_stem)
    if set(stems) != set(images_by_stem):
        missing = sorted(set(stems).symmetric_difference(images_by_stem))
        raise ValueError(f"{root}: unpaired image/mask stems: {missing[:5]}")

    items: list[np.ndarray] = []
    targets: list[LabelMask] = []
    for stem in stems:
        with Image.open(images_by_stem[stem]) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
        with Image.open(masks_by_stem[stem]) as im:
            if im.mode not in ("L", "P"):
                raise ValueError(f"{masks_by_stem[stem]}: mask must be 8-bit grayscale")
            pixels = np.asarray(im if im.mode == "L" else im.convert("P"), dtype=np.int64)
        items.append(rgb)
        targets.append(LabelMask(pixels=pixels, void_id=void_id))
    return Dataset(items=items, targets=targets, num_classes=num_classes, task=SEGMENTATION)


def save_mask_image(mask: LabelMask, path: str | Path) -> None:
    """Write a LabelMask as an 8-bit grayscale image."""
    from PIL import Image

    arr = mask.pixels.astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path))
