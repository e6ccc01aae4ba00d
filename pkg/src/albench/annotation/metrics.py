"""Segmentation quality metrics with void handling."""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError
from .mask import LabelMask


def confusion_matrix(gt: LabelMask, pred: LabelMask, num_classes: int) -> np.ndarray:
    """(num_classes, num_classes) counts; rows are ground truth.

    Pixels where either mask is void are left out entirely.
    """
    if gt.pixels.shape != pred.pixels.shape:
        raise GeometryError(
            f"shape mismatch: gt {gt.pixels.shape} vs pred {pred.pixels.shape}"
        )
    valid = gt.valid() & pred.valid()
    g = gt.pixels[valid]
    p = pred.pixels[valid]
    grid = g * num_classes + p
    counts = np.bincount(grid, minlength=num_classes * num_classes)
    return counts.reshape(num_classes, num_classes)


def miou_from_confusion(conf: np.ndarray) -> float:
    """Mean IoU over classes that appear in the ground truth."""
    gt_counts = conf.sum(axis=1)
    pred_counts = conf.sum(axis=0)
    diag = np.diag(conf)
    present = gt_counts > 0
    if not present.any():
        raise GeometryError("no ground-truth pixels outside void")
    union = gt_counts[present] + pred_counts[present] - diag[present]
    return float(np.mean(diag[present] / union))


def mean_iou(gt: LabelMask, pred: LabelMask, num_classes: int) -> float:
    return miou_from_confusion(confusion_matrix(gt, pred, num_classes))


def corpus_mean_iou(
    gts: list[LabelMask], preds: list[LabelMask], num_classes: int
) -> float:
    """Mean IoU from one confusion matrix pooled over the whole corpus."""
    if len(gts) != len(preds):
        raise GeometryError(f"{len(gts)} ground-truth masks vs {len(preds)} predictions")
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    for gt, pred in zip(gts, preds):
        conf += confusion_matrix(gt, pred, num_classes)
    return miou_from_confusion(conf)


def pixel_accuracy(gt: LabelMask, pred: LabelMask) -> float:
    valid = gt.valid() & pred.valid()
    total = int(valid.sum())
    if total == 0:
        raise GeometryError("no pixels to score outside void")
    return float((gt.pixels[valid] == pred.pixels[valid]).sum() / total)
