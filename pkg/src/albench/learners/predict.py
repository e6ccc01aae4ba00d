"""Turn fitted models into PredictionBundles for the strategies."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core.bundle import PredictionBundle
from ..core.dataset import CLASSIFICATION, SEGMENTATION, Dataset
from ..errors import LearnerError
from .models import LossHeadModel, softmax
from .scoremaps import entropy_map_from_probs


def _check_indices(dataset: Dataset, indices: Sequence[int]) -> list[int]:
    idx = [int(i) for i in indices]
    for i in idx:
        if not 0 <= i < len(dataset):
            raise LearnerError(f"index {i} out of range for dataset of {len(dataset)}")
    return idx


def predict_bundle(models, dataset: Dataset, indices: Sequence[int]) -> PredictionBundle:
    """Run one model or a committee over the given samples.

    Classification fills probs and features (probs from member 0 when given a
    committee, plus the vote matrix); a loss head adds pred_loss. Segmentation
    fills per-image entropy maps and mean-pooled features; committee maps are
    computed from member-averaged per-pixel probabilities.
    """
    idx = _check_indices(dataset, indices)
    members = list(models) if isinstance(models, (list, tuple)) else [models]
    if not members:
        raise LearnerError("need at least one fitted model")
    lead = members[0]

    if dataset.task == CLASSIFICATION:
        x = np.stack([np.asarray(dataset.items[i], dtype=np.float64) for i in idx])
        logits, _ = lead.forward(x)
        probs = softmax(logits)
        features = lead.penultimate(x)
        votes = None
        if len(members) > 1:
            cols = []
            for m in members:
                member_logits, _ = m.forward(x)
                cols.append(member_logits.argmax(axis=1))
            votes = np.stack(cols, axis=1).astype(np.int64)
        pred_loss = lead.predict_loss(x) if isinstance(lead, LossHeadModel) else None
        return PredictionBundle(
            indices=tuple(idx),
            probs=probs,
            features=features,
            pred_loss=pred_loss,
            ensemble_votes=votes,
        )

    if dataset.task == SEGMENTATION:
        maps = []
        feats = []
        for i in idx:
            x = np.asarray(dataset.items[i], dtype=np.float64)[None]
            pixel_probs = [softmax(m.forward(x)[0][0]) for m in members]
            mean_probs = np.mean(pixel_probs, axis=0)
            maps.append(entropy_map_from_probs(mean_probs))
            feats.append(lead.penultimate(x)[0])
        return PredictionBundle(
            indices=tuple(idx),
            features=np.stack(feats),
            entropy_maps=tuple(maps),
        )

    raise LearnerError(f"unknown task {dataset.task!r}")


def predict_segmentation(model, dataset: Dataset, index: int):
    """Hard per-pixel prediction for one image, as a LabelMask."""
    from ..annotation.mask import LabelMask

    x = np.asarray(dataset.items[index], dtype=np.float64)[None]
    logits, _ = model.forward(x)
    void = dataset.targets[index].void_id if dataset.targets else 255
    return LabelMask(pixels=logits[0].argmax(axis=-1).astype(np.int64), void_id=void)
