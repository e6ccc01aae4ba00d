"""SGD training loops for the built-in models.

All randomness (init, batch order, perturbations) flows from
numpy's Generator seeded per run, so identical configs retrain to
bit-identical parameters.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..core.dataset import CLASSIFICATION, SEGMENTATION, Dataset
from ..errors import LearnerError
from .models import LossHeadModel, softmax
from .objectives import (
    consistency_loss_and_grads,
    consistency_targets,
    pair_ranking_loss_and_grads,
    per_sample_cross_entropy,
    pixel_loss_and_grads,
    supervised_loss_and_grads,
)

logger = logging.getLogger(__name__)

COSINE = "cosine"
CONSTANT = "constant"
SCHEDULES = (COSINE, CONSTANT)

GAUSSIAN_NOISE = "gaussian_noise"
INPUT_DROPOUT = "input_dropout"
PERTURBATIONS = (GAUSSIAN_NOISE, INPUT_DROPOUT)


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = 3e-2
    momentum: float = 0.9
    weight_decay: float = 5e-4
    epochs: int = 150
    batch_labeled: int = 64
    batch_unlabeled: int = 320
    schedule: str = COSINE
    seed: int = 0
    max_steps: int | None = None  # overrides epoch-based stopping when set

    def __post_init__(self) -> None:
        if self.base_lr <= 0:
            raise LearnerError(f"base_lr must be positive, got {self.base_lr}")
        if not 0 <= self.momentum < 1:
            raise LearnerError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise LearnerError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.epochs < 0:
            raise LearnerError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_labeled < 1:
            raise LearnerError(f"batch_labeled must be positive, got {self.batch_labeled}")
        if self.batch_unlabeled < 0:
            raise LearnerError(
                f"batch_unlabeled must be non-negative, got {self.batch_unlabeled}"
            )
        if self.schedule not in (COSINE, CONSTANT):
            raise LearnerError(f"unknown schedule {self.schedule!r}")
        if self.max_steps is not None and self.max_steps < 0:
            raise LearnerError(f"max_steps must be non-negative, got {self.max_steps}")


@dataclass(frozen=True)
class SSLConfig:
    confidence_mask: float = 0.6
    temperature: float = 0.5
    unlabeled_weight: float = 1.0
    perturbation: str = GAUSSIAN_NOISE
    perturbation_scale: float = 0.1

    def __post_init__(self) -> None:
        if not 0 < self.confidence_mask < 1:
            raise LearnerError(
                f"confidence_mask must be in (0, 1), got {self.confidence_mask}"
            )
        if self.temperature <= 0:
            raise LearnerError(f"temperature must be positive, got {self.temperature}")
        if self.unlabeled_weight < 0:
            raise LearnerError(
                f"unlabeled_weight must be non-negative, got {self.unlabeled_weight}"
            )
        if self.perturbation not in (GAUSSIAN_NOISE, INPUT_DROPOUT):
            raise LearnerError(f"unknown perturbation {self.perturbation!r}")
        if self.perturbation == INPUT_DROPOUT and not 0 <= self.perturbation_scale < 1:
            raise LearnerError(
                f"dropout rate must be in [0, 1), got {self.perturbation_scale}"
            )


@dataclass(frozen=True)
class EnsembleConfig:
    size: int = 5
    member_seeds: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.size < 2:
            raise LearnerError(f"ensembles need at least 2 members, got {self.size}")
        seeds = self.member_seeds or tuple(range(self.size))
        if len(seeds) != self.size:
            raise LearnerError(
                f"{self.size} members need {self.size} seeds, got {len(seeds)}"
            )
        if len(set(seeds)) != len(seeds):
            raise LearnerError(f"member seeds must be distinct, got {seeds}")
        object.__setattr__(self, "member_seeds", tuple(int(s) for s in seeds))


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    """base_lr * 0.5 * (1 + cos(pi * step / total_steps))."""
    if total_steps <= 0:
        raise LearnerError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise LearnerError(f"step {step} outside [0, {total_steps}]")
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def _learning_rate(cfg: TrainConfig, step: int, total_steps: int) -> float:
    if cfg.schedule == CONSTANT:
        return cfg.base_lr
    return cosine_lr(step, total_steps, cfg.base_lr)


def _check_labeled(dataset: Dataset, labeled: Sequence[int]) -> list[int]:
    idx = sorted(int(i) for i in labeled)
    if not idx:
        raise LearnerError("training needs at least one labeled sample")
    if idx[0] < 0 or idx[-1] >= len(dataset):
        raise LearnerError(f"labeled index out of range for dataset of {len(dataset)}")
    if dataset.task == CLASSIFICATION:
        present = {int(dataset.targets[i]) for i in idx}
        missing = sorted(set(range(dataset.num_classes)) - present)
        if missing:
            logger.warning(
                "labeled set covers %d/%d classes (missing %s); training anyway",
                dataset.num_classes - len(missing),
                dataset.num_classes,
                missing,
            )
    return idx


def _total_steps(cfg: TrainConfig, steps_per_epoch: int) -> int:
    if cfg.max_steps is not None:
        return cfg.max_steps
    return cfg.epochs * steps_per_epoch


def _run_sgd(
    model,
    cfg: TrainConfig,
    total_steps: int,
    batch_fn: Callable[[int], tuple[float, list[np.ndarray]]],
) -> float:
    """Momentum SGD over ``total_steps`` calls of ``batch_fn``; returns the
    last batch loss."""
    velocity = [np.zeros_like(p) for p in model.params]
    last = float("nan")
    for t in range(total_steps):
        lr = _learning_rate(cfg, t, total_steps)
        last, grads = batch_fn(t)
        for p, v, g in zip(model.params, velocity, grads):
            v *= cfg.momentum
            v -= lr * g
            p += v
    return last


class _BatchStream:
    """Epoch-shuffled minibatch index stream, deterministic per Generator."""

    def __init__(self, rng: np.random.Generator, n: int, batch: int) -> None:
        self.rng = rng
        self.n = n
        self.batch = min(batch, n)
        self.order = np.empty(0, dtype=np.int64)
        self.cursor = 0

    @property
    def steps_per_epoch(self) -> int:
        return math.ceil(self.n / self.batch)

    def next(self) -> np.ndarray:
        if self.cursor >= self.n:
            self.order = np.empty(0, dtype=np.int64)
        if self.order.size == 0:
            self.order = self.rng.permutation(self.n)
            self.cursor = 0
        out = self.order[self.cursor : self.cursor + self.batch]
        self.cursor += self.batch
        return out


def _classification_batch(dataset: Dataset, idx: list[int], rows: np.ndarray):
    x = np.stack([np.asarray(dataset.items[idx[r]], dtype=np.float64) for r in rows])
    y = np.array([int(dataset.targets[idx[r]]) for r in rows], dtype=np.int64)
    return x, y


def _segmentation_batch(dataset: Dataset, idx: list[int], rows: np.ndarray):
    x = np.stack([np.asarray(dataset.items[idx[r]], dtype=np.float64) for r in rows])
    masks = np.stack([dataset.targets[idx[r]].pixels for r in rows])
    void = dataset.targets[idx[rows[0]]].void_id
    return x, masks, void


def train_supervised(dataset: Dataset, labeled: Sequence[int], model, cfg: TrainConfig):
    """Train a fresh copy of ``model`` on the labeled subset; zero steps hand
    back an unchanged copy."""
    idx = _check_labeled(dataset, labeled)
    model = model.clone()
    rng = np.random.default_rng(cfg.seed)
    stream = _BatchStream(rng, len(idx), cfg.batch_labeled)

    if dataset.task == CLASSIFICATION:

        def batch_fn(_t: int):
            rows = stream.next()
            x, y = _classification_batch(dataset, idx, rows)
            return supervised_loss_and_grads(model, x, y, cfg.weight_decay)

    elif dataset.task == SEGMENTATION:

        def batch_fn(_t: int):
            rows = stream.next()
            x, masks, void = _segmentation_batch(dataset, idx, rows)
            return pixel_loss_and_grads(model, x, masks, void, cfg.weight_decay)

    else:
        raise LearnerError(f"unknown task {dataset.task!r}")

    _run_sgd(model, cfg, _total_steps(cfg, stream.steps_per_epoch), batch_fn)
    return model


def _perturb(x: np.ndarray, ssl: SSLConfig, rng: np.random.Generator) -> np.ndarray:
    if ssl.perturbation == GAUSSIAN_NOISE:
        return x + ssl.perturbation_scale * rng.standard_normal(x.shape)
    keep = rng.random(x.shape) >= ssl.perturbation_scale
    return x * keep / (1.0 - ssl.perturbation_scale)


def train_ssl(
    dataset: Dataset,
    labeled: Sequence[int],
    unlabeled: Sequence[int],
    model,
    ssl: SSLConfig,
    cfg: TrainConfig,
):
    """Supervised loss plus a consistency term on perturbed unlabeled inputs.

    Targets are sharpened snapshots of the clean predictions; low-confidence
    samples are masked out of the consistency term entirely.
    """
    if dataset.task != CLASSIFICATION:
        raise LearnerError("consistency training is only wired to classification models")
    pool = sorted(int(i) for i in unlabeled)
    if not pool and ssl.unlabeled_weight > 0:
        logger.warning("no unlabeled samples available; falling back to supervised training")
        return train_supervised(dataset, labeled, model, cfg)

    idx = _check_labeled(dataset, labeled)
    model = model.clone()
    rng = np.random.default_rng(cfg.seed)
    stream = _BatchStream(rng, len(idx), cfg.batch_labeled)
    batch_u = min(cfg.batch_unlabeled, len(pool)) if pool else 0

    def batch_fn(_t: int):
        rows = stream.next()
        x, y = _classification_batch(dataset, idx, rows)
        loss, grads = supervised_loss_and_grads(model, x, y, cfg.weight_decay)
        if batch_u > 0 and ssl.unlabeled_weight > 0:
            chosen = rng.choice(len(pool), size=batch_u, replace=False)
            xu = np.stack(
                [np.asarray(dataset.items[pool[c]], dtype=np.float64) for c in chosen]
            )
            targets, keep = consistency_targets(
                model, xu, ssl.temperature, ssl.confidence_mask
            )
            xp = _perturb(xu, ssl, rng)
            closs, cgrads = consistency_loss_and_grads(model, xp, targets, keep)
            loss += ssl.unlabeled_weight * closs
            grads = [g + ssl.unlabeled_weight * cg for g, cg in zip(grads, cgrads)]
        return loss, grads

    _run_sgd(model, cfg, _total_steps(cfg, stream.steps_per_epoch), batch_fn)
    return model


def train_ensemble(
    dataset: Dataset,
    labeled: Sequence[int],
    model_factory: Callable[[int], object],
    cfg: TrainConfig,
    ens: EnsembleConfig,
) -> list:
    """Independently seeded members; member 0 is the reporting model."""
    members = []
    for seed in ens.member_seeds or tuple(range(ens.size)):
        member_cfg = replace(cfg, seed=seed)
        members.append(train_supervised(dataset, labeled, model_factory(seed), member_cfg))
    return members


def train_loss_head(
    dataset: Dataset,
    labeled: Sequence[int],
    model: LossHeadModel,
    cfg: TrainConfig,
    margin: float = 1.0,
) -> LossHeadModel:
    """Joint training: cross-entropy on the backbone, ranking hinge on the
    head over random disjoint pairs within each batch."""
    if dataset.task != CLASSIFICATION:
        raise LearnerError("the loss head is only wired to classification models")
    if margin <= 0:
        raise LearnerError(f"margin must be positive, got {margin}")
    idx = _check_labeled(dataset, labeled)
    model = model.clone()
    rng = np.random.default_rng(cfg.seed)
    stream = _BatchStream(rng, len(idx), cfg.batch_labeled)
    odd_batches = 0

    def batch_fn(_t: int):
        nonlocal odd_batches
        rows = stream.next()
        x, y = _classification_batch(dataset, idx, rows)
        loss, grads = supervised_loss_and_grads(model, x, y, cfg.weight_decay)
        logits, _ = model.forward(x)
        true_losses = per_sample_cross_entropy(logits, y)
        order = rng.permutation(len(rows))
        if len(order) % 2:
            odd_batches += 1
            order = order[:-1]
        pairs = order.reshape(-1, 2)
        hloss, hgrads = pair_ranking_loss_and_grads(model, x, true_losses, pairs, margin)
        return loss + hloss, [g + hg for g, hg in zip(grads, hgrads)]

    _run_sgd(model, cfg, _total_steps(cfg, stream.steps_per_epoch), batch_fn)
    if odd_batches:
        logger.info("dropped the unpaired trailing sample in %d odd batches", odd_batches)
    return model


def accuracy(model, dataset: Dataset, indices: Sequence[int]) -> float:
    """Top-1 accuracy of a classification model on the given samples."""
    idx = [int(i) for i in indices]
    x = np.stack([np.asarray(dataset.items[i], dtype=np.float64) for i in idx])
    y = np.array([int(dataset.targets[i]) for i in idx])
    logits, _ = model.forward(x)
    return float((logits.argmax(axis=1) == y).mean())
