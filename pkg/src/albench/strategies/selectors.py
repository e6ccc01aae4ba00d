"""Query strategies: rank the unlabeled pool for acquisition.

Every selector is a pure function of its inputs. Ties are always broken
toward the lower sample index so replays are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..core.bundle import PredictionBundle
from ..core.pool import PoolState
from ..errors import BundleError, ConfigError, PoolError
from .scores import seg_uncertainty_score, shannon_entropy, variation_ratio

RANDOM = "random"
ENTROPY = "entropy"
ENS_VARR = "ens_varr"
CORESET = "coreset"
LEARN_LOSS = "learn_loss"
SEG_ENTROPY = "seg_entropy"
ENS_ENT = "ens_ent"
D_SCORE = "d_score"

STRATEGY_KINDS = (
    RANDOM,
    ENTROPY,
    ENS_VARR,
    CORESET,
    LEARN_LOSS,
    SEG_ENTROPY,
    ENS_ENT,
    D_SCORE,
)

# Bundle fields each strategy consumes; random needs none.
REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    RANDOM: (),
    ENTROPY: ("probs",),
    ENS_VARR: ("ensemble_votes",),
    CORESET: ("features",),
    LEARN_LOSS: ("pred_loss",),
    SEG_ENTROPY: ("entropy_maps",),
    ENS_ENT: ("entropy_maps",),
    D_SCORE: ("disc_scores",),
}

ENSEMBLE_KINDS = (ENS_VARR, ENS_ENT)

# Strategies that rank by per-pixel entropy maps.
SEG_KINDS = (SEG_ENTROPY, ENS_ENT)

TIE_LOWER_INDEX = "lower-index"


@dataclass(frozen=True)
class StrategySpec:
    """A strategy kind plus its parameters.

    Recognized params: ``entropy_threshold`` (pixel-count strategies),
    ``ensemble_size`` (committee strategies), ``hinge_margin`` (loss-ranking
    head training).
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(
                f"unknown strategy {self.kind!r}; expected one of {', '.join(STRATEGY_KINDS)}"
            )
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    @property
    def entropy_threshold(self) -> float:
        return float(self.params.get("entropy_threshold", 0.6))

    @property
    def ensemble_size(self) -> int:
        return int(self.params.get("ensemble_size", 5))

    @property
    def hinge_margin(self) -> float:
        return float(self.params.get("hinge_margin", 1.0))


def validate_strategy_spec(spec: StrategySpec, num_classes: int) -> None:
    """Range checks that need the dataset's class count."""
    if spec.kind in (SEG_ENTROPY, ENS_ENT):
        tau = spec.entropy_threshold
        max_h = math.log(num_classes)
        if not 0 < tau <= max_h:
            raise ConfigError(
                f"entropy_threshold {tau} outside (0, ln {num_classes} = {max_h:.6f}]"
            )
    if spec.kind in ENSEMBLE_KINDS and spec.ensemble_size < 2:
        raise ConfigError(f"ensemble_size must be >= 2, got {spec.ensemble_size}")
    if spec.kind == LEARN_LOSS and spec.hinge_margin <= 0:
        raise ConfigError(f"hinge_margin must be positive, got {spec.hinge_margin}")


@dataclass(frozen=True)
class Ranking:
    """Acquisition priorities, best first."""

    pairs: tuple[tuple[int, float], ...]
    tie_rule: str = TIE_LOWER_INDEX

    def __post_init__(self) -> None:
        idx = [i for i, _ in self.pairs]
        if len(set(idx)) != len(idx):
            raise ValueError("ranking indices must be unique")
        if any(not math.isfinite(s) for _, s in self.pairs):
            raise ValueError("ranking scores must be finite")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def _as_indices(indices: Sequence[int] | None, n: int) -> np.ndarray:
    if indices is None:
        return np.arange(n, dtype=np.int64)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.shape != (n,):
        raise BundleError(f"expected {n} indices, got shape {idx.shape}")
    return idx


def _check_k(k: int, n: int) -> None:
    if k < 0:
        raise PoolError(f"cannot select a negative count ({k})")
    if k > n:
        raise PoolError(f"cannot select {k} of {n} candidates")


def _rank(indices: np.ndarray, scores: np.ndarray, k: int, descending: bool) -> Ranking:
    keys = -scores if descending else scores
    order = np.lexsort((indices, keys))[:k]
    pairs = tuple((int(indices[i]), float(scores[i])) for i in order)
    return Ranking(pairs=pairs)


def select_random(pool: PoolState, k: int, seed: int) -> Ranking:
    """Uniform draw without replacement from the unlabeled pool."""
    candidates = np.array(sorted(pool.unlabeled), dtype=np.int64)
    _check_k(k, len(candidates))
    rng = np.random.default_rng(seed)
    priorities = rng.random(len(candidates))
    return _rank(candidates, priorities, k, descending=True)


def select_entropy(
    probs: np.ndarray, k: int, indices: Sequence[int] | None = None
) -> Ranking:
    """Highest softmax entropy first."""
    p = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    idx = _as_indices(indices, p.shape[0])
    _check_k(k, p.shape[0])
    scores = np.asarray(shannon_entropy(p))
    return _rank(idx, scores, k, descending=True)


def select_varr(
    votes: np.ndarray, k: int, indices: Sequence[int] | None = None
) -> Ranking:
    """Largest committee disagreement first."""
    mat = np.atleast_2d(np.asarray(votes))
    idx = _as_indices(indices, mat.shape[0])
    _check_k(k, mat.shape[0])
    scores = np.asarray(variation_ratio(mat))
    return _rank(idx, scores, k, descending=True)


def select_coreset_greedy(
    features: np.ndarray,
    labeled_features: np.ndarray,
    k: int,
    indices: Sequence[int] | None = None,
) -> Ranking:
    """Farthest-first traversal seeded by the labeled set.

    Each pick maximizes the Euclidean distance to the nearest labeled or
    already-picked point; the recorded score is that max-min distance, which
    never increases from one pick to the next.
    """
    feats = np.asarray(features, dtype=np.float64)
    seeds = np.asarray(labeled_features, dtype=np.float64)
    if feats.ndim != 2:
        raise BundleError(f"features must be (n, d), got {feats.shape}")
    if seeds.ndim != 2 or seeds.shape[0] == 0:
        raise PoolError("farthest-first needs at least one labeled point as seed")
    if seeds.shape[1] != feats.shape[1]:
        raise BundleError(
            f"feature dims differ: unlabeled {feats.shape[1]}, labeled {seeds.shape[1]}"
        )
    idx = _as_indices(indices, feats.shape[0])
    _check_k(k, feats.shape[0])

    min_dist = cdist(feats, seeds).min(axis=1)
    taken = np.zeros(feats.shape[0], dtype=bool)
    pairs: list[tuple[int, float]] = []
    for _ in range(k):
        masked = np.where(taken, -np.inf, min_dist)
        best = masked.max()
        cand = np.flatnonzero(masked == best)
        pick = cand[np.argmin(idx[cand])]
        pairs.append((int(idx[pick]), float(min_dist[pick])))
        taken[pick] = True
        dist_to_pick = np.linalg.norm(feats - feats[pick], axis=1)
        min_dist = np.minimum(min_dist, dist_to_pick)
    return Ranking(pairs=tuple(pairs))


def select_learn_loss(
    pred_loss: np.ndarray, k: int, indices: Sequence[int] | None = None
) -> Ranking:
    """Largest predicted training loss first."""
    scores = np.asarray(pred_loss, dtype=np.float64).reshape(-1)
    idx = _as_indices(indices, scores.shape[0])
    _check_k(k, scores.shape[0])
    if not np.isfinite(scores).all():
        raise BundleError("predicted losses must be finite")
    return _rank(idx, scores, k, descending=True)


def select_seg_entropy(
    entropy_maps: Sequence[np.ndarray],
    threshold: float,
    k: int,
    indices: Sequence[int] | None = None,
) -> Ranking:
    """Most pixels above the entropy threshold first.

    Serves both the single-model and the committee pipeline; for a committee
    the maps must come from member-averaged probabilities.
    """
    idx = _as_indices(indices, len(entropy_maps))
    _check_k(k, len(entropy_maps))
    scores = np.array(
        [seg_uncertainty_score(m, threshold) for m in entropy_maps], dtype=np.float64
    )
    return _rank(idx, scores, k, descending=True)


def select_d_score(
    disc_scores: np.ndarray, k: int, indices: Sequence[int] | None = None
) -> Ranking:
    """Lowest discriminator rating first."""
    scores = np.asarray(disc_scores, dtype=np.float64).reshape(-1)
    idx = _as_indices(indices, scores.shape[0])
    _check_k(k, scores.shape[0])
    if (scores < 0).any() or (scores > 1).any():
        raise BundleError("discriminator scores must lie in [0, 1]")
    return _rank(idx, scores, k, descending=False)


def run_strategy(
    spec: StrategySpec,
    bundle: PredictionBundle | None,
    pool: PoolState,
    k: int,
    seed: int,
    labeled_features: np.ndarray | None = None,
) -> Ranking:
    """Dispatch a StrategySpec against a prediction bundle."""
    if spec.kind == RANDOM:
        return select_random(pool, k, seed)
    if bundle is None:
        raise BundleError(f"strategy {spec.kind!r} needs a prediction bundle")
    for name in REQUIRED_FIELDS[spec.kind]:
        if getattr(bundle, name) is None:
            raise BundleError(f"strategy {spec.kind!r} requires bundle field {name!r}")
    idx = bundle.indices
    if spec.kind == ENTROPY:
        return select_entropy(bundle.probs, k, idx)
    if spec.kind == ENS_VARR:
        return select_varr(bundle.ensemble_votes, k, idx)
    if spec.kind == CORESET:
        if labeled_features is None:
            raise PoolError("farthest-first needs the labeled set's features")
        return select_coreset_greedy(bundle.features, labeled_features, k, idx)
    if spec.kind == LEARN_LOSS:
        return select_learn_loss(bundle.pred_loss, k, idx)
    if spec.kind in (SEG_ENTROPY, ENS_ENT):
        return select_seg_entropy(bundle.entropy_maps, spec.entropy_threshold, k, idx)
    if spec.kind == D_SCORE:
        return select_d_score(bundle.disc_scores, k, idx)
    raise ConfigError(f"unhandled strategy kind {spec.kind!r}")
