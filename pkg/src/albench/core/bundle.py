"""Per-sample model outputs consumed by query strategies.

A bundle is always aligned to an explicit index list: row i of every field
describes sample ``indices[i]``. Strategies declare which fields they need;
the bundle only promises that at least one field is present and that every
present field is well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from ..errors import BundleError, InvalidDistributionError

SIMPLEX_ATOL = 1e-6

FIELD_NAMES = ("probs", "features", "pred_loss", "ensemble_votes", "entropy_maps", "disc_scores")


@dataclass(frozen=True)
class PredictionBundle:
    indices: tuple[int, ...]
    probs: np.ndarray | None = None
    features: np.ndarray | None = None
    pred_loss: np.ndarray | None = None
    ensemble_votes: np.ndarray | None = None
    entropy_maps: tuple[np.ndarray, ...] | None = None
    disc_scores: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        for name in ("probs", "features", "pred_loss", "ensemble_votes", "disc_scores"):
            val = getattr(self, name)
            if val is not None:
                arr = np.asarray(val, dtype=np.int64 if name == "ensemble_votes" else np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.entropy_maps is not None:
            maps = tuple(np.asarray(m, dtype=np.float64) for m in self.entropy_maps)
            for m in maps:
                m.setflags(write=False)
            object.__setattr__(self, "entropy_maps", maps)
        self.validate()

    def present_fields(self) -> tuple[str, ...]:
        return tuple(n for n in FIELD_NAMES if getattr(self, n) is not None)

    def validate(self) -> None:
        """Raise BundleError unless every bundle invariant holds."""
        n = len(self.indices)
        if len(set(self.indices)) != n:
            raise BundleError("duplicate sample indices in bundle")
        if not self.present_fields():
            raise BundleError("bundle must populate at least one field")
        if self.probs is not None:
            if self.probs.ndim != 2 or self.probs.shape[0] != n:
                raise BundleError(f"probs must be ({n}, num_classes), got {self.probs.shape}")
            rows = np.abs(self.probs.sum(axis=1) - 1.0)
            bad = np.nonzero((rows > SIMPLEX_ATOL) | np.any(self.probs < 0, axis=1))[0]
            if bad.size:
                raise InvalidDistributionError(
                    f"probs row {int(bad[0])} off the simplex (|sum-1|={rows[int(bad[0])]:.2e})"
                )
        if self.features is not None:
            if self.features.ndim != 2 or self.features.shape[0] != n:
                raise BundleError(f"features must be ({n}, d), got {self.features.shape}")
        if self.pred_loss is not None:
            if self.pred_loss.shape != (n,):
                raise BundleError(f"pred_loss must be ({n},), got {self.pred_loss.shape}")
            if not np.all(np.isfinite(self.pred_loss)):
                raise BundleError("pred_loss contains non-finite values")
        if self.ensemble_votes is not None:
            if self.ensemble_votes.ndim != 2 or self.ensemble_votes.shape[0] != n:
                raise BundleError(
                    f"ensemble_votes must be ({n}, T), got {self.ensemble_votes.shape}"
                )
            if self.ensemble_votes.shape[1] < 2:
                raise BundleError("ensemble_votes needs at least 2 members")
        if self.entropy_maps is not None:
            if len(self.entropy_maps) != n:
                raise BundleError(f"need {n} entropy maps, got {len(self.entropy_maps)}")
            for i, m in enumerate(self.entropy_maps):
                if m.ndim != 2:
                    raise BundleError(f"entropy map {i} must be 2-D")
                if np.any(m < 0):
                    raise BundleError(f"entropy map {i} has negative entries")
        if self.disc_scores is not None:
            if self.disc_scores.shape != (n,):
                raise BundleError(f"disc_scores must be ({n},), got {self.disc_scores.shape}")
            if np.any((self.disc_scores < 0) | (self.disc_scores > 1)):
                raise BundleError("disc_scores must lie in [0, 1]")

    def restrict(self, field_names: Sequence[str]) -> "PredictionBundle":
        """Keep only the named fields (used by the wire protocol)."""
        kept = {n: getattr(self, n) for n in field_names}
        return PredictionBundle(indices=self.indices, **kept)
