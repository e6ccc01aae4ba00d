"""Per-pixel uncertainty rasters from probability maps."""

from __future__ import annotations

import numpy as np


def entropy_map_from_probs(pixel_probs: np.ndarray) -> np.ndarray:
    """(H, W, C) probabilities -> (H, W) entropy in nats, 0 log 0 = 0."""
    p = np.asarray(pixel_probs, dtype=np.float64)
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return np.maximum(-terms.sum(axis=-1), 0.0)
