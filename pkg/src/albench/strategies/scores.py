"""Per-sample uncertainty scores used by the query strategies."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidDistributionError

SIMPLEX_ATOL = 1e-6


def check_simplex(probs: np.ndarray) -> np.ndarray:
    """Validate rows as probability vectors; returns float64 view."""
    p = np.asarray(probs, dtype=np.float64)
    rows = p.reshape(-1, p.shape[-1])
    if (rows < 0).any():
        raise InvalidDistributionError("probabilities must be non-negative")
    sums = rows.sum(axis=1)
    off = np.abs(sums - 1.0)
    if (off > SIMPLEX_ATOL).any():
        worst = float(off.max())
        raise InvalidDistributionError(
            f"probability rows must sum to 1 within {SIMPLEX_ATOL}, worst deviation {worst:g}"
        )
    return p


def shannon_entropy(probs: np.ndarray) -> np.ndarray | float:
    """Entropy in nats, with 0 * log 0 taken as 0.

    Accepts a single probability vector or a batch of rows; returns a scalar
    for a single vector.
    """
    p = check_simplex(probs)
    single = p.ndim == 1
    rows = np.atleast_2d(p)
    terms = np.where(rows > 0, rows * np.log(np.where(rows > 0, rows, 1.0)), 0.0)
    h = -terms.sum(axis=1)
    # Clip the tiny negative values that p ~ 1 rows can produce in float64.
    h = np.maximum(h, 0.0)
    return float(h[0]) if single else h


def variation_ratio(votes: np.ndarray) -> np.ndarray | float:
    """Disagreement of a committee: 1 - (modal vote count) / T.

    Accepts one vote vector of length T or a (n, T) matrix. Which class wins
    a modal-frequency tie does not change the value.
    """
    v = np.asarray(votes)
    if v.dtype == object or v.ndim > 2:
        raise ValueError("votes must form a rectangular (n, T) matrix")
    if v.size == 0:
        raise ValueError("vote vector must not be empty")
    if (v < 0).any():
        raise ValueError("votes must be non-negative class ids")
    single = v.ndim == 1
    mat = np.atleast_2d(v)
    t = mat.shape[1]
    if t < 2:
        raise ValueError(f"committees need at least 2 members, got {t}")
    out = np.empty(mat.shape[0], dtype=np.float64)
    for i, row in enumerate(mat):
        counts = np.bincount(row.astype(np.int64))
        out[i] = 1.0 - counts.max() / t
    return float(out[0]) if single else out


def ranking_hinge(
    loss_pair: tuple[float, float], pred_pair: tuple[float, float], margin: float = 1.0
) -> float:
    """Pairwise ranking hinge max(0, -sign(l_i - l_j)(s_i - s_j) + margin).

    sign(0) counts as +1 so equal true losses still demand s_i >= s_j + margin.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    li, lj = loss_pair
    si, sj = pred_pair
    sign = 1.0 if li - lj >= 0 else -1.0
    return max(0.0, -sign * (si - sj) + margin)


def seg_uncertainty_score(entropy_map: np.ndarray, threshold: float) -> int:
    """Number of pixels whose entropy strictly exceeds the threshold."""
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    m = np.asarray(entropy_map, dtype=np.float64)
    if (m < 0).any():
        raise ValueError("entropy values cannot be negative")
    return int((m > threshold).sum())


def average_probability_maps(member_maps: np.ndarray) -> np.ndarray:
    """Mean over committee members of per-pixel class probabilities.

    Input is (T, H, W, C); the result is (H, W, C), still on the simplex.
    """
    maps = np.asarray(member_maps, dtype=np.float64)
    if maps.ndim != 4:
        raise ValueError(f"expected (T, H, W, C) member maps, got shape {maps.shape}")
    if maps.shape[0] < 2:
        raise ValueError("committees need at least 2 members")
    return maps.mean(axis=0)
