"""Ramer-Douglas-Peucker simplification for closed rings.

A vertex is discarded only when its deviation is strictly below the
tolerance, so tolerance 0 keeps every vertex. The recursion always splits at
the farthest vertex (ties to the lowest index) whether or not anything gets
discarded; the recursion tree therefore does not depend on the tolerance,
which makes the kept vertex set shrink monotonically as tolerance grows.
"""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError


def _deviations(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Perpendicular distance from each point to the line through a and b.

    Falls back to plain Euclidean distance when a == b, which can happen for
    rings that pass through the same corner twice.
    """
    chord = b - a
    length = np.hypot(chord[0], chord[1])
    rel = points - a
    if length == 0.0:
        return np.hypot(rel[:, 0], rel[:, 1])
    cross = rel[:, 0] * chord[1] - rel[:, 1] * chord[0]
    return np.abs(cross) / length


def _simplify_chain(points: np.ndarray, lo: int, hi: int, epsilon: float, keep: set[int]) -> None:
    """Mark kept vertices of the open chain points[lo..hi]; endpoints stay."""
    keep.add(lo)
    keep.add(hi)
    if hi - lo < 2:
        return
    interior = points[lo + 1 : hi]
    dists = _deviations(interior, points[lo], points[hi])
    split = lo + 1 + int(np.argmax(dists))
    if dists[split - lo - 1] < epsilon:
        return  # whole interior deviates by less than the tolerance
    _simplify_chain(points, lo, split, epsilon, keep)
    _simplify_chain(points, split, hi, epsilon, keep)


def _farthest_pair(points: np.ndarray) -> tuple[int, int]:
    """Indices of the two mutually farthest vertices, lowest pair on ties."""
    diff = points[:, None, :] - points[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    n = len(points)
    iu = np.triu_indices(n, k=1)
    flat = d2[iu]
    best = int(np.argmax(flat))  # argmax takes the first = lexicographically least (i, j)
    return int(iu[0][best]), int(iu[1][best])


def simplify_ring(ring: np.ndarray, epsilon: float) -> np.ndarray:
    """Simplify a closed ring, preserving at least three vertices.

    The ring is split at its two mutually farthest vertices and each open arc
    is simplified independently. If that collapses the ring to fewer than
    three vertices, the split is redone with a third anchor: the vertex
    farthest from the line through the first two. Splitting (rather than
    re-adding a vertex afterwards) keeps every discarded vertex within the
    tolerance of the simplified outline.
    """
    ring = np.asarray(ring, dtype=np.float64)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise GeometryError(f"ring must be (m, 2), got {ring.shape}")
    n = len(ring)
    if n < 3:
        raise GeometryError(f"ring needs at least 3 vertices, got {n}")
    if epsilon < 0:
        raise GeometryError(f"tolerance must be non-negative, got {epsilon}")

    i, j = _farthest_pair(ring)
    kept = _simplify_cyclic(ring, [i, j], epsilon)
    if len(kept) < 3:
        dists = _deviations(ring, ring[i], ring[j])
        dists[i] = dists[j] = -1.0  # anchors cannot anchor again
        k = int(np.argmax(dists))
        kept = _simplify_cyclic(ring, sorted({i, j, k}), epsilon)
    return ring[kept]


def _simplify_cyclic(ring: np.ndarray, anchors: list[int], epsilon: float) -> list[int]:
    """Run chain simplification between consecutive anchors around the ring."""
    n = len(ring)
    anchors = sorted(anchors)
    # Unroll the ring so each arc is a contiguous chain; the last arc wraps.
    extended = np.concatenate([ring, ring], axis=0)
    keep: set[int] = set()
    for a, b in zip(anchors, anchors[1:] + [anchors[0] + n]):
        sub: set[int] = set()
        _simplify_chain(extended, a, b, epsilon, sub)
        keep.update(idx % n for idx in sub)
    return sorted(keep)
