"""Outer-boundary tracing for 4-connected pixel regions.

The boundary is walked along pixel-corner lattice points with the region kept
on the right-hand side of the walk direction (y grows downward). At a pinch
corner, where two diagonally opposite pixels belong to the region and the
other two do not, the walk turns right. That choice treats the background as
8-connected, so the walk never splits the outer boundary into several loops:
diagonal pockets are traced as bays of the single outer ring.

Only the outer ring is returned. Hole boundaries are separate loops that the
walk never enters; nested regions are recovered later by paint order.
"""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError

# Directions as (dx, dy) in corner coordinates, y downward.
_EAST = (1, 0)
_SOUTH = (0, 1)
_WEST = (-1, 0)
_NORTH = (0, -1)


def _has_out_edge(mask: np.ndarray, corner: tuple[int, int], d: tuple[int, int]) -> bool:
    """Whether a boundary edge leaves ``corner`` in direction ``d``.

    An edge exists when the pixel on its right is inside and the pixel on its
    left is outside.
    """
    x, y = corner
    h, w = mask.shape

    def inside(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(mask[r, c])

    nw = inside(y - 1, x - 1)
    ne = inside(y - 1, x)
    sw = inside(y, x - 1)
    se = inside(y, x)
    if d == _EAST:
        return se and not ne
    if d == _SOUTH:
        return sw and not se
    if d == _WEST:
        return nw and not sw
    if d == _NORTH:
        return ne and not nw
    raise GeometryError(f"not a unit direction: {d}")


def trace_outer_ring(mask: np.ndarray) -> np.ndarray:
    """Trace the full-resolution outer ring of a boolean pixel mask.

    Returns an (m, 2) float64 array of (x, y) lattice corners, one per unit
    step, closed implicitly (the first vertex is not repeated). The walk
    starts at the top-left corner of the topmost-then-leftmost pixel and
    first moves in +x, so orientation is uniform across regions.
    """
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise GeometryError("cannot trace an empty mask")
    r0 = int(rows.min())
    c0 = int(cols[rows == r0].min())
    start = (c0, r0)

    ring: list[tuple[int, int]] = [start]
    pos = start
    d = _EAST  # top edge of the start pixel always exists
    # Each directed boundary edge is consumed once, so the walk terminates.
    max_steps = 4 * mask.size + 4
    for _ in range(max_steps):
        pos = (pos[0] + d[0], pos[1] + d[1])
        if pos == start:
            return np.array(ring, dtype=np.float64)
        ring.append(pos)
        right = (-d[1], d[0])
        left = (d[1], -d[0])
        for cand in (right, d, left):
            if _has_out_edge(mask, pos, cand):
                d = cand
                break
        else:
            raise GeometryError(f"boundary walk stuck at corner {pos}")
    raise GeometryError("boundary walk failed to close")
