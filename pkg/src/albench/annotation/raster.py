"""Polygon rasterization back onto a pixel grid.

Scanlines run through pixel centers (y = row + 0.5), which lattice-derived
rings can never pass through exactly, so crossing tests stay robust without
epsilon fudging. Spans use the even-odd rule. Polygons are painted in list
order, later entries overwriting earlier ones; producers that want nested
regions to win emit them later (see polygonize's area ordering).
"""

from __future__ import annotations

import numpy as np

from .mask import LabelMask, Polygon, PolygonSet


def ring_area(ring: np.ndarray) -> float:
    """Signed shoelace area of a closed ring (first vertex not repeated)."""
    x = ring[:, 0]
    y = ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _fill_ring(canvas: np.ndarray, ring: np.ndarray, class_id: int) -> None:
    height, width = canvas.shape
    ys = ring[:, 1]
    lo = max(0, int(np.floor(ys.min())))
    hi = min(height, int(np.ceil(ys.max())))
    x1 = ring[:, 0]
    y1 = ring[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)
    for row in range(lo, hi):
        yc = row + 0.5
        # Half-open in y: an edge is crossed when yc lies in [min, max).
        crosses = ((y1 <= yc) & (yc < y2)) | ((y2 <= yc) & (yc < y1))
        if not crosses.any():
            continue
        t = (yc - y1[crosses]) / (y2[crosses] - y1[crosses])
        xs = np.sort(x1[crosses] + t * (x2[crosses] - x1[crosses]))
        for xa, xb in zip(xs[0::2], xs[1::2]):
            # Pixel centers in [xa, xb): columns ceil(xa - 0.5) .. ceil(xb - 0.5) - 1.
            ca = max(0, int(np.ceil(xa - 0.5)))
            cb = min(width, int(np.ceil(xb - 0.5)))
            if cb > ca:
                canvas[row, ca:cb] = class_id


def rasterize_polygons(pset: PolygonSet, height: int, width: int, void_id: int = 255) -> LabelMask:
    """Paint a polygon set onto a uniform background canvas, in list order."""
    canvas = np.full((height, width), void_id, dtype=np.int64)
    for poly in pset.polygons:
        _fill_ring(canvas, poly.ring, poly.class_id)
    return LabelMask(pixels=canvas, void_id=void_id)
