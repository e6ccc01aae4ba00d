"""Connected-component extraction from label masks.

Components are 4-connected regions of a single class. Void pixels never form
components. The returned order is deterministic: by the component's topmost
row, then its leftmost column in that row. Distinct components cannot share
that anchor pixel, so the order is total and stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .mask import LabelMask

# 4-connectivity: share an edge, not just a corner.
_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Component:
    """One 4-connected same-class region of a mask."""

    class_id: int
    mask: np.ndarray = field(repr=False)  # bool (H, W)
    area: int
    anchor: tuple[int, int]  # (row, col) of the top-left-most pixel

    def pixel_indices(self) -> np.ndarray:
        """(k, 2) int64 array of (row, col) pairs, row-major order."""
        rows, cols = np.nonzero(self.mask)
        return np.stack([rows, cols], axis=1).astype(np.int64)


def extract_components(mask: LabelMask) -> list[Component]:
    """All 4-connected single-class components of ``mask``, void excluded."""
    out: list[Component] = []
    class_ids = np.unique(mask.pixels)
    for cls in class_ids:
        cls = int(cls)
        if cls == mask.void_id:
            continue
        binary = mask.pixels == cls
        labeled, count = ndimage.label(binary, structure=_STRUCTURE)
        for comp_id in range(1, count + 1):
            comp_mask = labeled == comp_id
            rows, cols = np.nonzero(comp_mask)
            top = rows.min()
            left = cols[rows == top].min()
            out.append(
                Component(
                    class_id=cls,
                    mask=comp_mask,
                    area=int(comp_mask.sum()),
                    anchor=(int(top), int(left)),
                )
            )
    out.sort(key=lambda c: c.anchor)
    return out
