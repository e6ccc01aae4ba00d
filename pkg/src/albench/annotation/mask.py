"""Dense label rasters and their polygonal approximations.

Polygon rings live in pixel-corner coordinates: pixel (row r, col c) occupies
the unit square [c, c+1] x [r, r+1] with x = column and y = row (y grows
downward). Rings are closed implicitly (the last vertex connects back to the
first) and are stored without repeating the first vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


VOID_ID = 255


@dataclass(frozen=True)
class LabelMask:
    """A dense class-id raster; ``void_id`` pixels are ignored everywhere.

    255 is reserved for void by convention, so class ids must stay below it.
    """

    pixels: np.ndarray
    void_id: int = VOID_ID

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    def valid(self) -> np.ndarray:
        """Boolean map of pixels that carry a real label."""
        return self.pixels != self.void_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelMask):
            return NotImplemented
        return self.void_id == other.void_id and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.pixels.tobytes(), self.pixels.shape, self.void_id))


@dataclass(frozen=True)
class Polygon:
    """One closed ring with its class id."""

    class_id: int
    ring: np.ndarray  # (m, 2) float, columns (x, y), m >= 3

    def __post_init__(self) -> None:
        arr = np.asarray(self.ring, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"ring must be (m, 2), got {arr.shape}")
        if arr.shape[0] < 3:
            raise ValueError(f"ring needs at least 3 vertices, got {arr.shape[0]}")
        arr.setflags(write=False)
        object.__setattr__(self, "ring", arr)

    def __len__(self) -> int:
        return int(self.ring.shape[0])


@dataclass(frozen=True)
class PolygonSet:
    """Polygonal annotation of one image; ``clicks`` counts all vertices."""

    polygons: tuple[Polygon, ...]
    clicks: int
    tolerance: float

    def __post_init__(self) -> None:
        total = sum(len(p) for p in self.polygons)
        if total != self.clicks:
            raise ValueError(f"clicks {self.clicks} != total ring vertices {total}")

    @staticmethod
    def from_polygons(polygons: Sequence[Polygon], tolerance: float) -> "PolygonSet":
        polys = tuple(polygons)
        return PolygonSet(
            polygons=polys,
            clicks=sum(len(p) for p in polys),
            tolerance=float(tolerance),
        )


def polygon_set_to_json(pset: PolygonSet) -> str:
    """Serialize as ``[{class, ring: [[x, y], ...]}]`` plus a tolerance field."""
    doc = {
        "tolerance": pset.tolerance,
        "clicks": pset.clicks,
        "polygons": [
            {"class": p.class_id, "ring": [[float(x), float(y)] for x, y in p.ring]}
            for p in pset.polygons
        ],
    }
    return json.dumps(doc)


def polygon_set_from_json(text: str) -> PolygonSet:
    doc = json.loads(text)
    polys = [
        Polygon(class_id=int(p["class"]), ring=np.asarray(p["ring"], dtype=np.float64))
        for p in doc["polygons"]
    ]
    pset = PolygonSet.from_polygons(polys, tolerance=float(doc["tolerance"]))
    if pset.clicks != int(doc["clicks"]):
        raise ValueError("stored click count disagrees with ring vertices")
    return pset
