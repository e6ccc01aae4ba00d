"""Polygon annotation units and their click prices.

A click is one polygon vertex. Annotating a component costs the vertex count
of its simplified outer ring; annotating a whole image costs the sum over its
components. Costs are all-or-nothing: there is no partial credit for tracing
part of an outline.
"""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError
from .components import Component, extract_components
from .mask import LabelMask, Polygon, PolygonSet
from .raster import rasterize_polygons, ring_area
from .rdp import simplify_ring
from .trace import trace_outer_ring

IMAGE_REGIME = "image"
POLYGON_REGIME = "polygon"


def polygonize_component(component: Component, tolerance: float) -> Polygon:
    ring = trace_outer_ring(component.mask)
    return Polygon(class_id=component.class_id, ring=simplify_ring(ring, tolerance))


def polygonize_mask(mask: LabelMask, tolerance: float) -> PolygonSet:
    """Polygonize every component, emitted by descending enclosed area.

    Rasterization paints in this order, so a component nested inside another
    (its ring strictly encloses less area) always overwrites its surroundings
    and the composition round-trips exactly at tolerance 0.
    """
    polygons = [
        polygonize_component(comp, tolerance) for comp in extract_components(mask)
    ]
    polygons.sort(key=lambda p: -abs(ring_area(p.ring)))
    return PolygonSet.from_polygons(polygons, tolerance)


def component_click_cost(component: Component, tolerance: float) -> int:
    return len(polygonize_component(component, tolerance).ring)


def mask_click_cost(mask: LabelMask, tolerance: float) -> int:
    return sum(len(p.ring) for p in polygonize_mask(mask, tolerance).polygons)


def price_acquisition(
    mask: LabelMask,
    regime: str,
    tolerance: float,
    component_index: int | None = None,
) -> int:
    """Clicks charged for one annotation unit: a whole image, or one of the
    mask's components (by position in component order)."""
    if regime == IMAGE_REGIME:
        if component_index is not None:
            raise GeometryError("whole-image pricing takes no component")
        return mask_click_cost(mask, tolerance)
    if regime == POLYGON_REGIME:
        components = extract_components(mask)
        if component_index is None or not 0 <= component_index < len(components):
            raise GeometryError(
                f"component {component_index} is not one of the mask's {len(components)}"
            )
        return component_click_cost(components[component_index], tolerance)
    raise GeometryError(f"unknown labeling regime {regime!r}")


def select_polygon(
    entropy_map: np.ndarray, components: list[Component], threshold: float
) -> int:
    """Pick the component covering the most pixels with entropy > threshold.

    Returns a position into ``components``; ties go to the earliest entry.
    """
    if not components:
        raise GeometryError("no components left to annotate")
    if threshold <= 0:
        raise GeometryError(f"threshold must be positive, got {threshold}")
    emap = np.asarray(entropy_map, dtype=np.float64)
    if (emap < 0).any():
        raise GeometryError("entropy values cannot be negative")
    hot = emap > threshold
    best = -1
    best_area = -1
    for pos, comp in enumerate(components):
        area = int((hot & comp.mask).sum())
        if area > best_area:
            best, best_area = pos, area
    return best


def component_label_patch(
    polygon: Polygon, height: int, width: int, void_id: int = 255, tolerance: float = 0.0
) -> LabelMask:
    """Labels produced by annotating one component: the rasterized polygon's
    class where it fills, void everywhere else."""
    pset = PolygonSet.from_polygons([polygon], tolerance=tolerance)
    return rasterize_polygons(pset, height, width, void_id)


def merge_label_patches(base: LabelMask, patch: LabelMask) -> LabelMask:
    """Overlay newly annotated pixels onto accumulated partial labels."""
    if base.pixels.shape != patch.pixels.shape:
        raise GeometryError("label patches must share the mask shape")
    merged = base.pixels.copy()
    fresh = patch.pixels != patch.void_id
    merged[fresh] = patch.pixels[fresh]
    return LabelMask(pixels=merged, void_id=base.void_id)


def empty_labels(height: int, width: int, void_id: int = 255) -> LabelMask:
    return LabelMask(pixels=np.full((height, width), void_id, dtype=np.int64), void_id=void_id)
