"""Polygon annotation simulator: tracing, simplification, rasterization,
click pricing, and segmentation metrics."""

from .components import Component, extract_components
from .mask import LabelMask, Polygon, PolygonSet, polygon_set_from_json, polygon_set_to_json
from .metrics import (
    confusion_matrix,
    corpus_mean_iou,
    mean_iou,
    miou_from_confusion,
    pixel_accuracy,
)
from .pricing import (
    IMAGE_REGIME,
    POLYGON_REGIME,
    component_click_cost,
    component_label_patch,
    empty_labels,
    mask_click_cost,
    merge_label_patches,
    polygonize_component,
    polygonize_mask,
    price_acquisition,
    select_polygon,
)
from .raster import rasterize_polygons, ring_area
from .rdp import simplify_ring
from .sweep import SweepRow, read_sweep_csv, tolerance_sweep, write_sweep_csv
from .trace import trace_outer_ring

__all__ = [
    "Component",
    "IMAGE_REGIME",
    "LabelMask",
    "POLYGON_REGIME",
    "Polygon",
    "PolygonSet",
    "SweepRow",
    "component_click_cost",
    "component_label_patch",
    "confusion_matrix",
    "corpus_mean_iou",
    "empty_labels",
    "extract_components",
    "mask_click_cost",
    "mean_iou",
    "merge_label_patches",
    "miou_from_confusion",
    "pixel_accuracy",
    "polygon_set_from_json",
    "polygon_set_to_json",
    "polygonize_component",
    "polygonize_mask",
    "price_acquisition",
    "rasterize_polygons",
    "read_sweep_csv",
    "ring_area",
    "select_polygon",
    "simplify_ring",
    "trace_outer_ring",
    "tolerance_sweep",
    "write_sweep_csv",
]
