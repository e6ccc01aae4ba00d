"""Core data model: datasets, pools, budgets, bundles, run records."""

from .budget import CLICKS, SAMPLES, Budget
from .bundle import PredictionBundle
from .dataset import (
    CLASSIFICATION,
    SEGMENTATION,
    Dataset,
    Violation,
    load_csv_dataset,
    load_image_dataset,
    save_csv_dataset,
    save_mask_image,
    validate_dataset,
)
from .pool import PoolState, annotate_polygon, apply_acquisition, pool_state_from_json, pool_state_to_json
from .records import (
    ACCURACY,
    MIOU,
    CurvePoint,
    ExperimentRecord,
    record_from_json,
    record_to_json,
)
from .synthetic import (
    make_blob_mask,
    make_blobs,
    make_seg_dataset,
    make_two_moons,
    moons_boundary_margin,
)

__all__ = [
    "ACCURACY",
    "CLASSIFICATION",
    "CLICKS",
    "MIOU",
    "SAMPLES",
    "SEGMENTATION",
    "Budget",
    "CurvePoint",
    "Dataset",
    "ExperimentRecord",
    "PoolState",
    "PredictionBundle",
    "Violation",
    "annotate_polygon",
    "apply_acquisition",
    "load_csv_dataset",
    "load_image_dataset",
    "make_blob_mask",
    "make_blobs",
    "make_seg_dataset",
    "make_two_moons",
    "moons_boundary_margin",
    "pool_state_from_json",
    "pool_state_to_json",
    "record_from_json",
    "record_to_json",
    "save_csv_dataset",
    "save_mask_image",
    "validate_dataset",
]
