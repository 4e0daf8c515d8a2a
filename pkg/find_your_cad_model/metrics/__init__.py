"""
Evaluation metrics: shape similarity, detection AP and Mesh AP.
"""

from .detection import (
    COCO_THRESHOLDS,
    ApInput,
    ApResult,
    ApSummary,
    GroundTruth,
    MeshF1Matcher,
    Prediction,
    ap_sweep,
    average_precision,
    box_iou,
    interpolated_ap,
    mask_iou,
    mesh_ap,
)
from .report import EvaluationReport, mean_shape_scores, validate_report
from .shape import (
    F1_THRESHOLDS,
    METRIC_SAMPLES,
    ShapeScore,
    chamfer,
    compare_meshes,
    f1_at,
    normal_consistency,
    normalization_factor,
    normalize_scale,
    precision_recall_at,
    shape_score,
)

__all__ = [
    "COCO_THRESHOLDS",
    "F1_THRESHOLDS",
    "METRIC_SAMPLES",
    "ApInput",
    "ApResult",
    "ApSummary",
    "EvaluationReport",
    "GroundTruth",
    "MeshF1Matcher",
    "Prediction",
    "ShapeScore",
    "ap_sweep",
    "average_precision",
    "box_iou",
    "chamfer",
    "compare_meshes",
    "f1_at",
    "interpolated_ap",
    "mask_iou",
    "mean_shape_scores",
    "mesh_ap",
    "normal_consistency",
    "normalization_factor",
    "normalize_scale",
    "precision_recall_at",
    "shape_score",
    "validate_report",
]
