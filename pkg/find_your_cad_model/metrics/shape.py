"""Point-cloud shape metrics: Chamfer distance, F1 at a distance and normal consistency.

All metrics compare clouds sampled from meshes that were first rescaled so the
longest edge of the ground-truth bounding box has length 10.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.geometry import bounding_box, sample_surface, scale_mesh
from find_your_cad_model.models import PointCloud, TriMesh

logger = logging.getLogger(__name__)

NORMALIZED_EXTENT = 10.0
F1_THRESHOLDS = (0.1, 0.3, 0.5)
METRIC_SAMPLES = 10_000


@dataclass
class ShapeScore:
    chamfer: float
    normal_consistency: float
    f1_at: Dict[float, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        result = {"chamfer": self.chamfer, "normal_consistency": self.normal_consistency}
        for threshold, value in sorted(self.f1_at.items()):
            result[f"f1@{threshold:g}"] = value
        return result


def normalization_factor(gt: TriMesh) -> float:
    extent = np.ptp(bounding_box(gt), axis=0).max()
    if extent <= 0:
        raise DomainError("ground-truth mesh has zero extent")
    return NORMALIZED_EXTENT / float(extent)


def normalize_scale(gt: TriMesh, pred: TriMesh) -> Tuple[TriMesh, TriMesh, float]:
    if len(gt.vertices) == 0:
        raise DomainError("ground-truth mesh is empty")
    factor = normalization_factor(gt)
    return scale_mesh(gt, factor), scale_mesh(pred, factor), factor


def _check_cloud(cloud: PointCloud, name: str) -> None:
    if len(cloud) == 0:
        raise DomainError(f"point cloud {name} is empty")


def _nearest(source: PointCloud, target: PointCloud) -> Tuple[np.ndarray, np.ndarray]:
    distances, indices = cKDTree(target.points).query(source.points, k=1)
    return distances, indices


def chamfer(a: PointCloud, b: PointCloud) -> float:
    """Mean squared nearest distance a->b plus the same for b->a."""
    _check_cloud(a, "a")
    _check_cloud(b, "b")
    d_ab, _ = _nearest(a, b)
    d_ba, _ = _nearest(b, a)
    return float(np.mean(d_ab**2) + np.mean(d_ba**2))


def precision_recall_at(a: PointCloud, b: PointCloud, threshold: float) -> Tuple[float, float]:
    _check_cloud(a, "a")
    _check_cloud(b, "b")
    if threshold <= 0:
        raise DomainError("distance threshold must be positive")
    d_ab, _ = _nearest(a, b)
    d_ba, _ = _nearest(b, a)
    return float(np.mean(d_ab <= threshold)), float(np.mean(d_ba <= threshold))


def f1_at(a: PointCloud, b: PointCloud, threshold: float) -> float:
    precision, recall = precision_recall_at(a, b, threshold)
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def normal_consistency(a: PointCloud, b: PointCloud) -> float:
    """Mean |cos| between each normal and its nearest neighbour's, both directions."""
    _check_cloud(a, "a")
    _check_cloud(b, "b")
    if a.normals is None or b.normals is None:
        raise DomainError("normal consistency needs normals on both clouds")
    _, idx_ab = _nearest(a, b)
    _, idx_ba = _nearest(b, a)
    cos_ab = np.abs(np.sum(a.normals * b.normals[idx_ab], axis=1))
    cos_ba = np.abs(np.sum(b.normals * a.normals[idx_ba], axis=1))
    return float(0.5 * (np.mean(cos_ab) + np.mean(cos_ba)))


def shape_score(
    pred: PointCloud, gt: PointCloud, thresholds: Sequence[float] = F1_THRESHOLDS
) -> ShapeScore:
    return ShapeScore(
        chamfer=chamfer(pred, gt),
        normal_consistency=normal_consistency(pred, gt),
        f1_at={t: f1_at(pred, gt, t) for t in thresholds},
    )


def compare_meshes(
    gt: TriMesh,
    pred: TriMesh,
    n_points: int = METRIC_SAMPLES,
    seed: int = 0,
    thresholds: Sequence[float] = F1_THRESHOLDS,
) -> ShapeScore:
    """Normalize the pair by the ground truth, sample both surfaces, score."""
    gt_n, pred_n, _ = normalize_scale(gt, pred)
    gt_cloud = sample_surface(gt_n, n_points, seed)
    pred_cloud = sample_surface(pred_n, n_points, seed)
    return shape_score(pred_cloud, gt_cloud, thresholds)
