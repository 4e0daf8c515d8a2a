"""Canonical view selection and jittered ground-truth views."""

import logging
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.geometry import (
    geodesic_matrix,
    kmedoid_from_matrix,
    quat_multiply,
    random_small_rotation,
)
from find_your_cad_model.models import Quaternion, TriMesh

from .raster import VIEW_RESOLUTION, render_view

logger = logging.getLogger(__name__)


def select_canonical_views(
    train_view_rotations: Mapping[int, Sequence[Quaternion]], k: int, seed: int
) -> Dict[int, List[Quaternion]]:
    """K-medoid rotations per class, in ascending order of their training index."""
    views = {}
    for class_id in sorted(train_view_rotations):
        rotations = list(train_view_rotations[class_id])
        if len(rotations) < k:
            raise DomainError(
                f"class {class_id} has {len(rotations)} training views, need {k}"
            )
        result = kmedoid_from_matrix(geodesic_matrix(rotations), k, seed)
        views[class_id] = [rotations[i] for i in result.medoids]
        logger.debug(f"Class {class_id}: canonical view cost {result.cost:.4f}")
    return views


def jittered_gt_view(
    mesh: TriMesh,
    gt_rotation: Quaternion,
    magnitude: float,
    seed: int,
    resolution: int = VIEW_RESOLUTION,
) -> Tuple[np.ndarray, Quaternion]:
    """Render at the ground-truth rotation perturbed by at most `magnitude` radians."""
    if not magnitude > 0:
        raise DomainError(f"jitter magnitude must be positive, got {magnitude}")
    rng = np.random.default_rng(seed)
    rotation = quat_multiply(gt_rotation, random_small_rotation(rng, magnitude))
    return render_view(mesh, rotation, resolution), rotation
