"""Center-delta codec, pinhole lifting and horizontal flip of pose labels."""

from typing import Sequence, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import Box, CameraIntrinsics, Pose, Quaternion


def _box_size(box: Box) -> Tuple[float, float]:
    width = box[2] - box[0]
    height = box[3] - box[1]
    if width <= 0 or height <= 0:
        raise DomainError(f"degenerate box {tuple(box)}")
    return width, height


def box_center(box: Box) -> np.ndarray:
    return np.array([(box[0] + box[2]) / 2.0, (box[1] + box[3]) / 2.0])


def encode_center(box: Box, true_center_px: Sequence[float]) -> np.ndarray:
    """Shift from box center to object center, in units of box width/height."""
    width, height = _box_size(box)
    center = box_center(box)
    return np.array(
        [(true_center_px[0] - center[0]) / width, (true_center_px[1] - center[1]) / height]
    )


def decode_center(box: Box, deltas: Sequence[float]) -> np.ndarray:
    width, height = _box_size(box)
    center = box_center(box)
    return np.array([center[0] + deltas[0] * width, center[1] + deltas[1] * height])


def lift_center(center_px: Sequence[float], z: float, intr: CameraIntrinsics) -> np.ndarray:
    """Intersect the ray through center_px with the plane at depth z."""
    if not z > 0:
        raise DomainError(f"depth must be positive, got {z}")
    u, v = center_px
    return np.array([(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z])


def project_point(point: Sequence[float], intr: CameraIntrinsics) -> np.ndarray:
    x, y, z = point
    if not z > 0:
        raise DomainError(f"point behind the camera (z={z})")
    return np.array([intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy])


def flip_pose(pose: Pose, deltas: Sequence[float]) -> Tuple[Pose, np.ndarray]:
    """Labels after a horizontal image flip (reflection diag(-1, 1, 1) in camera space)."""
    q = pose.rotation
    flipped = Pose(
        rotation=Quaternion(q.w, q.x, -q.y, -q.z),
        translation=pose.translation * np.array([-1.0, 1.0, 1.0]),
        scale=pose.scale.copy(),
    )
    return flipped, np.array([-deltas[0], deltas[1]], dtype=np.float64)


def flip_box(box: Box, width: float) -> Box:
    return (width - box[2], box[1], width - box[0], box[3])


def flip_point(point_px: Sequence[float], width: float) -> np.ndarray:
    return np.array([width - point_px[0], point_px[1]], dtype=np.float64)
