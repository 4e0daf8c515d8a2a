"""Quaternion algebra.

Conventions: Hamilton product, (w, x, y, z) ordering, right-handed frames.
Camera space is x right, y down, z forward (positive depth in front of the
camera). q and -q denote the same rotation everywhere in this package.
"""

import logging
import math
from typing import Sequence, Union

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import Quaternion

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-6
QuatLike = Union[Quaternion, Sequence[float], np.ndarray]


def _as_array(q: QuatLike) -> np.ndarray:
    if isinstance(q, Quaternion):
        return q.as_array()
    arr = np.asarray(q, dtype=np.float64).reshape(4)
    return arr


def _require_unit(arr: np.ndarray, name: str) -> None:
    if abs(np.linalg.norm(arr) - 1.0) > UNIT_TOLERANCE:
        raise DomainError(f"{name} must be a unit quaternion, norm={np.linalg.norm(arr)}")


def quat_normalize(q: QuatLike) -> Quaternion:
    arr = _as_array(q)
    norm = np.linalg.norm(arr)
    if not np.isfinite(norm) or norm == 0.0:
        raise DomainError("cannot normalize a zero-norm quaternion")
    return Quaternion.from_array(arr / norm)


def quat_conjugate(q: QuatLike) -> Quaternion:
    w, x, y, z = _as_array(q)
    return Quaternion(w, -x, -y, -z)


def quat_multiply(q1: QuatLike, q2: QuatLike) -> Quaternion:
    """Hamilton product q1 * q2 (apply q2 first, then q1)."""
    w1, x1, y1, z1 = _as_array(q1)
    w2, x2, y2, z2 = _as_array(q2)
    return Quaternion(
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    )


def quat_to_matrix(q: QuatLike) -> np.ndarray:
    w, x, y, z = _as_array(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_apply(q: QuatLike, points: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """Rotate a 3-vector or an (N, 3) array of points."""
    arr = _as_array(q)
    _require_unit(arr, "rotation")
    pts = np.asarray(points, dtype=np.float64)
    rotated = pts.reshape(-1, 3) @ quat_to_matrix(arr).T
    return rotated.reshape(pts.shape)


def quat_geodesic(q1: QuatLike, q2: QuatLike) -> float:
    """Rotation angle between q1 and q2 in [0, pi], sign-invariant.

    Equal to 2 * acos(|<q1, q2>|) but evaluated with atan2, which keeps full
    precision for nearly identical rotations.
    """
    a = _as_array(q1)
    b = _as_array(q2)
    _require_unit(a, "q1")
    _require_unit(b, "q2")
    if np.dot(a, b) < 0:
        b = -b
    return 4.0 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b))


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> Quaternion:
    axis_arr = np.asarray(axis, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(axis_arr)
    if norm == 0.0:
        raise DomainError("rotation axis must be non-zero")
    axis_arr = axis_arr / norm
    half = 0.5 * angle
    return Quaternion(math.cos(half), *(math.sin(half) * axis_arr))


def quat_canonical(q: QuatLike) -> Quaternion:
    """Representative of {q, -q} with w >= 0."""
    arr = _as_array(q)
    if arr[0] < 0:
        arr = -arr
    return Quaternion.from_array(arr)


def random_rotation(rng: np.random.Generator) -> Quaternion:
    """Uniformly distributed rotation (normalized 4D Gaussian)."""
    while True:
        arr = rng.standard_normal(4)
        norm = np.linalg.norm(arr)
        if norm > 1e-12:
            return Quaternion.from_array(arr / norm)


def random_small_rotation(rng: np.random.Generator, magnitude: float) -> Quaternion:
    """Random axis with an angle drawn uniformly from [0, magnitude]."""
    axis = rng.standard_normal(3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.standard_normal(3)
    angle = rng.uniform(0.0, magnitude)
    return quat_from_axis_angle(axis, angle)


def geodesic_matrix(quaternions: Sequence[QuatLike]) -> np.ndarray:
    """All-pairs quat_geodesic as an (n, n) array."""
    arr = np.stack([_as_array(q) for q in quaternions])
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
        raise DomainError("geodesic_matrix needs unit quaternions")
    signs = np.where(arr @ arr.T < 0, -1.0, 1.0)
    diff = np.linalg.norm(arr[:, None, :] - signs[:, :, None] * arr[None, :, :], axis=2)
    summ = np.linalg.norm(arr[:, None, :] + signs[:, :, None] * arr[None, :, :], axis=2)
    matrix = 4.0 * np.arctan2(diff, summ)
    np.fill_diagonal(matrix, 0.0)
    return matrix
