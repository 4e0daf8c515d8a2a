from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from find_your_cad_model.exceptions import DomainError

from .quaternion import Quaternion

NORMAL_TOLERANCE = 1e-6
ROTATION_TOLERANCE = 1e-6


@dataclass
class TriMesh:
    """Triangle mesh in model units; faces index into vertices (0-based)."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (
            self.faces.min() < 0 or self.faces.max() >= len(self.vertices)
        ):
            raise DomainError(
                f"face index out of range for {len(self.vertices)} vertices"
            )

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0


@dataclass
class PointCloud:
    points: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if len(self.normals) != len(self.points):
                raise DomainError("normals and points differ in length")
            lengths = np.linalg.norm(self.normals, axis=1)
            if lengths.size and np.max(np.abs(lengths - 1.0)) > NORMAL_TOLERANCE:
                raise DomainError("normals must have unit length")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class Pose:
    """Object pose in camera space: v -> R (scale * v) + translation."""

    rotation: Quaternion
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.scale = np.asarray(self.scale, dtype=np.float64).reshape(3)
        if np.any(self.scale <= 0):
            raise DomainError(f"scale must be strictly positive, got {self.scale}")
        if abs(self.rotation.norm() - 1.0) > ROTATION_TOLERANCE:
            raise DomainError("pose rotation must be a unit quaternion")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(Quaternion.identity())


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels; pixel i covers [i, i + 1)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")

    def as_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}
