from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .geometry import CameraIntrinsics, Pose, TriMesh
from .quaternion import Quaternion

# (xmin, ymin, xmax, ymax) in continuous pixel coordinates
Box = Tuple[float, float, float, float]


@dataclass
class DetectionRegion:
    """One detected object: box, ROI mask, class and ROI feature map (C, H, W)."""

    box: Box
    mask: np.ndarray
    class_id: int
    features: np.ndarray


@dataclass
class ObjectAnnotation:
    object_id: int
    class_id: int
    pose: Pose
    center_px: np.ndarray
    box: Box
    mask: np.ndarray


@dataclass
class Sample:
    sample_id: str
    image: np.ndarray
    intrinsics: CameraIntrinsics
    annotations: List[ObjectAnnotation] = field(default_factory=list)
    regions: List[DetectionRegion] = field(default_factory=list)


@dataclass
class CadEntry:
    object_id: int
    class_id: int
    family: str
    mesh: TriMesh
    view_rotations: List[Quaternion] = field(default_factory=list)
    view_renders: List[np.ndarray] = field(default_factory=list)
