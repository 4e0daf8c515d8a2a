"""
Data models for geometry, detections, embeddings and configuration.
"""

from .detection import Box, CadEntry, DetectionRegion, ObjectAnnotation, Sample
from .embedding import EmbeddingTag, EmbeddingVector
from .geometry import CameraIntrinsics, PointCloud, Pose, TriMesh
from .hyperparams import HyperParams, TrainConfig
from .quaternion import Quaternion

__all__ = [
    "Box",
    "CadEntry",
    "CameraIntrinsics",
    "DetectionRegion",
    "EmbeddingTag",
    "EmbeddingVector",
    "HyperParams",
    "ObjectAnnotation",
    "PointCloud",
    "Pose",
    "Quaternion",
    "Sample",
    "TrainConfig",
    "TriMesh",
]
