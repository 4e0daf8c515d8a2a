"""
Find Your CAD Model - retrieve CAD shapes and poses for object regions in images.
"""

__version__ = "1.0.0"
__author__ = "Nicolas Marchand"
__description__ = (
    "Joint image/CAD embedding, pose estimation and 3D evaluation at desk scale"
)

from . import data, embedding, geometry, learner, metrics, models, parsers, pose, utils

__all__ = [
    "data",
    "embedding",
    "geometry",
    "learner",
    "metrics",
    "models",
    "parsers",
    "pose",
    "utils",
]
