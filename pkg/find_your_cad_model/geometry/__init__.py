"""
Quaternion algebra, mesh primitives and K-medoid clustering.
"""

from .kmedoid import KMedoidResult, kmedoid, kmedoid_from_matrix, pairwise_distances
from .mesh import (
    apply_pose,
    bounding_box,
    drop_degenerate_faces,
    face_areas,
    face_normals,
    load_obj,
    sample_surface,
    save_obj,
    scale_mesh,
)
from .quaternion import (
    geodesic_matrix,
    quat_apply,
    quat_canonical,
    quat_conjugate,
    quat_from_axis_angle,
    quat_geodesic,
    quat_multiply,
    quat_normalize,
    quat_to_matrix,
    random_rotation,
    random_small_rotation,
)

__all__ = [
    "KMedoidResult",
    "geodesic_matrix",
    "apply_pose",
    "bounding_box",
    "drop_degenerate_faces",
    "face_areas",
    "face_normals",
    "kmedoid",
    "kmedoid_from_matrix",
    "load_obj",
    "pairwise_distances",
    "quat_apply",
    "quat_canonical",
    "quat_conjugate",
    "quat_from_axis_angle",
    "quat_geodesic",
    "quat_multiply",
    "quat_normalize",
    "quat_to_matrix",
    "random_rotation",
    "random_small_rotation",
    "sample_surface",
    "save_obj",
    "scale_mesh",
]
