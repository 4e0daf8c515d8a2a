"""Mesh primitives: cleanup, posing, surface sampling and OBJ I/O."""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import PointCloud, Pose, TriMesh

from .quaternion import quat_apply

logger = logging.getLogger(__name__)

AREA_EPSILON = 1e-14


def face_cross_products(mesh: TriMesh) -> np.ndarray:
    tri = mesh.vertices[mesh.faces]
    return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])


def face_areas(mesh: TriMesh) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_cross_products(mesh), axis=1)


def face_normals(mesh: TriMesh) -> np.ndarray:
    cross = face_cross_products(mesh)
    lengths = np.linalg.norm(cross, axis=1, keepdims=True)
    return cross / np.where(lengths > 0, lengths, 1.0)


def drop_degenerate_faces(mesh: TriMesh) -> TriMesh:
    keep = face_areas(mesh) > AREA_EPSILON
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.debug(f"Dropped {dropped} degenerate faces")
    return TriMesh(mesh.vertices.copy(), mesh.faces[keep])


def bounding_box(mesh: TriMesh) -> np.ndarray:
    """(2, 3) array of min and max corners."""
    if len(mesh.vertices) == 0:
        raise DomainError("empty mesh has no bounding box")
    return np.stack([mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)])


def apply_pose(pose: Pose, mesh: TriMesh) -> TriMesh:
    """Scale, then rotate, then translate every vertex."""
    scaled = mesh.vertices * pose.scale
    posed = quat_apply(pose.rotation, scaled) + pose.translation
    return TriMesh(posed, mesh.faces.copy())


def scale_mesh(mesh: TriMesh, factor: float) -> TriMesh:
    return TriMesh(mesh.vertices * factor, mesh.faces.copy())


def sample_surface(mesh: TriMesh, n: int, seed: int) -> PointCloud:
    """Area-weighted uniform surface samples with face normals."""
    if n < 1:
        raise DomainError("sample count must be at least 1")
    if mesh.is_empty:
        raise DomainError("cannot sample an empty mesh")
    areas = face_areas(mesh)
    total = areas.sum()
    if total <= AREA_EPSILON:
        raise DomainError("mesh has no non-degenerate face")

    rng = np.random.default_rng(seed)
    face_idx = rng.choice(len(areas), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    tri = mesh.vertices[mesh.faces[face_idx]]
    points = (
        (1.0 - r1)[:, None] * tri[:, 0]
        + (r1 * (1.0 - r2))[:, None] * tri[:, 1]
        + (r1 * r2)[:, None] * tri[:, 2]
    )
    normals = face_normals(mesh)[face_idx]
    return PointCloud(points, normals)


def load_obj(path: Union[str, Path]) -> TriMesh:
    """Read v/f records of a Wavefront OBJ file; degenerate faces are dropped.

    Polygon faces are fan-triangulated; "v/vt/vn" index forms keep the vertex index.
    """
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    vertices.append([float(p) for p in parts[1:4]])
                elif parts[0] == "f":
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                    idx = [i - 1 if i > 0 else len(vertices) + i for i in idx]
                    for k in range(1, len(idx) - 1):
                        faces.append([idx[0], idx[k], idx[k + 1]])
            except (ValueError, IndexError) as e:
                raise DomainError(f"{path}:{line_number}: malformed OBJ record: {e}")
    mesh = TriMesh(np.array(vertices).reshape(-1, 3), np.array(faces).reshape(-1, 3))
    return drop_degenerate_faces(mesh)


def save_obj(mesh: TriMesh, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"Saved mesh with {len(mesh.faces)} faces to {path}")
