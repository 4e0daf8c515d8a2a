"""Parametric primitive families standing in for CAD models.

Every family is symmetric under the reflection x -> -x in model space, so a
horizontally flipped image of an object is again an image of the same object.
"""

import logging
import math
from typing import Callable, Dict, List, Sequence

import numpy as np

from find_your_cad_model.models import TriMesh

logger = logging.getLogger(__name__)

CYLINDER_SEGMENTS = 16

# Outward-facing triangles of an axis-aligned box with corners indexed by
# bit pattern (x, y, z) -> 4x + 2y + z
_BOX_FACES = np.array(
    [
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ],
    dtype=np.int64,
)


def _corners(low: Sequence[float], high: Sequence[float]) -> np.ndarray:
    return np.array(
        [[(low, high)[bx][0], (low, high)[by][1], (low, high)[bz][2]]
         for bx in (0, 1) for by in (0, 1) for bz in (0, 1)],
        dtype=np.float64,
    )


def merge_meshes(parts: List[TriMesh]) -> TriMesh:
    vertices, faces, offset = [], [], 0
    for part in parts:
        vertices.append(part.vertices)
        faces.append(part.faces + offset)
        offset += len(part.vertices)
    return TriMesh(np.concatenate(vertices), np.concatenate(faces))


def box_mesh(low: Sequence[float], high: Sequence[float]) -> TriMesh:
    return TriMesh(_corners(low, high), _BOX_FACES.copy())


def tapered_box_mesh(half_width: float, half_height: float, half_depth: float, taper: float) -> TriMesh:
    """Box whose top face (+y) is shrunk by `taper` in x and z."""
    vertices = _corners((-half_width, -half_height, -half_depth), (half_width, half_height, half_depth))
    top = vertices[:, 1] > 0
    vertices[top, 0] *= taper
    vertices[top, 2] *= taper
    return TriMesh(vertices, _BOX_FACES.copy())


def cylinder_mesh(radius: float, half_height: float, segments: int = CYLINDER_SEGMENTS) -> TriMesh:
    """Closed cylinder around the y axis."""
    angles = 2.0 * math.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(angles), np.zeros(segments), radius * np.sin(angles)], axis=1)
    bottom = ring + np.array([0.0, -half_height, 0.0])
    top = ring + np.array([0.0, half_height, 0.0])
    centers = np.array([[0.0, -half_height, 0.0], [0.0, half_height, 0.0]])
    vertices = np.concatenate([bottom, top, centers])
    b_center, t_center = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([i, j, segments + j])
        faces.append([i, segments + j, segments + i])
        faces.append([b_center, j, i])
        faces.append([t_center, segments + i, segments + j])
    return TriMesh(vertices, np.array(faces, dtype=np.int64))


def wedge_mesh(half_width: float, height: float, depth: float) -> TriMesh:
    """Triangular prism extruded along x; profile (y, z) = (0,0), (0,d), (h,0) centered."""
    profile = np.array([[-height / 2, -depth / 2], [-height / 2, depth / 2], [height / 2, -depth / 2]])
    vertices = np.array(
        [[x, y, z] for x in (-half_width, half_width) for y, z in profile], dtype=np.float64
    )
    faces = np.array(
        [
            [0, 2, 1], [3, 4, 5],  # end caps
            [0, 1, 4], [0, 4, 3],  # bottom
            [1, 2, 5], [1, 5, 4],  # slope
            [0, 3, 5], [0, 5, 2],  # back
        ],
        dtype=np.int64,
    )
    return TriMesh(vertices, faces)


def l_bracket_mesh(half_width: float, length: float, height: float, thickness: float) -> TriMesh:
    """Horizontal plate plus a vertical plate at its back edge, both spanning x."""
    z0, y0 = -length / 2, -height / 2
    base = box_mesh((-half_width, y0, z0), (half_width, y0 + thickness, z0 + length))
    upright = box_mesh((-half_width, y0 + thickness, z0), (half_width, y0 + height, z0 + thickness))
    return merge_meshes([base, upright])


def table_mesh(half_width: float, half_depth: float, height: float, top: float, leg: float) -> TriMesh:
    y0 = -height / 2
    parts = [box_mesh((-half_width, height / 2 - top, -half_depth), (half_width, height / 2, half_depth))]
    for sx in (-1.0, 1.0):
        for sz in (-1.0, 1.0):
            x = sx * (half_width - leg)
            z = sz * (half_depth - leg)
            parts.append(
                box_mesh((x - leg / 2, y0, z - leg / 2), (x + leg / 2, height / 2 - top, z + leg / 2))
            )
    return merge_meshes(parts)


def _random_box(rng: np.random.Generator) -> TriMesh:
    w, h, d = rng.uniform(0.35, 0.8, size=3)
    return box_mesh((-w, -h, -d), (w, h, d))


def _random_cylinder(rng: np.random.Generator) -> TriMesh:
    return cylinder_mesh(rng.uniform(0.3, 0.6), rng.uniform(0.4, 0.9))


def _random_l_bracket(rng: np.random.Generator) -> TriMesh:
    return l_bracket_mesh(
        rng.uniform(0.4, 0.8), rng.uniform(0.9, 1.5), rng.uniform(0.9, 1.5), rng.uniform(0.15, 0.3)
    )


def _random_tapered_box(rng: np.random.Generator) -> TriMesh:
    w, h, d = rng.uniform(0.35, 0.75, size=3)
    return tapered_box_mesh(w, h, d, rng.uniform(0.3, 0.7))


def _random_wedge(rng: np.random.Generator) -> TriMesh:
    return wedge_mesh(rng.uniform(0.4, 0.8), rng.uniform(0.7, 1.4), rng.uniform(0.8, 1.5))


def _random_table(rng: np.random.Generator) -> TriMesh:
    return table_mesh(
        rng.uniform(0.5, 0.8), rng.uniform(0.4, 0.7), rng.uniform(0.7, 1.2),
        rng.uniform(0.08, 0.16), rng.uniform(0.08, 0.15),
    )


FAMILIES: Dict[str, Callable[[np.random.Generator], TriMesh]] = {
    "box": _random_box,
    "cylinder": _random_cylinder,
    "l_bracket": _random_l_bracket,
    "tapered_box": _random_tapered_box,
    "wedge": _random_wedge,
    "table": _random_table,
}


def family_for_class(class_id: int) -> str:
    names = list(FAMILIES)
    return names[class_id % len(names)]


def class_name(class_id: int) -> str:
    family = family_for_class(class_id)
    round_ = class_id // len(FAMILIES)
    return family if round_ == 0 else f"{family}_{round_}"


def random_shape(family: str, rng: np.random.Generator) -> TriMesh:
    if family not in FAMILIES:
        raise KeyError(f"unknown shape family '{family}'")
    return FAMILIES[family](rng)
