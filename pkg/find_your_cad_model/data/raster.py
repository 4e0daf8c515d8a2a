"""Depth-buffered triangle rasterizer with depth shading.

Pixel (row i, column j) covers [j, j+1) x [i, i+1) and is sampled at its
center (j + 0.5, i + 0.5).

Camera space is x right, y down, +z forward: a point in front of the camera
has z > 0 and projects to u = fx * x / z + cx, v = fy * y / z + cy. This is the
y-down/+z form of a camera looking down -z with y up; the horizontal flip
(reflection of x) is the same in both.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.geometry import apply_pose, quat_to_matrix
from find_your_cad_model.models import CameraIntrinsics, Pose, Quaternion, TriMesh

logger = logging.getLogger(__name__)

VIEW_RESOLUTION = 64
VIEW_FILL = 0.9
SHADE_RANGE = 0.6


@dataclass
class RasterResult:
    depth: np.ndarray  # (H, W), +inf where nothing is drawn
    face_id: np.ndarray  # (H, W), -1 where nothing is drawn


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize(
    points_2d: np.ndarray, depth: np.ndarray, faces: np.ndarray, width: int, height: int
) -> RasterResult:
    """Nearest-surface coverage of projected triangles.

    A pixel center belongs to a triangle when all three edge functions agree
    in sign (edges count as inside); depth is interpolated barycentrically.
    """
    zbuf = np.full((height, width), np.inf)
    fbuf = np.full((height, width), -1, dtype=np.int64)
    for face_index, (ia, ib, ic) in enumerate(faces):
        (ax, ay), (bx, by), (cx, cy) = points_2d[ia], points_2d[ib], points_2d[ic]
        area = _edge(ax, ay, bx, by, cx, cy)
        if area == 0.0:
            continue
        j0 = max(int(np.floor(min(ax, bx, cx) - 0.5)), 0)
        j1 = min(int(np.ceil(max(ax, bx, cx) - 0.5)), width - 1)
        i0 = max(int(np.floor(min(ay, by, cy) - 0.5)), 0)
        i1 = min(int(np.ceil(max(ay, by, cy) - 0.5)), height - 1)
        if j0 > j1 or i0 > i1:
            continue
        py, px = np.mgrid[i0 : i1 + 1, j0 : j1 + 1] + 0.5
        w_a = _edge(bx, by, cx, cy, px, py) / area
        w_b = _edge(cx, cy, ax, ay, px, py) / area
        w_c = _edge(ax, ay, bx, by, px, py) / area
        inside = (w_a >= 0) & (w_b >= 0) & (w_c >= 0)
        if not inside.any():
            continue
        z = w_a * depth[ia] + w_b * depth[ib] + w_c * depth[ic]
        window = zbuf[i0 : i1 + 1, j0 : j1 + 1]
        closer = inside & (z < window)
        window[closer] = z[closer]
        fbuf[i0 : i1 + 1, j0 : j1 + 1][closer] = face_index
    return RasterResult(depth=zbuf, face_id=fbuf)


def shade(depth: np.ndarray, z_near: float, z_far: float) -> np.ndarray:
    """Intensity 1 at the nearest vertex falling to 0.4 at the farthest; background 0."""
    covered = np.isfinite(depth)
    image = np.zeros(depth.shape)
    span = z_far - z_near
    if span <= 0:
        image[covered] = 1.0
    else:
        t = np.clip((depth[covered] - z_near) / span, 0.0, 1.0)
        image[covered] = 1.0 - SHADE_RANGE * t
    return image


def render_view(mesh: TriMesh, rotation: Quaternion, resolution: int = VIEW_RESOLUTION) -> np.ndarray:
    """Orthographic depth-shaded silhouette of the mesh seen at `rotation`.

    The projection scale depends only on the mesh, so all views of one object
    share it.
    """
    if mesh.is_empty:
        raise DomainError("cannot render an empty mesh")
    radius = float(np.max(np.linalg.norm(mesh.vertices, axis=1)))
    if radius == 0.0:
        raise DomainError("cannot render a mesh collapsed to a point")
    scale = VIEW_FILL * (resolution / 2.0) / radius
    rotated = mesh.vertices @ quat_to_matrix(rotation).T
    points = rotated[:, :2] * scale + resolution / 2.0
    raster = rasterize(points, rotated[:, 2], mesh.faces, resolution, resolution)
    return shade(raster.depth, rotated[:, 2].min(), rotated[:, 2].max())


@dataclass
class SceneRender:
    image: np.ndarray
    masks: List[np.ndarray]
    boxes: List[Tuple[float, float, float, float]]


def project_mesh(mesh: TriMesh, intrinsics: CameraIntrinsics) -> np.ndarray:
    verts = mesh.vertices
    if np.any(verts[:, 2] <= 0):
        raise DomainError("mesh crosses the camera plane")
    return np.stack(
        [intrinsics.fx * verts[:, 0] / verts[:, 2] + intrinsics.cx,
         intrinsics.fy * verts[:, 1] / verts[:, 2] + intrinsics.cy],
        axis=1,
    )


def amodal_box(mesh: TriMesh, pose: Pose, intrinsics: CameraIntrinsics) -> Tuple[float, float, float, float]:
    """Box around the full projected extent of the posed mesh."""
    points = project_mesh(apply_pose(pose, mesh), intrinsics)
    low, high = points.min(axis=0), points.max(axis=0)
    return (float(low[0]), float(low[1]), float(high[0]), float(high[1]))


def render_scene(
    meshes: Sequence[TriMesh],
    poses: Sequence[Pose],
    intrinsics: CameraIntrinsics,
    width: int,
    height: int,
) -> SceneRender:
    """Perspective render of posed meshes; one visibility mask per object."""
    zbuf = np.full((height, width), np.inf)
    owner = np.full((height, width), -1, dtype=np.int64)
    image = np.zeros((height, width))
    boxes = []
    for index, (mesh, pose) in enumerate(zip(meshes, poses)):
        posed = apply_pose(pose, mesh)
        points = project_mesh(posed, intrinsics)
        low, high = points.min(axis=0), points.max(axis=0)
        boxes.append((float(low[0]), float(low[1]), float(high[0]), float(high[1])))
        raster = rasterize(points, posed.vertices[:, 2], posed.faces, width, height)
        closer = raster.depth < zbuf
        zbuf[closer] = raster.depth[closer]
        owner[closer] = index
        shaded = shade(raster.depth, posed.vertices[:, 2].min(), posed.vertices[:, 2].max())
        image[closer] = shaded[closer]
    masks = [(owner == i).astype(np.float64) for i in range(len(meshes))]
    return SceneRender(image=image, masks=masks, boxes=boxes)
