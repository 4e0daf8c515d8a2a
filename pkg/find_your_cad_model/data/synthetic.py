"""Procedural dataset: primitive CAD models posed in pinhole-camera scenes."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.geometry import quat_from_axis_angle, quat_multiply
from find_your_cad_model.models import (
    CadEntry,
    CameraIntrinsics,
    ObjectAnnotation,
    Pose,
    Quaternion,
    Sample,
)
from find_your_cad_model.pose import lift_center, project_point
from find_your_cad_model.utils.file_io import quantize_image

from .dataset import SPLITS, TRAIN_SPLIT, UNSEEN_SPLIT, VAL_SPLIT, Dataset
from .raster import amodal_box, render_scene, render_view
from .regions import extract_region
from .shapes import class_name, family_for_class, random_shape
from .views import select_canonical_views

logger = logging.getLogger(__name__)

MIN_CLASSES = 2
MIN_OBJECTS_PER_CLASS = 4
GRID_CELLS = 3
DEPTH_RANGE = (5.5, 7.5)
DEPTH_RETRY_FACTOR = 1.15
MAX_FIT_TRIES = 20
CENTER_JITTER_PX = 3.0
ELEVATION_RANGE = (0.15, 0.6)
MAX_ROLL = 0.1
SCALE_RANGE = (0.9, 1.1)


@dataclass(frozen=True)
class DatasetSpec:
    num_classes: int = 5
    objects_per_class: int = 8
    unseen_objects_per_class: int = 2
    train_images: int = 200
    val_images: int = 40
    unseen_images: int = 40
    max_objects_per_image: int = 3
    image_size: int = 128
    focal_length: float = 90.0
    canonical_views: int = 16
    view_resolution: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < MIN_CLASSES:
            raise DomainError(f"need at least {MIN_CLASSES} classes, got {self.num_classes}")
        if self.objects_per_class < MIN_OBJECTS_PER_CLASS:
            raise DomainError(
                f"need at least {MIN_OBJECTS_PER_CLASS} objects per class, got {self.objects_per_class}"
            )
        # at least two seen objects per class keep same-class negatives available
        if not 0 <= self.unseen_objects_per_class <= self.objects_per_class - 2:
            raise DomainError(
                f"unseen_objects_per_class must lie in [0, {self.objects_per_class - 2}]"
            )
        if not 1 <= self.max_objects_per_image <= GRID_CELLS * GRID_CELLS:
            raise DomainError("max_objects_per_image must lie in [1, 9]")
        if self.train_images < 1 or self.val_images < 0 or self.unseen_images < 0:
            raise DomainError("image counts must be non-negative with at least one training image")
        if self.image_size < 32 or self.focal_length <= 0:
            raise DomainError("image_size must be >= 32 and focal_length positive")
        if self.canonical_views < 1 or self.view_resolution < 8:
            raise DomainError("canonical_views must be >= 1 and view_resolution >= 8")


def random_object_rotation(rng: np.random.Generator) -> Quaternion:
    """Upright object seen from a moderate elevation: Rx(pi + e) Ry(yaw) Rz(roll).

    The family is closed under the horizontal image flip (yaw and roll ranges
    are symmetric).
    """
    elevation = rng.uniform(*ELEVATION_RANGE)
    yaw = rng.uniform(-math.pi, math.pi)
    roll = rng.uniform(-MAX_ROLL, MAX_ROLL)
    q = quat_multiply(
        quat_from_axis_angle((1, 0, 0), math.pi + elevation),
        quat_multiply(quat_from_axis_angle((0, 1, 0), yaw), quat_from_axis_angle((0, 0, 1), roll)),
    )
    return q


def _cell_bounds(cell: int, width: int, height: int):
    row, col = divmod(cell, GRID_CELLS)
    cw, ch = width / GRID_CELLS, height / GRID_CELLS
    return col * cw, row * ch, (col + 1) * cw, (row + 1) * ch


def _inside(box, bounds) -> bool:
    return box[0] >= bounds[0] and box[1] >= bounds[1] and box[2] <= bounds[2] and box[3] <= bounds[3]


def make_sample(
    sample_id: str,
    pool: Sequence[CadEntry],
    intrinsics: CameraIntrinsics,
    spec: DatasetSpec,
    rng: np.random.Generator,
) -> Sample:
    """One scene with 1..max objects, each inside its own third-of-frame cell."""
    width = height = spec.image_size
    count = int(rng.integers(1, spec.max_objects_per_image + 1))
    cells = rng.choice(GRID_CELLS * GRID_CELLS, size=count, replace=False)
    picks = rng.integers(0, len(pool), size=count)

    placed = []
    for cell, pick in zip(cells, picks):
        entry = pool[int(pick)]
        rotation = random_object_rotation(rng)
        scale = np.full(3, rng.uniform(*SCALE_RANGE))
        bounds = _cell_bounds(int(cell), width, height)
        center = np.array([(bounds[0] + bounds[2]) / 2, (bounds[1] + bounds[3]) / 2])
        center += rng.uniform(-CENTER_JITTER_PX, CENTER_JITTER_PX, size=2)
        z = rng.uniform(*DEPTH_RANGE)
        for _ in range(MAX_FIT_TRIES):
            pose = Pose(rotation, lift_center(center, z, intrinsics), scale)
            box = amodal_box(entry.mesh, pose, intrinsics)
            if _inside(box, bounds):
                placed.append((entry, pose, box))
                break
            z *= DEPTH_RETRY_FACTOR
        else:
            logger.warning(f"{sample_id}: object {entry.object_id} did not fit its cell, dropped")

    scene = render_scene(
        [entry.mesh for entry, _, _ in placed], [pose for _, pose, _ in placed], intrinsics, width, height
    )
    image = quantize_image(scene.image)
    sample = Sample(sample_id=sample_id, image=image, intrinsics=intrinsics)
    for (entry, pose, box), mask in zip(placed, scene.masks):
        if not mask.any():
            logger.warning(f"{sample_id}: object {entry.object_id} is not visible, dropped")
            continue
        sample.annotations.append(
            ObjectAnnotation(
                object_id=entry.object_id,
                class_id=entry.class_id,
                pose=pose,
                center_px=project_point(pose.translation, intrinsics),
                box=box,
                mask=mask,
            )
        )
        sample.regions.append(extract_region(image, mask, box, entry.class_id))
    return sample


def build_cad_set(spec: DatasetSpec) -> Dict[int, CadEntry]:
    cad = {}
    for class_id in range(spec.num_classes):
        family = family_for_class(class_id)
        for index in range(spec.objects_per_class):
            object_id = class_id * spec.objects_per_class + index
            rng = np.random.default_rng([spec.seed, 0, object_id])
            cad[object_id] = CadEntry(
                object_id=object_id, class_id=class_id, family=family, mesh=random_shape(family, rng)
            )
    return cad


def render_canonical_views(
    cad: Dict[int, CadEntry], views: Dict[int, List[Quaternion]], resolution: int
) -> None:
    for entry in cad.values():
        entry.view_rotations = list(views[entry.class_id])
        entry.view_renders = [
            quantize_image(render_view(entry.mesh, q, resolution)) for q in entry.view_rotations
        ]


def generate_dataset(spec: DatasetSpec, progress_every: int = 50) -> Dataset:
    """Deterministic dataset: same spec (seed included) gives identical content."""
    logger.info(
        f"🏗️ Generating dataset: {spec.num_classes} classes x {spec.objects_per_class} objects, seed {spec.seed}"
    )
    cad = build_cad_set(spec)
    unseen = sorted(
        oid for oid in cad if oid % spec.objects_per_class >= spec.objects_per_class - spec.unseen_objects_per_class
    )
    seen_pool = [cad[oid] for oid in sorted(cad) if oid not in set(unseen)]
    unseen_pool = [cad[oid] for oid in unseen]

    size = float(spec.image_size)
    intrinsics = CameraIntrinsics(spec.focal_length, spec.focal_length, size / 2, size / 2)

    counts = {TRAIN_SPLIT: spec.train_images, VAL_SPLIT: spec.val_images, UNSEEN_SPLIT: spec.unseen_images}
    if not unseen_pool:
        counts[UNSEEN_SPLIT] = 0
    splits: Dict[str, List[Sample]] = {}
    for split_index, split in enumerate(SPLITS, start=1):
        pool = unseen_pool if split == UNSEEN_SPLIT else seen_pool
        samples = []
        for n in range(counts[split]):
            rng = np.random.default_rng([spec.seed, split_index, n])
            samples.append(make_sample(f"{split}_{n:05d}", pool, intrinsics, spec, rng))
            if progress_every and (n + 1) % progress_every == 0:
                logger.info(f"   📊 {split}: {n + 1}/{counts[split]} images")
        splits[split] = samples

    dataset = Dataset(
        classes=[class_name(c) for c in range(spec.num_classes)],
        intrinsics=intrinsics,
        image_size=(spec.image_size, spec.image_size),
        cad=cad,
        splits=splits,
        canonical_views={},
        unseen_objects=unseen,
        seed=spec.seed,
        view_resolution=spec.view_resolution,
    )
    rotations = dataset.train_rotations()
    missing = [c for c in range(spec.num_classes) if c not in rotations]
    if missing:
        raise DomainError(f"classes {missing} never appear in the training split; add training images")
    dataset.canonical_views = select_canonical_views(rotations, spec.canonical_views, spec.seed)
    render_canonical_views(cad, dataset.canonical_views, spec.view_resolution)

    regions = sum(len(s.annotations) for samples in splits.values() for s in samples)
    logger.info(f"✅ Dataset ready: {len(cad)} CAD models, {regions} annotated objects")
    return dataset
