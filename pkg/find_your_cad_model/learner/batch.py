"""Training batches: jittered and flipped regions plus their contrastive view pool."""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from find_your_cad_model.data.dataset import TRAIN_SPLIT, Dataset
from find_your_cad_model.data.regions import extract_region, jitter_box, view_region
from find_your_cad_model.data.views import jittered_gt_view
from find_your_cad_model.embedding import repeat_factor
from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import ObjectAnnotation, Sample, TrainConfig
from find_your_cad_model.pose import (
    RotationBins,
    encode_pose_target,
    flip_box,
    flip_point,
    flip_pose,
)

from .features import mask_features

logger = logging.getLogger(__name__)


@dataclass
class RegionExample:
    features: np.ndarray  # masked (C, H, W)
    class_id: int
    object_id: int
    bin_index: int
    delta: np.ndarray
    regress_mask: bool
    center_delta: np.ndarray
    weight: float = 1.0


@dataclass
class ViewExample:
    features: np.ndarray
    class_id: int
    object_id: int
    view_id: int

    @property
    def key(self) -> Tuple[int, int]:
        return (self.object_id, self.view_id)


@dataclass
class TrainingBatch:
    regions: List[RegionExample] = field(default_factory=list)
    views: List[ViewExample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.regions)


def flip_sample(sample: Sample) -> Sample:
    """Mirror an image left-right and adjust every label to match."""
    width = sample.image.shape[1]
    annotations = []
    for ann in sample.annotations:
        pose, _ = flip_pose(ann.pose, (0.0, 0.0))
        annotations.append(
            ObjectAnnotation(
                object_id=ann.object_id,
                class_id=ann.class_id,
                pose=pose,
                center_px=flip_point(ann.center_px, width),
                box=flip_box(ann.box, width),
                mask=ann.mask[:, ::-1].copy(),
            )
        )
    return replace(
        sample, image=sample.image[:, ::-1].copy(), annotations=annotations, regions=[]
    )


def image_weights(samples: Sequence[Sample], threshold: float) -> np.ndarray:
    """Per-image repeat factor: the largest factor among the classes it shows.

    A class's frequency is the fraction of images containing it.
    """
    if not samples:
        return np.zeros(0)
    counts: Dict[int, int] = {}
    for sample in samples:
        for class_id in {a.class_id for a in sample.annotations}:
            counts[class_id] = counts.get(class_id, 0) + 1
    factors = {c: repeat_factor(n / len(samples), threshold) for c, n in counts.items()}
    return np.array(
        [max((factors[a.class_id] for a in s.annotations), default=0.0) for s in samples]
    )


def region_example(
    sample: Sample,
    ann: ObjectAnnotation,
    box,
    bins: RotationBins,
    theta: float,
    weight: float = 1.0,
) -> RegionExample:
    region = extract_region(sample.image, ann.mask, box, ann.class_id)
    target = encode_pose_target(ann.pose.rotation, bins, ann.class_id, theta, box, ann.center_px)
    return RegionExample(
        features=mask_features(region),
        class_id=ann.class_id,
        object_id=ann.object_id,
        bin_index=target.bin_index,
        delta=target.rotation.delta.as_array(),
        regress_mask=target.regress_mask,
        center_delta=target.center_delta,
        weight=weight,
    )


class BatchBuilder:
    """Draws repeat-factor weighted training images and assembles a batch."""

    def __init__(self, dataset: Dataset, bins: RotationBins, config: TrainConfig):
        self.dataset = dataset
        self.bins = bins
        self.config = config
        self.hyper = config.hyper
        self.samples = [s for s in dataset.samples(TRAIN_SPLIT) if s.annotations]
        if not self.samples:
            raise DomainError("training split has no annotated images")
        weights = image_weights(self.samples, self.hyper.repeat_threshold)
        self.probabilities = weights / weights.sum()

        self.view_bank: Dict[int, np.ndarray] = {}
        self.class_objects: Dict[int, List[int]] = {}
        for entry in dataset.cad_entries(include_unseen=False):
            if not entry.view_renders:
                raise DomainError(f"object {entry.object_id} has no canonical view renders")
            self.view_bank[entry.object_id] = np.stack(
                [mask_features(view_region(r, entry.class_id)) for r in entry.view_renders]
            )
            self.class_objects.setdefault(entry.class_id, []).append(entry.object_id)
        self.num_views = min(len(v) for v in self.view_bank.values())
        logger.info(
            f"Batch builder: {len(self.samples)} training images, "
            f"{len(self.view_bank)} CAD models x {self.num_views} views"
        )

    def _brightness(self, rng: np.random.Generator) -> float:
        jitter = self.config.brightness_jitter
        return float(rng.uniform(1.0 - jitter, 1.0 + jitter)) if jitter > 0 else 1.0

    def _add_canonical(self, batch, seen, object_id, class_id, rng) -> None:
        count = min(self.hyper.views_per_example, self.num_views)
        for v in sorted(rng.choice(self.num_views, size=count, replace=False)):
            key = (object_id, int(v))
            if key in seen:
                continue
            seen.add(key)
            features = self.view_bank[object_id][v] * self._brightness(rng)
            batch.views.append(ViewExample(features, class_id, object_id, int(v)))

    def sample(self, rng: np.random.Generator) -> TrainingBatch:
        hyper, config = self.hyper, self.config
        batch = TrainingBatch()
        seen: set = set()
        picks = rng.choice(len(self.samples), size=config.images_per_step, p=self.probabilities)
        for pick in picks:
            sample = self.samples[int(pick)]
            if config.flip and rng.random() < 0.5:
                sample = flip_sample(sample)
            annotations = sample.annotations
            if len(annotations) > hyper.regions_per_image:
                chosen = sorted(rng.choice(len(annotations), size=hyper.regions_per_image, replace=False))
                annotations = [annotations[i] for i in chosen]
            for ann in annotations:
                box = jitter_box(ann.box, rng, hyper.roi_jitter) if config.roi_jitter else ann.box
                batch.regions.append(region_example(sample, ann, box, self.bins, hyper.regress_gate))

                self._add_canonical(batch, seen, ann.object_id, ann.class_id, rng)
                mesh = self.dataset.cad[ann.object_id].mesh
                render, _ = jittered_gt_view(
                    mesh,
                    ann.pose.rotation,
                    hyper.jitter_magnitude,
                    int(rng.integers(2**31)),
                    self.dataset.view_resolution,
                )
                features = mask_features(view_region(render, ann.class_id)) * self._brightness(rng)
                view_id = self.num_views + len(batch.regions) - 1
                batch.views.append(ViewExample(features, ann.class_id, ann.object_id, view_id))
                seen.add((ann.object_id, view_id))

                others = [o for o in self.class_objects[ann.class_id] if o != ann.object_id]
                if others and config.distractor_objects:
                    count = min(config.distractor_objects, len(others))
                    for other in sorted(rng.choice(others, size=count, replace=False)):
                        self._add_canonical(batch, seen, int(other), ann.class_id, rng)
        return batch
