from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from find_your_cad_model.exceptions import UnknownSampleError
from find_your_cad_model.models import CadEntry, CameraIntrinsics, Quaternion, Sample

TRAIN_SPLIT = "train"
VAL_SPLIT = "val"
UNSEEN_SPLIT = "val_unseen"
SPLITS = (TRAIN_SPLIT, VAL_SPLIT, UNSEEN_SPLIT)


@dataclass
class Dataset:
    """CAD set, canonical views and image splits of one generated or loaded dataset."""

    classes: List[str]
    intrinsics: CameraIntrinsics
    image_size: Tuple[int, int]  # (width, height)
    cad: Dict[int, CadEntry]
    splits: Dict[str, List[Sample]]
    canonical_views: Dict[int, List[Quaternion]]
    unseen_objects: List[int] = field(default_factory=list)
    seed: int = 0
    view_resolution: int = 64

    def samples(self, split: str) -> List[Sample]:
        return self.splits.get(split, [])

    def find_sample(self, sample_id: str) -> Sample:
        for samples in self.splits.values():
            for sample in samples:
                if sample.sample_id == sample_id:
                    return sample
        raise UnknownSampleError(f"no sample named '{sample_id}'")

    def cad_entries(self, include_unseen: bool = False, class_id: Optional[int] = None) -> List[CadEntry]:
        unseen = set(self.unseen_objects)
        return [
            entry
            for oid, entry in sorted(self.cad.items())
            if (include_unseen or oid not in unseen)
            and (class_id is None or entry.class_id == class_id)
        ]

    def train_rotations(self) -> Dict[int, List[Quaternion]]:
        rotations: Dict[int, List[Quaternion]] = {}
        for sample in self.samples(TRAIN_SPLIT):
            for ann in sample.annotations:
                rotations.setdefault(ann.class_id, []).append(ann.pose.rotation)
        return rotations
