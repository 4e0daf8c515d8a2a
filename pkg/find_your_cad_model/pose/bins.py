"""Per-class rotation bins: K geodesic medoids of the training rotations."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple, Union

from find_your_cad_model.exceptions import DomainError, UnknownClassError
from find_your_cad_model.geometry import geodesic_matrix, kmedoid_from_matrix, quat_normalize
from find_your_cad_model.models import Quaternion
from find_your_cad_model.utils.file_io import load_json, save_json

logger = logging.getLogger(__name__)

BINS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RotationBins:
    medoids: Dict[int, Tuple[Quaternion, ...]]

    def for_class(self, class_id: int) -> Tuple[Quaternion, ...]:
        if class_id not in self.medoids:
            raise UnknownClassError(f"no rotation bins for class {class_id}")
        return self.medoids[class_id]

    @property
    def num_bins(self) -> int:
        return max(len(m) for m in self.medoids.values()) if self.medoids else 0

    def to_dict(self) -> dict:
        return {
            "version": BINS_FORMAT_VERSION,
            "bins": {
                str(c): [q.as_list() for q in quats]
                for c, quats in sorted(self.medoids.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RotationBins":
        if data.get("version") != BINS_FORMAT_VERSION:
            raise DomainError(f"unsupported bins format {data.get('version')}")
        return cls(
            {
                int(c): tuple(quat_normalize(q) for q in quats)
                for c, quats in data["bins"].items()
            }
        )


def build_bins(
    train_rotations: Mapping[int, Sequence[Quaternion]], k: int, seed: int
) -> RotationBins:
    """K-medoid (geodesic distance) over each class's training rotations."""
    medoids = {}
    for class_id in sorted(train_rotations):
        rotations = list(train_rotations[class_id])
        if len(rotations) < k:
            raise DomainError(
                f"class {class_id} has {len(rotations)} training rotations, need {k}"
            )
        result = kmedoid_from_matrix(geodesic_matrix(rotations), k, seed)
        chosen = tuple(rotations[i] for i in result.medoids)
        distinct = {tuple(round(v, 12) for v in q.as_list()) for q in chosen}
        if len(distinct) < k:
            logger.warning(f"Class {class_id}: only {len(distinct)} distinct rotation bins")
        medoids[class_id] = chosen
        logger.debug(f"Class {class_id}: rotation bins cost {result.cost:.4f}")
    return RotationBins(medoids)


def save_bins(bins: RotationBins, path: Union[str, Path]) -> bool:
    return save_json(bins.to_dict(), path)


def load_bins(path: Union[str, Path]) -> RotationBins:
    data = load_json(path)
    if data is None:
        raise DomainError(f"could not read rotation bins from {path}")
    return RotationBins.from_dict(data)
