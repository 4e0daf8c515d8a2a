"""
Pose estimation codecs: rotation bins, rotation deltas, center deltas and lifting.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from find_your_cad_model.models import Box, Quaternion

from .bins import RotationBins, build_bins, load_bins, save_bins
from .center import (
    box_center,
    decode_center,
    encode_center,
    flip_box,
    flip_point,
    flip_pose,
    lift_center,
    project_point,
)
from .rotation import RotationTarget, decode_rotation, encode_rotation, huber, nearest_bin


@dataclass(frozen=True)
class PoseTarget:
    rotation: RotationTarget
    center_delta: np.ndarray

    @property
    def bin_index(self) -> int:
        return self.rotation.bin_index

    @property
    def regress_mask(self) -> bool:
        return self.rotation.regress_mask


def encode_pose_target(
    truth: Quaternion,
    bins: RotationBins,
    class_id: int,
    theta: float,
    box: Box,
    center_px: Sequence[float],
) -> PoseTarget:
    """Bin, delta and gate for the rotation plus the box-relative center shift."""
    return PoseTarget(
        rotation=encode_rotation(truth, bins, class_id, theta),
        center_delta=encode_center(box, center_px),
    )


__all__ = [
    "PoseTarget",
    "RotationBins",
    "RotationTarget",
    "box_center",
    "build_bins",
    "decode_center",
    "decode_rotation",
    "encode_center",
    "encode_pose_target",
    "encode_rotation",
    "flip_box",
    "flip_point",
    "flip_pose",
    "huber",
    "lift_center",
    "load_bins",
    "nearest_bin",
    "project_point",
    "save_bins",
]
