"""Coarse-to-fine rotation codec: bin classification plus a delta quaternion."""

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from find_your_cad_model.geometry import (
    quat_canonical,
    quat_conjugate,
    quat_geodesic,
    quat_multiply,
    quat_normalize,
)
from find_your_cad_model.models import Quaternion

from .bins import RotationBins

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RotationTarget:
    bin_index: int
    delta: Quaternion
    regress_mask: bool
    angle: float


def huber(x: Union[float, np.ndarray], delta: float) -> Union[float, np.ndarray]:
    """x^2/2 inside |x| <= delta, delta * (|x| - delta/2) outside."""
    ax = np.abs(x)
    result = np.where(ax <= delta, 0.5 * np.square(x), delta * (ax - 0.5 * delta))
    return float(result) if np.ndim(result) == 0 else result


def nearest_bin(truth: Quaternion, medoids: Sequence[Quaternion]):
    angles = [quat_geodesic(m, truth) for m in medoids]
    index = int(np.argmin(angles))
    return index, angles[index]


def encode_rotation(
    truth: Quaternion, bins: RotationBins, class_id: int, theta: float
) -> RotationTarget:
    medoids = bins.for_class(class_id)
    index, angle = nearest_bin(truth, medoids)
    delta = quat_canonical(quat_multiply(quat_conjugate(medoids[index]), truth))
    return RotationTarget(
        bin_index=index, delta=delta, regress_mask=bool(angle <= theta), angle=angle
    )


def decode_rotation(
    bin_index: int,
    delta_raw: Union[Quaternion, Sequence[float], np.ndarray],
    bins: RotationBins,
    class_id: int,
) -> Quaternion:
    """bin * normalize(delta_raw); a zero delta falls back to the bin medoid."""
    medoid = bins.for_class(class_id)[bin_index]
    raw = delta_raw.as_array() if isinstance(delta_raw, Quaternion) else np.asarray(delta_raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)) or np.linalg.norm(raw) == 0.0:
        logger.warning(f"Degenerate rotation delta {raw.tolist()}; using bin {bin_index} medoid")
        return medoid
    return quat_normalize(quat_multiply(medoid, quat_normalize(raw)))
