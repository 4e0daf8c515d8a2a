"""ROI feature maps: crop, resample and differentiate image regions."""

import logging
from typing import Optional

import numpy as np
from scipy import ndimage

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import Box, DetectionRegion

logger = logging.getLogger(__name__)

ROI_SIZE = 32
FEATURE_CHANNELS = 3


def _sample_grid(box: Box, size: int):
    x0, y0, x1, y1 = box
    if not (x1 > x0 and y1 > y0):
        raise DomainError(f"degenerate box {tuple(box)}")
    steps = (np.arange(size) + 0.5) / size
    xs = x0 + steps * (x1 - x0) - 0.5
    ys = y0 + steps * (y1 - y0) - 0.5
    return np.meshgrid(ys, xs, indexing="ij")


def resample_roi(image: np.ndarray, box: Box, size: int = ROI_SIZE, order: int = 1) -> np.ndarray:
    """Bilinear (order=1) or nearest (order=0) samples of `image` on a size x size grid over `box`."""
    rows, cols = _sample_grid(box, size)
    return ndimage.map_coordinates(
        np.asarray(image, dtype=np.float64), [rows, cols], order=order, mode="constant", cval=0.0
    )


def roi_features(image: np.ndarray, box: Box, size: int = ROI_SIZE) -> np.ndarray:
    """(3, size, size): intensity plus its horizontal and vertical derivatives."""
    patch = resample_roi(image, box, size)
    d_rows, d_cols = np.gradient(patch)
    return np.stack([patch, d_cols, d_rows])


def roi_mask(mask: np.ndarray, box: Box, size: int = ROI_SIZE) -> np.ndarray:
    return (resample_roi(mask, box, size, order=0) > 0.5).astype(np.float64)


def extract_region(image: np.ndarray, mask: np.ndarray, box: Box, class_id: int) -> DetectionRegion:
    return DetectionRegion(
        box=tuple(float(v) for v in box),  # type: ignore[arg-type]
        mask=roi_mask(mask, box),
        class_id=class_id,
        features=roi_features(image, box),
    )


def silhouette_box(render: np.ndarray) -> Optional[Box]:
    covered = render > 0
    if not covered.any():
        return None
    rows = np.flatnonzero(covered.any(axis=1))
    cols = np.flatnonzero(covered.any(axis=0))
    return (float(cols[0]), float(rows[0]), float(cols[-1] + 1), float(rows[-1] + 1))


def view_region(render: np.ndarray, class_id: int) -> DetectionRegion:
    """A rendered view treated as a region cropped tight to its silhouette."""
    box = silhouette_box(render)
    if box is None:
        raise DomainError("rendered view is empty")
    return extract_region(render, (render > 0).astype(np.float64), box, class_id)


def jitter_box(box: Box, rng: np.random.Generator, magnitude: float) -> Box:
    """Move each box side by U(-magnitude, magnitude) times the box width/height."""
    x0, y0, x1, y1 = box
    w, h = x1 - x0, y1 - y0
    dx = rng.uniform(-magnitude, magnitude, size=2) * w
    dy = rng.uniform(-magnitude, magnitude, size=2) * h
    return (x0 + dx[0], y0 + dy[0], x1 + dx[1], y1 + dy[1])
