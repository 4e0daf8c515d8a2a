import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import DetectionRegion


def mask_features(region: DetectionRegion) -> np.ndarray:
    """M o F: the ROI mask broadcast over every feature channel."""
    features = np.asarray(region.features, dtype=np.float64)
    mask = np.asarray(region.mask, dtype=np.float64)
    if features.shape[-2:] != mask.shape:
        raise DomainError(
            f"mask {mask.shape} does not match feature map {features.shape[-2:]}"
        )
    return features * mask
