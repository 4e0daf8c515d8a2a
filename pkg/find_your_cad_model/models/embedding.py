from dataclasses import dataclass
from enum import Enum

import numpy as np


class EmbeddingTag(Enum):
    """Which stream produced a descriptor"""

    IMAGE_REGION = "image-region"
    OBJECT_VIEW = "object-view"


@dataclass
class EmbeddingVector:
    values: np.ndarray
    tag: EmbeddingTag
    class_id: int
    object_id: int
    view_id: int = -1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)

    @property
    def key(self):
        return (self.object_id, self.view_id)
