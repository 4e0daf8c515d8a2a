"""Region and view encoders.

Both streams share an architecture but not weights: a three-layer conv tower
with global average pooling, then linear heads. The region stream also carries
the per-class pose heads (K rotation-bin logits, a 4-d rotation delta and a 2-d
center delta for every class).
"""

import logging
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import EmbeddingTag, EmbeddingVector

logger = logging.getLogger(__name__)

DELTA_BIAS = (0.95, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class EncoderConfig:
    num_classes: int
    rotation_bins: int = 16
    embedding_dim: int = 128
    width: int = 16
    in_channels: int = 3
    channel_mean: Tuple[float, ...] = (0.25, 0.0, 0.0)
    channel_std: Tuple[float, ...] = (0.35, 0.08, 0.08)

    def __post_init__(self):
        if self.num_classes < 1 or self.rotation_bins < 1 or self.embedding_dim < 1:
            raise DomainError("num_classes, rotation_bins and embedding_dim must be positive")
        if len(self.channel_mean) != self.in_channels or len(self.channel_std) != self.in_channels:
            raise DomainError("channel statistics must match in_channels")
        if min(self.channel_std) <= 0:
            raise DomainError("channel_std must be positive")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        data = dict(data)
        data["channel_mean"] = tuple(data["channel_mean"])
        data["channel_std"] = tuple(data["channel_std"])
        return cls(**data)


class FixedNorm(nn.Module):
    """Per-channel standardization with constant statistics."""

    def __init__(self, mean: Sequence[float], std: Sequence[float]):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean, dtype=torch.float32).view(1, -1, 1, 1))
        self.register_buffer("std", torch.tensor(std, dtype=torch.float32).view(1, -1, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean) / self.std


class ConvTower(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        w = config.width
        self.norm = FixedNorm(config.channel_mean, config.channel_std)
        self.conv1 = nn.Conv2d(config.in_channels, w, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(w, w, kernel_size=3, stride=2, padding=1)
        self.conv3 = nn.Conv2d(w, w, kernel_size=3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.norm(x)
        x = torch.relu(self.conv1(x))
        x = torch.relu(self.conv2(x))
        x = torch.relu(self.conv3(x))
        return x.mean(dim=(2, 3))


class RegionOutputs(NamedTuple):
    embedding: torch.Tensor  # (B, D)
    pose_logits: torch.Tensor  # (B, K * num_classes)
    delta: torch.Tensor  # (B, 4 * num_classes)
    center: torch.Tensor  # (B, 2 * num_classes)


class RegionEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.tower = ConvTower(config)
        self.embed = nn.Linear(config.width, config.embedding_dim)
        self.pose_logits = nn.Linear(config.width, config.rotation_bins * config.num_classes)
        self.delta = nn.Linear(config.width, 4 * config.num_classes)
        self.center = nn.Linear(config.width, 2 * config.num_classes)
        with torch.no_grad():
            self.delta.weight.normal_(0.0, 0.01)
            self.delta.bias.copy_(torch.tensor(DELTA_BIAS).repeat(config.num_classes))
            self.center.weight.normal_(0.0, 0.01)
            self.center.bias.zero_()

    def forward(self, x: torch.Tensor) -> RegionOutputs:
        h = self.tower(x)
        return RegionOutputs(self.embed(h), self.pose_logits(h), self.delta(h), self.center(h))


class ViewEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.tower = ConvTower(config)
        self.embed = nn.Linear(config.width, config.embedding_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.embed(self.tower(x))


class ShapePoseNet(nn.Module):
    """Image-region stream and CAD-view stream, optimized jointly."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.region = RegionEncoder(config)
        self.view = ViewEncoder(config)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def class_slice(self, outputs: RegionOutputs, class_ids: torch.Tensor):
        """Per-row (bin logits, delta, center) of each region's own class."""
        k = self.config.rotation_bins
        rows = torch.arange(len(class_ids))
        logits = outputs.pose_logits.view(-1, self.config.num_classes, k)[rows, class_ids]
        delta = outputs.delta.view(-1, self.config.num_classes, 4)[rows, class_ids]
        center = outputs.center.view(-1, self.config.num_classes, 2)[rows, class_ids]
        return logits, delta, center


def _batch(model: ShapePoseNet, features: np.ndarray) -> torch.Tensor:
    features = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise DomainError("encoder input contains NaN or infinite values")
    if features.ndim == 3:
        features = features[None]
    return torch.as_tensor(features, dtype=model.dtype)


def region_outputs(model: ShapePoseNet, masked_features: np.ndarray) -> RegionOutputs:
    with torch.no_grad():
        return model.region(_batch(model, masked_features))


def view_embeddings(model: ShapePoseNet, view_features: np.ndarray) -> np.ndarray:
    with torch.no_grad():
        return model.view(_batch(model, view_features)).double().numpy()


def encode_region(
    model: ShapePoseNet, masked_features: np.ndarray, class_id: int = -1, object_id: int = -1
) -> EmbeddingVector:
    values = region_outputs(model, masked_features).embedding[0].double().numpy()
    return EmbeddingVector(values, EmbeddingTag.IMAGE_REGION, class_id, object_id)


def encode_view(
    model: ShapePoseNet, view_features: np.ndarray, class_id: int = -1, object_id: int = -1, view_id: int = 0
) -> EmbeddingVector:
    values = view_embeddings(model, view_features)[0]
    return EmbeddingVector(values, EmbeddingTag.OBJECT_VIEW, class_id, object_id, view_id)
