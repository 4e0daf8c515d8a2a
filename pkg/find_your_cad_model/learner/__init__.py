"""
Encoders, batches, losses and the training loop.
"""

from .batch import (
    BatchBuilder,
    RegionExample,
    TrainingBatch,
    ViewExample,
    flip_sample,
    image_weights,
    region_example,
)
from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .encoders import (
    ConvTower,
    EncoderConfig,
    RegionOutputs,
    ShapePoseNet,
    encode_region,
    encode_view,
    region_outputs,
    view_embeddings,
)
from .features import mask_features
from .losses import LOSS_TERMS, LossBreakdown, backward, embedding_loss, total_loss
from .training import TRACE_COLUMNS, TrainResult, build_model, lr_at, train, write_trace

__all__ = [
    "BatchBuilder",
    "CHECKPOINT_VERSION",
    "ConvTower",
    "EncoderConfig",
    "LOSS_TERMS",
    "LossBreakdown",
    "RegionExample",
    "RegionOutputs",
    "ShapePoseNet",
    "TRACE_COLUMNS",
    "TrainResult",
    "TrainingBatch",
    "ViewExample",
    "backward",
    "build_model",
    "embedding_loss",
    "encode_region",
    "encode_view",
    "flip_sample",
    "image_weights",
    "load_checkpoint",
    "lr_at",
    "mask_features",
    "region_example",
    "region_outputs",
    "save_checkpoint",
    "total_loss",
    "train",
    "view_embeddings",
    "write_trace",
]
