"""SGD training loop with a stepwise learning-rate schedule."""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import torch

from find_your_cad_model.data.dataset import Dataset
from find_your_cad_model.exceptions import TrainingDivergedError
from find_your_cad_model.models import TrainConfig
from find_your_cad_model.pose import RotationBins, build_bins

from .batch import BatchBuilder
from .encoders import EncoderConfig, ShapePoseNet
from .losses import LOSS_TERMS, total_loss

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("step", "lr") + ("total",) + LOSS_TERMS


@dataclass
class TrainResult:
    model: ShapePoseNet
    bins: RotationBins
    trace: List[Dict[str, float]] = field(default_factory=list)


def lr_at(step: int, config: TrainConfig) -> float:
    """Base rate decayed once for every milestone already reached."""
    passed = sum(1 for m in config.milestones if step >= m)
    return config.hyper.base_lr * config.hyper.lr_decay**passed


def build_model(num_classes: int, config: TrainConfig) -> ShapePoseNet:
    torch.manual_seed(config.seed)
    return ShapePoseNet(
        EncoderConfig(
            num_classes=num_classes,
            rotation_bins=config.hyper.rotation_bins,
            embedding_dim=config.hyper.embedding_dim,
        )
    )


def write_trace(path: Union[str, Path], trace: List[Dict[str, float]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=TRACE_COLUMNS)
        writer.writeheader()
        for row in trace:
            writer.writerow({k: row[k] for k in TRACE_COLUMNS})


def train(
    config: TrainConfig,
    dataset: Dataset,
    bins: Optional[RotationBins] = None,
    model: Optional[ShapePoseNet] = None,
) -> TrainResult:
    """Optimize both streams jointly; deterministic for a given seed on one thread."""
    torch.set_num_threads(1)
    hyper = config.hyper
    if bins is None:
        bins = build_bins(dataset.train_rotations(), hyper.rotation_bins, config.seed)
    if model is None:
        model = build_model(len(dataset.classes), config)
    rng = np.random.default_rng(config.seed)
    result = TrainResult(model=model, bins=bins)
    if config.steps == 0:
        logger.info("Zero training steps requested; returning the initialization")
        return result

    builder = BatchBuilder(dataset, bins, config)
    optimizer = torch.optim.SGD(model.parameters(), lr=hyper.base_lr, momentum=hyper.momentum)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=list(config.milestones), gamma=hyper.lr_decay
    )
    logger.info(f"🚀 Training {config.steps} steps, milestones {config.milestones}, seed {config.seed}")

    last_finite: Dict[str, float] = {}
    model.train()
    for step in range(config.steps):
        batch = builder.sample(rng)
        loss = total_loss(model, batch, hyper, config.freeze_views)
        values = loss.as_floats()
        if not all(math.isfinite(v) for v in values.values()):
            raise TrainingDivergedError(step, last_finite)
        last_finite = values

        optimizer.zero_grad()
        loss.total.backward()
        if config.grad_clip > 0:
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        lr = optimizer.param_groups[0]["lr"]
        optimizer.step()
        scheduler.step()

        row = {"step": step, "lr": lr, **values}
        result.trace.append(row)
        if config.log_every and (step % config.log_every == 0 or step == config.steps - 1):
            logger.info(
                f"   📊 step {step}/{config.steps} lr {lr:.4g} total {values['total']:.4f} "
                + " ".join(f"{k} {values[k]:.4f}" for k in LOSS_TERMS)
            )
    model.eval()
    return result
