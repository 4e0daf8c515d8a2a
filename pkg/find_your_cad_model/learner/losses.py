"""Combined embedding and pose loss, and its reverse-mode gradients."""

import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import torch
import torch.nn.functional as F

from find_your_cad_model.embedding import mine_hard, nce_loss
from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import EmbeddingTag, EmbeddingVector, HyperParams

from .batch import TrainingBatch
from .encoders import ShapePoseNet

logger = logging.getLogger(__name__)

LOSS_TERMS = ("embed", "pose_class", "pose_reg", "center")


@dataclass
class LossBreakdown:
    total: torch.Tensor
    terms: Dict[str, torch.Tensor]
    mined: List[tuple]  # (positives, negatives) used per region

    def as_floats(self) -> Dict[str, float]:
        values = {"total": float(self.total.detach())}
        values.update({k: float(v.detach()) for k, v in self.terms.items()})
        return values


def _tensor(model: ShapePoseNet, arrays) -> torch.Tensor:
    return torch.as_tensor(np.stack(arrays), dtype=model.dtype)


def embedding_loss(
    region_embeddings: torch.Tensor,
    view_embeddings: torch.Tensor,
    batch: TrainingBatch,
    hyper: HyperParams,
):
    """Weighted mean over regions of the contrastive loss after hard mining.

    Positives are views of the region's own object; negatives are views of
    other objects of the same class.
    """
    pool = [
        EmbeddingVector(values, EmbeddingTag.OBJECT_VIEW, v.class_id, v.object_id, v.view_id)
        for values, v in zip(view_embeddings.detach().double().numpy(), batch.views)
    ]
    row_of = {v.key: i for i, v in enumerate(batch.views)}
    weighted = region_embeddings.new_zeros(())
    weight_sum = 0.0
    mined = []
    anchors = region_embeddings.detach().double().numpy()
    for r, region in enumerate(batch.regions):
        positives = [e for e in pool if e.object_id == region.object_id]
        negatives = [
            e for e in pool if e.class_id == region.class_id and e.object_id != region.object_id
        ]
        if not positives:
            mined.append((0, 0))
            continue
        hard_pos, hard_neg = mine_hard(
            anchors[r], positives, negatives, hyper.hard_positives, hyper.hard_negatives
        )
        mined.append((len(hard_pos), len(hard_neg)))
        pos_rows = view_embeddings[[row_of[e.key] for e in hard_pos]]
        neg_rows = view_embeddings[[row_of[e.key] for e in hard_neg]]
        loss = nce_loss(
            region_embeddings[r], pos_rows, neg_rows, hyper.negative_weight, hyper.temperature
        )
        weighted = weighted + region.weight * loss
        weight_sum += region.weight
    if weight_sum == 0:
        return weighted, mined
    return weighted / weight_sum, mined


def total_loss(
    model: ShapePoseNet, batch: TrainingBatch, hyper: HyperParams, freeze_views: bool = False
) -> LossBreakdown:
    """w_e * L_embed + w_c * L_pose_class + w_r * (L_pose_reg + L_center)."""
    if len(batch) == 0:
        raise DomainError("empty training batch")
    outputs = model.region(_tensor(model, [r.features for r in batch.regions]))
    if batch.views:
        view_emb = model.view(_tensor(model, [v.features for v in batch.views]))
        if freeze_views:
            view_emb = view_emb.detach()
        embed, mined = embedding_loss(outputs.embedding, view_emb, batch, hyper)
    else:
        embed, mined = outputs.embedding.new_zeros(()), []

    class_ids = torch.as_tensor([r.class_id for r in batch.regions], dtype=torch.long)
    logits, delta, center = model.class_slice(outputs, class_ids)
    bins = torch.as_tensor([r.bin_index for r in batch.regions], dtype=torch.long)
    pose_class = F.cross_entropy(logits, bins)

    delta_target = _tensor(model, [r.delta for r in batch.regions])
    gate = torch.as_tensor([float(r.regress_mask) for r in batch.regions], dtype=model.dtype)
    delta_err = F.huber_loss(delta, delta_target, reduction="none", delta=hyper.huber_delta)
    pose_reg = (delta_err.sum(dim=1) * gate).mean()

    center_target = _tensor(model, [r.center_delta for r in batch.regions])
    center_err = F.huber_loss(center, center_target, reduction="none", delta=hyper.huber_delta)
    center_loss = center_err.sum(dim=1).mean()

    total = (
        hyper.embed_weight * embed
        + hyper.pose_class_weight * pose_class
        + hyper.pose_reg_weight * (pose_reg + center_loss)
    )
    terms = {"embed": embed, "pose_class": pose_class, "pose_reg": pose_reg, "center": center_loss}
    return LossBreakdown(total=total, terms=terms, mined=mined)


def backward(
    model: ShapePoseNet, batch: TrainingBatch, hyper: HyperParams, freeze_views: bool = False
) -> Dict[str, torch.Tensor]:
    """Exact gradient of total_loss for every named parameter (zeros where unused)."""
    loss = total_loss(model, batch, hyper, freeze_views)
    if not torch.isfinite(loss.total):
        raise DomainError("total loss is not finite")
    names, params = zip(*model.named_parameters())
    grads = torch.autograd.grad(loss.total, params, allow_unused=True)
    return {
        name: torch.zeros_like(p) if g is None else g for name, p, g in zip(names, params, grads)
    }
