"""Hard example mining and repeat-factor class rebalancing."""

import math
from typing import List, Sequence, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import EmbeddingVector


def repeat_factor(class_freq: float, t: float) -> float:
    """Inverse square root sampling weight max(1, sqrt(t / f))."""
    if not class_freq > 0:
        raise DomainError(f"class frequency must be positive, got {class_freq}")
    return max(1.0, math.sqrt(t / class_freq))


def cosine_similarities(anchor: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    anchor = np.asarray(anchor, dtype=np.float64)
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, anchor.shape[-1])
    if candidates.shape[0] == 0:
        return np.zeros(0)
    a = anchor / np.linalg.norm(anchor)
    return (candidates / np.linalg.norm(candidates, axis=1, keepdims=True)) @ a


def hardest_indices(
    similarities: Sequence[float], keys: Sequence[Tuple[int, int]], count: int, highest: bool
) -> List[int]:
    """Indices of the `count` hardest candidates.

    Hard positives have the lowest similarity (highest=False), hard negatives the
    highest (highest=True); ties break on (object_id, view_id).
    """
    sims = np.asarray(similarities, dtype=np.float64)
    order = sorted(
        range(len(sims)), key=lambda i: (-sims[i] if highest else sims[i], tuple(keys[i]))
    )
    return order[: max(count, 0)]


def mine_hard(
    anchor: np.ndarray,
    candidate_pos: Sequence[EmbeddingVector],
    candidate_neg: Sequence[EmbeddingVector],
    p_h: int,
    n_h: int,
) -> Tuple[List[EmbeddingVector], List[EmbeddingVector]]:
    pos_sims = cosine_similarities(anchor, np.array([c.values for c in candidate_pos]))
    neg_sims = cosine_similarities(anchor, np.array([c.values for c in candidate_neg]))
    pos_idx = hardest_indices(pos_sims, [c.key for c in candidate_pos], p_h, highest=False)
    neg_idx = hardest_indices(neg_sims, [c.key for c in candidate_neg], n_h, highest=True)
    return [candidate_pos[i] for i in pos_idx], [candidate_neg[i] for i in neg_idx]
