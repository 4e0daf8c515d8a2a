"""Temperature-scaled cosine similarity and the noise-contrastive loss.

Both functions take anything torch.as_tensor accepts and return tensors, so the
same code serves the training graph and plain numeric checks. Losses are in nats.
"""

import math
from typing import Any

import torch

from find_your_cad_model.exceptions import DomainError


def as_tensor(values: Any) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values
    return torch.as_tensor(values, dtype=torch.float64)


def _unit_rows(x: torch.Tensor, name: str) -> torch.Tensor:
    norms = torch.linalg.vector_norm(x, dim=-1, keepdim=True)
    if bool((norms == 0).any()):
        raise DomainError(f"{name} contains a zero vector")
    return x / norms


def scaled_cosine(x: Any, y: Any, tau: float) -> torch.Tensor:
    """(1/tau) * cos(x, y); y may be a single vector or a (N, D) stack."""
    if tau <= 0:
        raise DomainError("temperature must be positive")
    x = _unit_rows(as_tensor(x), "x")
    y = _unit_rows(as_tensor(y), "y")
    return (y @ x) / tau


def nce_loss(anchor: Any, positives: Any, negatives: Any, c: float, tau: float) -> torch.Tensor:
    """-sum_p log(e^D(a,p) / (e^D(a,p) + C * sum_n e^D(a,n))), max-shifted."""
    anchor = as_tensor(anchor)
    positives = as_tensor(positives).reshape(-1, anchor.shape[-1])
    negatives = as_tensor(negatives).reshape(-1, anchor.shape[-1])
    if positives.shape[0] == 0:
        raise DomainError("nce_loss needs at least one positive")

    d_pos = scaled_cosine(anchor, positives, tau)
    if negatives.shape[0] == 0:
        return (d_pos - d_pos).sum()
    d_neg = scaled_cosine(anchor, negatives, tau)
    log_noise = math.log(c) + torch.logsumexp(d_neg, dim=0)
    return (torch.logaddexp(d_pos, log_noise) - d_pos).sum()
