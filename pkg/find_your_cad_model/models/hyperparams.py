"""Every tunable constant of the method, with its published default."""

import math
from dataclasses import dataclass, field, fields, replace
from typing import Tuple

from find_your_cad_model.exceptions import DomainError


@dataclass(frozen=True)
class HyperParams:
    temperature: float = 0.15  # tau
    negative_weight: float = 1.5  # C
    huber_delta: float = 0.15  # delta
    rotation_bins: int = 16  # K
    regress_gate: float = math.pi / 6  # theta
    canonical_views: int = 16  # k
    regions_per_image: int = 8  # Q
    hard_positives: int = 32  # P_h
    hard_negatives: int = 128  # N_h
    repeat_threshold: float = 0.1  # t
    retrieval_neighbors: int = 1  # N_k
    embed_weight: float = 0.5
    pose_class_weight: float = 0.25
    pose_reg_weight: float = 5.0
    base_lr: float = 0.08
    lr_decay: float = 0.1
    momentum: float = 0.9
    roi_jitter: float = 0.025
    embedding_dim: int = 128
    views_per_example: int = 3
    jitter_magnitude: float = math.radians(5.0)

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "base_lr" and value == 0:
                continue
            if not value > 0:
                raise DomainError(f"hyperparameter {f.name} must be positive, got {value}")

    def with_loss_scale(self, factor: float) -> "HyperParams":
        """Copy with all three loss weights multiplied by factor."""
        return replace(
            self,
            embed_weight=self.embed_weight * factor,
            pose_class_weight=self.pose_class_weight * factor,
            pose_reg_weight=self.pose_reg_weight * factor,
        )


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 3000
    milestones: Tuple[int, int] = (2000, 2500)
    images_per_step: int = 4
    flip: bool = True
    roi_jitter: bool = True
    brightness_jitter: float = 0.2
    grad_clip: float = 5.0
    freeze_views: bool = False
    distractor_objects: int = 2
    log_every: int = 50
    seed: int = 0
    hyper: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if self.steps < 0:
            raise DomainError("steps must be non-negative")
        if list(self.milestones) != sorted(self.milestones):
            raise DomainError("milestones must be increasing")
        if self.steps > 0 and any(m >= self.steps for m in self.milestones):
            raise DomainError(
                f"milestones {self.milestones} must lie below total steps {self.steps}"
            )
        if self.images_per_step < 1:
            raise DomainError("images_per_step must be at least 1")
        if self.distractor_objects < 0 or self.brightness_jitter < 0 or self.grad_clip < 0:
            raise DomainError("distractor_objects, brightness_jitter and grad_clip must be non-negative")
        if self.brightness_jitter >= 1:
            raise DomainError("brightness_jitter must be below 1")

    @classmethod
    def scaled(cls, steps: int, **overrides) -> "TrainConfig":
        """Config whose decay milestones sit at 2/3 and 5/6 of the run."""
        milestones = (steps * 2 // 3, steps * 5 // 6)
        return cls(steps=steps, milestones=milestones, **overrides)
