"""The evaluation report document and its schema check."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from find_your_cad_model.exceptions import DomainError

from .detection import ApSummary
from .shape import F1_THRESHOLDS, ShapeScore

REPORT_SCHEMA_VERSION = 1

_AP_KEYS = ("AP", "AP50", "AP75", "per_class")
_TOP_LEVEL = {
    "schema_version": int,
    "split": str,
    "ablation": list,
    "f1_threshold": float,
    "num_regions": int,
    "ap_mesh": dict,
    "ap_box": dict,
    "ap_mask": dict,
    "shape": dict,
    "retrieval_accuracy": float,
    "median_rotation_error_deg": float,
}


def mean_shape_scores(scores: Sequence[ShapeScore]) -> Dict[str, float]:
    keys = ["chamfer", "normal_consistency"] + [f"f1@{t:g}" for t in F1_THRESHOLDS]
    if not scores:
        return {k: 0.0 for k in keys}
    rows = [s.as_dict() for s in scores]
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


@dataclass
class EvaluationReport:
    split: str
    ablation: List[str]
    f1_threshold: float
    num_regions: int
    ap_mesh: ApSummary
    ap_box: ApSummary
    ap_mask: ApSummary
    shape: Dict[str, float] = field(default_factory=dict)
    retrieval_accuracy: float = 0.0
    median_rotation_error_deg: float = 0.0
    class_names: Optional[List[str]] = None

    def as_dict(self) -> dict:
        doc = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "split": self.split,
            "ablation": sorted(self.ablation),
            "f1_threshold": float(self.f1_threshold),
            "num_regions": int(self.num_regions),
            "ap_mesh": self.ap_mesh.as_dict(),
            "ap_box": self.ap_box.as_dict(),
            "ap_mask": self.ap_mask.as_dict(),
            "shape": dict(self.shape),
            "retrieval_accuracy": float(self.retrieval_accuracy),
            "median_rotation_error_deg": float(self.median_rotation_error_deg),
        }
        if self.class_names is not None:
            doc["class_names"] = list(self.class_names)
        return doc


def validate_report(doc: dict) -> None:
    """Raise DomainError when doc does not follow the report schema."""
    for key, kind in _TOP_LEVEL.items():
        if key not in doc:
            raise DomainError(f"report is missing '{key}'")
        if kind is float and isinstance(doc[key], int):
            continue
        if not isinstance(doc[key], kind):
            raise DomainError(f"report field '{key}' should be {kind.__name__}")
    if doc["schema_version"] != REPORT_SCHEMA_VERSION:
        raise DomainError(f"unsupported report schema {doc['schema_version']}")
    for section in ("ap_mesh", "ap_box", "ap_mask"):
        for key in _AP_KEYS:
            if key not in doc[section]:
                raise DomainError(f"report section '{section}' is missing '{key}'")
    for key in mean_shape_scores([]):
        if key not in doc["shape"]:
            raise DomainError(f"report shape section is missing '{key}'")
