"""Detection-style average precision over boxes, masks and meshes."""

import logging
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.geometry import sample_surface
from find_your_cad_model.models import PointCloud, TriMesh

from .shape import METRIC_SAMPLES, f1_at, normalization_factor

logger = logging.getLogger(__name__)

COCO_THRESHOLDS = tuple(np.round(np.linspace(0.5, 0.95, 10), 2))
RECALL_POINTS = np.linspace(0.0, 1.0, 101)

MatchFn = Callable[[Any, Any], float]


@dataclass
class Prediction:
    image_id: str
    class_id: int
    score: float
    payload: Any


@dataclass
class GroundTruth:
    image_id: str
    class_id: int
    payload: Any


@dataclass
class ApInput:
    predictions: List[Prediction] = field(default_factory=list)
    ground_truths: List[GroundTruth] = field(default_factory=list)

    def __post_init__(self):
        for p in self.predictions:
            if not np.isfinite(p.score):
                raise DomainError(f"non-finite confidence on image {p.image_id}")


@dataclass
class ApResult:
    per_class: Dict[int, float]
    mean: float


@dataclass
class ApSummary:
    ap: float
    ap50: float
    ap75: float
    per_class: Dict[int, Dict[str, float]]
    per_threshold: Dict[float, float]

    def as_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AP50": self.ap50,
            "AP75": self.ap75,
            "per_class": {str(c): v for c, v in sorted(self.per_class.items())},
        }


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    for box in (a, b):
        if not (box[0] < box[2] and box[1] < box[3]):
            raise DomainError(f"inverted or empty box {tuple(box)}")
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return float(inter / union)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DomainError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(a & b) / union)


def interpolated_ap(true_positive: Sequence[bool], num_gt: int) -> float:
    """101-point interpolated AP of a ranking already sorted by confidence."""
    tp = np.asarray(true_positive, dtype=np.float64)
    if num_gt == 0 or tp.size == 0:
        return 0.0
    acc_tp = np.cumsum(tp)
    acc_fp = np.cumsum(1.0 - tp)
    recall = acc_tp / num_gt
    precision = acc_tp / (acc_tp + acc_fp)
    for i in range(len(precision) - 1, 0, -1):
        precision[i - 1] = max(precision[i - 1], precision[i])
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(np.mean(sampled))


class _SimilarityTable:
    """Similarities of every same-image, same-class (prediction, gt) pair."""

    def __init__(self, inputs: ApInput, match_fn: MatchFn):
        self.inputs = inputs
        self.groups: Dict[Tuple[str, int], Tuple[List[int], List[int], np.ndarray]] = {}
        preds: Dict[Tuple[str, int], List[int]] = {}
        gts: Dict[Tuple[str, int], List[int]] = {}
        for i, p in enumerate(inputs.predictions):
            preds.setdefault((p.image_id, p.class_id), []).append(i)
        for j, g in enumerate(inputs.ground_truths):
            gts.setdefault((g.image_id, g.class_id), []).append(j)

        for key, pred_idx in preds.items():
            pred_idx = sorted(pred_idx, key=lambda i: -inputs.predictions[i].score)
            gt_idx = gts.get(key, [])
            sims = np.zeros((len(pred_idx), len(gt_idx)))
            for r, i in enumerate(pred_idx):
                for c, j in enumerate(gt_idx):
                    sims[r, c] = match_fn(
                        inputs.predictions[i].payload, inputs.ground_truths[j].payload
                    )
            self.groups[key] = (pred_idx, gt_idx, sims)

        self.gt_counts: Dict[int, int] = {}
        for g in inputs.ground_truths:
            self.gt_counts[g.class_id] = self.gt_counts.get(g.class_id, 0) + 1

    def evaluate(self, threshold: float) -> ApResult:
        flags: Dict[int, List[Tuple[float, int, bool]]] = {}
        for (_, class_id), (pred_idx, gt_idx, sims) in sorted(self.groups.items()):
            taken = np.zeros(len(gt_idx), dtype=bool)
            for r, i in enumerate(pred_idx):
                hit = False
                if len(gt_idx):
                    candidates = np.where(~taken & (sims[r] >= threshold), sims[r], -np.inf)
                    best = int(np.argmax(candidates))
                    if np.isfinite(candidates[best]):
                        taken[best] = True
                        hit = True
                score = self.inputs.predictions[i].score
                flags.setdefault(class_id, []).append((score, i, hit))

        per_class = {}
        for class_id, num_gt in sorted(self.gt_counts.items()):
            ranked = sorted(flags.get(class_id, []), key=lambda f: (-f[0], f[1]))
            per_class[class_id] = interpolated_ap([f[2] for f in ranked], num_gt)
        mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
        return ApResult(per_class=per_class, mean=mean)


def average_precision(inputs: ApInput, match_threshold: float, match_fn: MatchFn) -> ApResult:
    """Greedy confidence-ordered matching at one threshold; mean over GT classes."""
    return _SimilarityTable(inputs, match_fn).evaluate(match_threshold)


def ap_sweep(
    inputs: ApInput, match_fn: MatchFn, thresholds: Sequence[float] = COCO_THRESHOLDS
) -> ApSummary:
    """AP averaged over thresholds (COCO AP50-95), plus AP50 and AP75."""
    table = _SimilarityTable(inputs, match_fn)
    results = {float(t): table.evaluate(float(t)) for t in thresholds}
    if 0.5 not in results:
        results[0.5] = table.evaluate(0.5)
    if 0.75 not in results:
        results[0.75] = table.evaluate(0.75)
    swept = [results[float(t)] for t in thresholds]

    per_class: Dict[int, Dict[str, float]] = {}
    for class_id in table.gt_counts:
        per_class[class_id] = {
            "AP": float(np.mean([r.per_class[class_id] for r in swept])),
            "AP50": results[0.5].per_class[class_id],
            "AP75": results[0.75].per_class[class_id],
        }
    return ApSummary(
        ap=float(np.mean([r.mean for r in swept])),
        ap50=results[0.5].mean,
        ap75=results[0.75].mean,
        per_class=per_class,
        per_threshold={float(t): results[float(t)].mean for t in thresholds},
    )


def _mesh_seed(mesh: TriMesh, seed: int) -> int:
    digest = zlib.crc32(mesh.vertices.tobytes() + mesh.faces.tobytes())
    return (seed * 1_000_003 + digest) % (2**32)


class MeshF1Matcher:
    """match_fn scoring a (predicted mesh, ground-truth mesh) pair by F1 at a distance.

    Each mesh is sampled once (seed derived from its content, so identical meshes
    give identical clouds) and reused for every pair and threshold; the pair is
    rescaled by the ground truth's normalization factor before comparing.
    """

    def __init__(self, f1_threshold: float = 0.3, n_points: int = METRIC_SAMPLES, seed: int = 0):
        self.f1_threshold = f1_threshold
        self.n_points = n_points
        self.seed = seed
        self._clouds: Dict[int, Tuple[TriMesh, PointCloud]] = {}

    def cloud(self, mesh: TriMesh) -> PointCloud:
        key = id(mesh)
        if key not in self._clouds:
            cloud = sample_surface(mesh, self.n_points, _mesh_seed(mesh, self.seed))
            # holding the mesh keeps its id from being reused
            self._clouds[key] = (mesh, cloud)
        return self._clouds[key][1]

    def __call__(self, pred: TriMesh, gt: TriMesh) -> float:
        factor = normalization_factor(gt)
        a = self.cloud(pred)
        b = self.cloud(gt)
        return f1_at(
            PointCloud(a.points * factor), PointCloud(b.points * factor), self.f1_threshold
        )


def mesh_ap(
    inputs: ApInput,
    f1_threshold: float = 0.3,
    n_points: int = METRIC_SAMPLES,
    seed: int = 0,
    thresholds: Sequence[float] = COCO_THRESHOLDS,
) -> ApSummary:
    """AP where a prediction matches when its mesh F1 reaches the swept threshold."""
    return ap_sweep(inputs, MeshF1Matcher(f1_threshold, n_points, seed), thresholds)
