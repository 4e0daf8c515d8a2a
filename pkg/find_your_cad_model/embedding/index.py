"""Exact cosine nearest-neighbour index over CAD-view embeddings, one partition per class."""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import numpy as np

from find_your_cad_model.exceptions import DomainError, UnknownClassError
from find_your_cad_model.models import EmbeddingTag, EmbeddingVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Partition:
    matrix: np.ndarray
    object_ids: np.ndarray
    view_ids: np.ndarray
    starts: np.ndarray  # first row of each object run


class EmbeddingIndex:
    """Immutable after construction; rebuild to change contents."""

    def __init__(self, entries: Iterable[EmbeddingVector]):
        entries = list(entries)
        if not entries:
            raise DomainError("cannot build an index without entries")
        dim = entries[0].values.shape[0]
        seen = set()
        by_class: Dict[int, List[EmbeddingVector]] = {}
        for entry in entries:
            if entry.tag is not EmbeddingTag.OBJECT_VIEW:
                raise DomainError("index entries must be object-view embeddings")
            if entry.values.shape[0] != dim:
                raise DomainError(f"dimension mismatch: {entry.values.shape[0]} vs {dim}")
            if not np.all(np.isfinite(entry.values)):
                raise DomainError(f"non-finite embedding for object {entry.object_id}")
            norm = np.linalg.norm(entry.values)
            if norm == 0:
                raise DomainError(f"zero embedding for object {entry.object_id}")
            if entry.key in seen:
                raise DomainError(f"duplicate (object_id, view_id) {entry.key}")
            seen.add(entry.key)
            by_class.setdefault(entry.class_id, []).append(entry)

        self.dim = dim
        self._entries = sorted(entries, key=lambda e: (e.class_id, e.object_id, e.view_id))
        self._partitions: Dict[int, _Partition] = {}
        for class_id, group in by_class.items():
            group.sort(key=lambda e: (e.object_id, e.view_id))
            matrix = np.array([e.values / np.linalg.norm(e.values) for e in group])
            object_ids = np.array([e.object_id for e in group], dtype=np.int64)
            starts = np.flatnonzero(np.r_[True, object_ids[1:] != object_ids[:-1]])
            self._partitions[class_id] = _Partition(
                matrix=matrix,
                object_ids=object_ids,
                view_ids=np.array([e.view_id for e in group], dtype=np.int64),
                starts=starts,
            )
        logger.info(
            f"Built embedding index: {len(self._entries)} views, "
            f"{len(self._partitions)} classes, dim {dim}"
        )

    @property
    def classes(self) -> List[int]:
        return sorted(self._partitions)

    @property
    def entries(self) -> List[EmbeddingVector]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def object_ids(self, class_id: int) -> List[int]:
        part = self._partition(class_id)
        return [int(i) for i in part.object_ids[part.starts]]

    def _partition(self, class_id: int) -> _Partition:
        if class_id not in self._partitions:
            raise UnknownClassError(f"class {class_id} has no entries in the index")
        return self._partitions[class_id]

    def search(self, query: np.ndarray, class_id: int, k: int = 1) -> List[Tuple[int, float]]:
        """Top-k objects as (object_id, cosine similarity of their best view)."""
        part = self._partition(class_id)
        query = np.asarray(query, dtype=np.float64).reshape(-1)
        if query.shape[0] != self.dim:
            raise DomainError(f"query dimension {query.shape[0]} != index dimension {self.dim}")
        norm = np.linalg.norm(query)
        if norm == 0 or not np.isfinite(norm):
            raise DomainError("query must be a finite non-zero vector")
        sims = part.matrix @ (query / norm)
        best = np.maximum.reduceat(sims, part.starts)
        objects = part.object_ids[part.starts]
        order = np.lexsort((objects, -best))[:k]
        return [(int(objects[i]), float(best[i])) for i in order]

    def retrieve(self, query: np.ndarray, class_id: int, k: int = 1) -> List[int]:
        return [object_id for object_id, _ in self.search(query, class_id, k)]


def index_build(entries: Iterable[EmbeddingVector]) -> EmbeddingIndex:
    return EmbeddingIndex(entries)


def index_retrieve(index: EmbeddingIndex, query: np.ndarray, class_id: int, n_k: int = 1) -> List[int]:
    return index.retrieve(query, class_id, n_k)
