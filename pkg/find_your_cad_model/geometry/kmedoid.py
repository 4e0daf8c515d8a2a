"""Partitioning Around Medoids with greedy best-swap improvement."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, TypeVar

import numpy as np

from find_your_cad_model.exceptions import DomainError

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAX_SWAP_ROUNDS = 1000
IMPROVEMENT_EPSILON = 1e-12


@dataclass
class KMedoidResult:
    medoids: List[int]
    assignment: np.ndarray
    cost: float


def pairwise_distances(items: Sequence[T], dist: Callable[[T, T], float]) -> np.ndarray:
    n = len(items)
    matrix = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            matrix[i, j] = matrix[j, i] = dist(items[i], items[j])
    return matrix


def _assign(matrix: np.ndarray, medoids: List[int]):
    sub = matrix[medoids]
    nearest = np.argmin(sub, axis=0)
    return nearest, float(sub[nearest, np.arange(matrix.shape[0])].sum())


def kmedoid_from_matrix(matrix: np.ndarray, k: int, seed: int) -> KMedoidResult:
    n = matrix.shape[0]
    if k < 1 or k > n:
        raise DomainError(f"need 1 <= K <= {n} items, got K={k}")

    rng = np.random.default_rng(seed)
    medoids = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
    nearest, cost = _assign(matrix, medoids)

    for _ in range(MAX_SWAP_ROUNDS):
        sub = matrix[medoids]
        order = np.argsort(sub, axis=0, kind="stable")
        cols = np.arange(n)
        d_first = sub[order[0], cols]
        d_second = sub[order[1], cols] if k > 1 else np.full(n, np.inf)

        taken = set(medoids)
        candidates = np.array([i for i in range(n) if i not in taken], dtype=int)
        if candidates.size == 0:
            break
        best = (cost, -1, -1)
        for slot in range(k):
            # distance each point keeps when medoid `slot` is removed
            remaining = np.where(order[0] == slot, d_second, d_first)
            swap_costs = np.minimum(matrix[candidates], remaining).sum(axis=1)
            pick = int(np.argmin(swap_costs))
            if swap_costs[pick] < best[0] - IMPROVEMENT_EPSILON:
                best = (float(swap_costs[pick]), slot, int(candidates[pick]))

        if best[1] < 0:
            break
        medoids[best[1]] = best[2]
        medoids.sort()
        nearest, cost = _assign(matrix, medoids)
    else:
        logger.warning(f"K-medoid stopped after {MAX_SWAP_ROUNDS} swap rounds")

    assignment = np.array([medoids[i] for i in nearest], dtype=np.int64)
    return KMedoidResult(medoids=medoids, assignment=assignment, cost=cost)


def kmedoid(
    items: Sequence[T], k: int, dist: Callable[[T, T], float], seed: int
) -> KMedoidResult:
    """Cluster items into k medoids; deterministic for a given seed.

    The returned medoids are item indices in ascending order, `assignment[i]`
    is the medoid index serving item i, and no single medoid/non-medoid swap
    lowers `cost`.
    """
    if k < 1 or k > len(items):
        raise DomainError(f"need 1 <= K <= {len(items)} items, got K={k}")
    return kmedoid_from_matrix(pairwise_distances(items, dist), k, seed)
