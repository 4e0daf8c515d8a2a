"""Tests for the contrastive loss, hard mining, the retrieval index and exports."""

import math

import numpy as np
import pytest
import torch

from find_your_cad_model.embedding import (
    EmbeddingIndex,
    hardest_indices,
    index_build,
    index_retrieve,
    mine_hard,
    nce_loss,
    read_embeddings,
    repeat_factor,
    scaled_cosine,
    write_embeddings,
)
from find_your_cad_model.exceptions import DomainError, UnknownClassError
from find_your_cad_model.models import EmbeddingTag, EmbeddingVector


def _straight_line_nce(anchor, positives, negatives, c, tau):
    """Direct evaluation of -sum log(e^Dp / (e^Dp + C sum e^Dn))."""

    def d(x, y):
        return float(np.dot(x, y) / (np.linalg.norm(x) * np.linalg.norm(y)) / tau)

    noise = sum(math.exp(d(anchor, n)) for n in negatives)
    total = 0.0
    for p in positives:
        e = math.exp(d(anchor, p))
        total -= math.log(e / (e + c * noise))
    return total


def _view(values, class_id, object_id, view_id):
    return EmbeddingVector(np.asarray(values, dtype=float), EmbeddingTag.OBJECT_VIEW, class_id, object_id, view_id)


class TestContrastiveLoss:
    """Scaled cosine and the noise-contrastive loss."""

    def test_worked_example(self):
        """One positive at D=2, one negative at D=1, C=1.5 gives 0.43936."""
        anchor = [1.0, 0.0]
        positive = [0.3, math.sqrt(0.91)]
        negative = [0.15, math.sqrt(1 - 0.0225)]
        loss = nce_loss(anchor, [positive], [negative], c=1.5, tau=0.15)
        assert float(loss) == pytest.approx(0.43936, abs=1e-5)
        assert float(loss) == pytest.approx(math.log(1 + 1.5 * math.exp(-1.0)), abs=1e-12)

    def test_matches_straight_line_oracle(self):
        """Small random candidate sets agree with direct evaluation."""
        rng = np.random.default_rng(0)
        for _ in range(20):
            dim = int(rng.integers(2, 6))
            anchor = rng.normal(size=dim)
            n_pos = int(rng.integers(1, 4))
            n_neg = int(rng.integers(0, 4))
            pos = rng.normal(size=(n_pos, dim))
            neg = rng.normal(size=(n_neg, dim))
            expected = _straight_line_nce(anchor, pos, neg, 1.5, 0.15)
            assert float(nce_loss(anchor, pos, neg, 1.5, 0.15)) == pytest.approx(expected, abs=1e-10)

    def test_invariant_to_positive_rescaling(self):
        """Scaling anchor, positives or negatives by positive constants leaves the loss unchanged."""
        rng = np.random.default_rng(5)
        anchor = rng.normal(size=8)
        pos = rng.normal(size=(3, 8))
        neg = rng.normal(size=(4, 8))
        base = float(nce_loss(anchor, pos, neg, 1.5, 0.15))
        scales = rng.uniform(0.1, 10.0, size=(4, 1))
        rescaled = float(nce_loss(7.0 * anchor, pos * scales[:3], neg * scales, 1.5, 0.15))
        assert rescaled == pytest.approx(base, abs=1e-9)

    def test_no_negatives_is_zero(self):
        """Without noise samples the loss vanishes."""
        assert float(nce_loss([1.0, 0.0], [[0.0, 1.0]], np.zeros((0, 2)), 1.5, 0.15)) == 0.0

    def test_stable_at_low_temperature(self):
        """Large scaled similarities stay finite."""
        loss = nce_loss([1.0, 0.0], [[-1.0, 0.0]], [[1.0, 0.0]], 1.5, 1e-4)
        assert math.isfinite(float(loss))
        assert float(loss) == pytest.approx(2e4 + math.log(1.5), rel=1e-9)

    def test_scaled_cosine_range(self):
        """Scaled cosine lies in [-1/tau, 1/tau]."""
        rng = np.random.default_rng(1)
        values = scaled_cosine(rng.normal(size=4), rng.normal(size=(10, 4)), 0.15)
        assert torch.all(values.abs() <= 1 / 0.15 + 1e-12)

    def test_zero_vector_rejected(self):
        """Cosine is undefined for zero vectors."""
        with pytest.raises(DomainError):
            scaled_cosine([0.0, 0.0], [1.0, 0.0], 0.15)

    def test_needs_a_positive(self):
        """At least one positive is required."""
        with pytest.raises(DomainError):
            nce_loss([1.0, 0.0], np.zeros((0, 2)), [[1.0, 0.0]], 1.5, 0.15)

    def test_gradient_flows(self):
        """The loss is differentiable in the anchor."""
        anchor = torch.tensor([1.0, 0.2], dtype=torch.float64, requires_grad=True)
        loss = nce_loss(anchor, [[0.3, 0.9]], [[0.9, 0.1]], 1.5, 0.15)
        loss.backward()
        assert torch.all(torch.isfinite(anchor.grad))


class TestMining:
    """Hard example selection and repeat factors."""

    def test_caps_and_order(self):
        """Hardest positives are least similar, hardest negatives most similar."""
        anchor = np.array([1.0, 0.0])
        positives = [_view([math.cos(a), math.sin(a)], 0, 1, v) for v, a in enumerate([0.1, 1.2, 0.5, 2.0])]
        negatives = [_view([math.cos(a), math.sin(a)], 0, 2 + v, 0) for v, a in enumerate([0.3, 2.5, 0.05])]
        hard_pos, hard_neg = mine_hard(anchor, positives, negatives, 2, 2)
        assert [p.view_id for p in hard_pos] == [3, 1]
        assert [n.object_id for n in hard_neg] == [4, 2]

    def test_fewer_candidates_than_cap(self):
        """Caps larger than the pool return everything."""
        anchor = np.array([1.0, 0.0])
        hard_pos, hard_neg = mine_hard(anchor, [_view([1.0, 0.0], 0, 1, 0)], [], 32, 128)
        assert len(hard_pos) == 1
        assert hard_neg == []

    def test_ties_break_on_key(self):
        """Equal similarities are ordered by (object_id, view_id)."""
        order = hardest_indices([0.5, 0.5, 0.5], [(3, 0), (1, 2), (1, 1)], 3, highest=True)
        assert order == [2, 1, 0]

    def test_repeat_factor(self):
        """max(1, sqrt(t / f))."""
        assert repeat_factor(0.5, 0.1) == 1.0
        assert repeat_factor(0.025, 0.1) == pytest.approx(2.0)
        with pytest.raises(DomainError):
            repeat_factor(0.0, 0.1)


def _linear_scan(entries, query, class_id):
    best = {}
    for e in entries:
        if e.class_id != class_id:
            continue
        sim = float(np.dot(e.values / np.linalg.norm(e.values), query / np.linalg.norm(query)))
        best[e.object_id] = max(best.get(e.object_id, -np.inf), sim)
    return min(best, key=lambda oid: (-best[oid], oid))


class TestIndex:
    """Exact per-class cosine retrieval."""

    def _entries(self, rng, count=500, dim=16, classes=3, views=5):
        entries = []
        for i in range(count):
            object_id, view_id = divmod(i, views)
            entries.append(_view(rng.normal(size=dim), object_id % classes, object_id, view_id))
        return entries

    def test_agrees_with_linear_scan(self):
        """1000 random queries over 500 entries match an exhaustive scan."""
        rng = np.random.default_rng(0)
        entries = self._entries(rng)
        index = index_build(entries)
        for _ in range(1000):
            query = rng.normal(size=16)
            class_id = int(rng.integers(0, 3))
            assert index_retrieve(index, query, class_id)[0] == _linear_scan(entries, query, class_id)

    def test_insertion_order_does_not_matter(self):
        """Shuffled entries give the same top-5 rankings."""
        rng = np.random.default_rng(6)
        entries = self._entries(rng, count=200)
        shuffled = [entries[i] for i in rng.permutation(len(entries))]
        forward, permuted = index_build(entries), index_build(shuffled)
        for _ in range(100):
            query = rng.normal(size=16)
            class_id = int(rng.integers(0, 3))
            assert index_retrieve(forward, query, class_id, 5) == index_retrieve(permuted, query, class_id, 5)

    def test_ties_prefer_lower_object_id(self):
        """Identical views of two objects: the lower id wins."""
        index = index_build([_view([1.0, 0.0], 0, 7, 0), _view([1.0, 0.0], 0, 3, 0)])
        assert index.retrieve(np.array([1.0, 0.0]), 0) == [3]

    def test_top_k_ranks_objects_once(self):
        """Top-k lists distinct objects by their best view."""
        index = index_build(
            [_view([1.0, 0.0], 0, 1, 0), _view([0.9, 0.1], 0, 1, 1), _view([0.0, 1.0], 0, 2, 0)]
        )
        assert index.retrieve(np.array([1.0, 0.0]), 0, k=3) == [1, 2]

    def test_unknown_class(self):
        """Querying a class with no entries fails."""
        index = index_build([_view([1.0, 0.0], 0, 1, 0)])
        with pytest.raises(UnknownClassError):
            index.retrieve(np.array([1.0, 0.0]), 5)

    def test_rejects_bad_entries(self):
        """Zero vectors, duplicates and region embeddings are rejected."""
        with pytest.raises(DomainError):
            EmbeddingIndex([_view([0.0, 0.0], 0, 1, 0)])
        with pytest.raises(DomainError):
            EmbeddingIndex([_view([1.0, 0.0], 0, 1, 0), _view([0.0, 1.0], 0, 1, 0)])
        with pytest.raises(DomainError):
            EmbeddingIndex([EmbeddingVector(np.ones(2), EmbeddingTag.IMAGE_REGION, 0, 1)])
        with pytest.raises(DomainError):
            EmbeddingIndex([])

    def test_query_dimension(self):
        """Query dimension must match."""
        index = index_build([_view([1.0, 0.0], 0, 1, 0)])
        with pytest.raises(DomainError):
            index.retrieve(np.ones(3), 0)


class TestExport:
    """Binary embedding export."""

    def test_round_trip_preserves_float32_values(self, tmp_path):
        """Exported vectors read back bit-identical at float32 precision."""
        rng = np.random.default_rng(2)
        vectors = [
            EmbeddingVector(rng.normal(size=8).astype(np.float32), EmbeddingTag.IMAGE_REGION, 1, 4),
            _view(rng.normal(size=8).astype(np.float32), 1, 4, 2),
        ]
        header = write_embeddings(tmp_path / "e.emb", vectors, dim=8)
        assert header["count"] == 2
        read_header, loaded = read_embeddings(tmp_path / "e.emb")
        assert read_header == header
        for original, copy in zip(vectors, loaded):
            np.testing.assert_array_equal(copy.values, original.values)
            assert copy.tag is original.tag
            assert copy.key == original.key

    def test_empty_export(self, tmp_path):
        """An empty export keeps its header and zero count."""
        header = write_embeddings(tmp_path / "empty.emb", [], dim=128)
        assert header["count"] == 0
        _, loaded = read_embeddings(tmp_path / "empty.emb")
        assert loaded == []

    def test_truncated_file(self, tmp_path):
        """Payload size must match the header."""
        path = tmp_path / "bad.emb"
        write_embeddings(path, [_view(np.ones(4), 0, 1, 0)], dim=4)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(DomainError):
            read_embeddings(path)
