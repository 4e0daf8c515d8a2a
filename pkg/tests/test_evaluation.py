"""Tests for per-region prediction and the evaluation report."""

import numpy as np
import pytest

from find_your_cad_model.evaluation import (
    ABLATIONS,
    box_mask,
    build_view_index,
    evaluate,
    parse_ablation,
    predict_sample,
    view_vectors,
)
from find_your_cad_model.exceptions import ConfigError
from find_your_cad_model.metrics import validate_report
from find_your_cad_model.pose import build_bins


@pytest.fixture
def tiny_bins(tiny_dataset):
    return build_bins(tiny_dataset.train_rotations(), 4, seed=0)


class TestAblation:
    """Ablation flag parsing."""

    def test_none_and_all(self):
        """'none' is empty; 'all' enables every component."""
        assert parse_ablation("none") == frozenset()
        assert parse_ablation(None) == frozenset()
        assert parse_ablation("all") == frozenset(ABLATIONS)

    def test_comma_list(self):
        """Whitespace around items is ignored."""
        assert parse_ablation("shape, rotation") == frozenset({"shape", "rotation"})

    def test_unknown_component(self):
        """Unknown names are configuration errors."""
        with pytest.raises(ConfigError):
            parse_ablation("shape,scale")


class TestBoxMask:
    """Pixels covered by a box."""

    def test_pixel_centers(self):
        """Only pixels whose centers lie inside count."""
        mask = box_mask((4, 4), (1.0, 1.0, 3.0, 3.0))
        expected = np.zeros((4, 4), dtype=bool)
        expected[1:3, 1:3] = True
        np.testing.assert_array_equal(mask, expected)


class TestPrediction:
    """Retrieval and pose decoding per region."""

    def test_view_vectors_cover_seen_objects(self, small_model, tiny_dataset, tiny_spec):
        """One embedding per canonical view of every seen CAD model."""
        vectors = view_vectors(small_model, tiny_dataset)
        seen = len(tiny_dataset.cad) - len(tiny_dataset.unseen_objects)
        assert len(vectors) == seen * tiny_spec.canonical_views
        with_unseen = view_vectors(small_model, tiny_dataset, include_unseen=True)
        assert len(with_unseen) == len(tiny_dataset.cad) * tiny_spec.canonical_views

    def test_retrieval_stays_in_class(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Retrieved CAD models belong to the region's class."""
        index = build_view_index(small_model, tiny_dataset)
        for sample in tiny_dataset.samples("val"):
            for p in predict_sample(small_model, index, tiny_bins, sample, tiny_hyper, seed=1):
                assert tiny_dataset.cad[p.object_id].class_id == p.class_id
                assert -1.0 - 1e-9 <= p.similarity <= 1.0 + 1e-9
                assert p.translation[2] == pytest.approx(p.gt.pose.translation[2])

    def test_deterministic_per_sample(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Same sample and seed give the same jittered box and pose."""
        index = build_view_index(small_model, tiny_dataset)
        sample = next(s for s in tiny_dataset.samples("val") if s.annotations)
        a = predict_sample(small_model, index, tiny_bins, sample, tiny_hyper, seed=2)
        b = predict_sample(small_model, index, tiny_bins, sample, tiny_hyper, seed=2)
        assert [p.box for p in a] == [p.box for p in b]
        assert [p.rotation for p in a] == [p.rotation for p in b]

    def test_boxes_ablation_uses_ground_truth_box(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """With ground-truth boxes the predicted box is the annotation's."""
        index = build_view_index(small_model, tiny_dataset)
        sample = next(s for s in tiny_dataset.samples("val") if s.annotations)
        for p in predict_sample(small_model, index, tiny_bins, sample, tiny_hyper, frozenset({"boxes"})):
            assert p.box == p.gt.box


class TestEvaluate:
    """Full split evaluation."""

    def test_all_ground_truth_is_perfect(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Substituting every component scores 1 whatever the network."""
        report, predictions = evaluate(
            small_model, tiny_dataset, tiny_bins, "val", tiny_hyper, parse_ablation("all"), n_points=300
        )
        assert report.num_regions == len(predictions) > 0
        assert report.ap_mesh.ap == pytest.approx(1.0)
        assert report.ap_box.ap == pytest.approx(1.0)
        assert report.ap_mask.ap == pytest.approx(1.0)
        assert report.retrieval_accuracy == 1.0
        assert report.median_rotation_error_deg == pytest.approx(0.0, abs=1e-5)
        assert report.shape["chamfer"] == pytest.approx(0.0)

    def test_report_is_valid(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """The report document passes the schema check."""
        report, _ = evaluate(small_model, tiny_dataset, tiny_bins, "val", tiny_hyper, n_points=300)
        doc = report.as_dict()
        validate_report(doc)
        assert doc["ablation"] == []
        assert doc["class_names"] == tiny_dataset.classes

    def test_jobs_do_not_change_results(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Parallel prediction gives the same report as serial."""
        serial, _ = evaluate(small_model, tiny_dataset, tiny_bins, "val", tiny_hyper, n_points=300, jobs=1)
        parallel, _ = evaluate(small_model, tiny_dataset, tiny_bins, "val", tiny_hyper, n_points=300, jobs=2)
        assert serial.as_dict() == parallel.as_dict()

    def test_unseen_split_with_full_catalogue(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Held-out CAD models join the candidates only when requested."""
        seen_only = build_view_index(small_model, tiny_dataset)
        full = build_view_index(small_model, tiny_dataset, include_unseen=True)
        unseen = set(tiny_dataset.unseen_objects)
        assert not unseen & {e.object_id for e in seen_only.entries}
        assert unseen <= {e.object_id for e in full.entries}
        report, _ = evaluate(
            small_model, tiny_dataset, tiny_bins, "val_unseen", tiny_hyper, include_unseen=True, n_points=300
        )
        assert report.split == "val_unseen"
        assert 0.0 <= report.retrieval_accuracy <= 1.0

    def test_missing_split(self, small_model, tiny_dataset, tiny_bins, tiny_hyper):
        """Unknown splits are configuration errors."""
        with pytest.raises(ConfigError):
            evaluate(small_model, tiny_dataset, tiny_bins, "test", tiny_hyper)
