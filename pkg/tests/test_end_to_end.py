"""Desk-scale training and evaluation run.

Takes several minutes on a CPU, so it only runs with FYCM_RUN_SLOW=1.
"""

import os

import pytest

from find_your_cad_model.data import DatasetSpec, generate_dataset
from find_your_cad_model.evaluation import evaluate, parse_ablation
from find_your_cad_model.learner import train
from find_your_cad_model.models import TrainConfig

pytestmark = [
    pytest.mark.slow,
    pytest.mark.integration,
    pytest.mark.skipif(os.environ.get("FYCM_RUN_SLOW") != "1", reason="set FYCM_RUN_SLOW=1 to run"),
]

CALIBRATION_SEED = 7
MIN_RETRIEVAL_ACCURACY = 0.85
MAX_MEDIAN_ROTATION_ERROR_DEG = 15.0
MIN_MESH_AP50 = 0.7
EVAL_POINTS = 2000


@pytest.fixture(scope="module")
def trained():
    dataset = generate_dataset(DatasetSpec(seed=CALIBRATION_SEED), progress_every=0)
    config = TrainConfig.scaled(3000, log_every=0, seed=CALIBRATION_SEED)
    result = train(config, dataset)
    return dataset, result, config.hyper


class TestDeskScaleRun:
    """Five classes, eight objects each, trained from scratch."""

    def test_seen_object_targets(self, trained):
        """Retrieval, rotation and mesh AP targets on the seen-object split."""
        dataset, result, hyper = trained
        report, _ = evaluate(result.model, dataset, result.bins, "val", hyper, n_points=EVAL_POINTS)
        assert report.retrieval_accuracy >= MIN_RETRIEVAL_ACCURACY
        assert report.median_rotation_error_deg <= MAX_MEDIAN_ROTATION_ERROR_DEG
        assert report.ap_mesh.ap50 >= MIN_MESH_AP50

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_full_catalogue_helps_unseen_objects(self, trained, seed):
        """Adding the held-out CAD models to the index never lowers mesh AP on them."""
        dataset, result, hyper = trained
        restricted, _ = evaluate(
            result.model, dataset, result.bins, "val_unseen", hyper, seed=seed, n_points=EVAL_POINTS
        )
        full, _ = evaluate(
            result.model,
            dataset,
            result.bins,
            "val_unseen",
            hyper,
            include_unseen=True,
            seed=seed,
            n_points=EVAL_POINTS,
        )
        assert full.ap_mesh.ap >= restricted.ap_mesh.ap

    @pytest.mark.parametrize("component", ["shape", "rotation", "translation"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_ground_truth_substitution_helps(self, trained, component, seed):
        """Substituting one ground-truth component never lowers mesh AP."""
        dataset, result, hyper = trained
        base, _ = evaluate(result.model, dataset, result.bins, "val", hyper, seed=seed, n_points=EVAL_POINTS)
        ablated, _ = evaluate(
            result.model,
            dataset,
            result.bins,
            "val",
            hyper,
            parse_ablation(component),
            seed=seed,
            n_points=EVAL_POINTS,
        )
        assert ablated.ap_mesh.ap >= base.ap_mesh.ap
