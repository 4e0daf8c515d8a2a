"""Test configuration and fixtures."""

import math

import numpy as np
import pytest
import torch

from find_your_cad_model.data import DatasetSpec, box_mesh, generate_dataset
from find_your_cad_model.geometry import quat_from_axis_angle
from find_your_cad_model.learner import EncoderConfig, ShapePoseNet
from find_your_cad_model.models import CameraIntrinsics, HyperParams, Pose, TrainConfig

TINY_SPEC = DatasetSpec(
    num_classes=2,
    objects_per_class=4,
    unseen_objects_per_class=1,
    train_images=24,
    val_images=4,
    unseen_images=2,
    max_objects_per_image=2,
    image_size=64,
    focal_length=45.0,
    canonical_views=4,
    view_resolution=32,
    seed=3,
)


@pytest.fixture
def unit_cube():
    """Axis-aligned cube of edge 1 centered at the origin."""
    return box_mesh((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))


@pytest.fixture
def intrinsics():
    """64 x 64 pinhole camera with the principal point at the image center."""
    return CameraIntrinsics(fx=45.0, fy=45.0, cx=32.0, cy=32.0)


@pytest.fixture
def sample_pose():
    """A generic pose in front of the camera."""
    rotation = quat_from_axis_angle((0.3, -1.0, 0.4), 0.8)
    return Pose(rotation, np.array([0.4, -0.3, 6.0]), np.full(3, 1.05))


@pytest.fixture
def yaw_ring():
    """32 rotations evenly spaced around the vertical axis."""
    return [quat_from_axis_angle((0, 1, 0), 2 * math.pi * i / 32) for i in range(32)]


@pytest.fixture(scope="session")
def tiny_spec():
    return TINY_SPEC


@pytest.fixture(scope="session")
def tiny_dataset():
    """Two-class generated dataset shared by the slower tests (do not mutate)."""
    return generate_dataset(TINY_SPEC, progress_every=0)


@pytest.fixture
def tiny_hyper():
    """Hyperparameters scaled to the tiny dataset."""
    return HyperParams(rotation_bins=4, canonical_views=4, hard_positives=8, hard_negatives=16)


@pytest.fixture
def tiny_train_config(tiny_hyper):
    return TrainConfig.scaled(3, images_per_step=2, log_every=0, seed=5, hyper=tiny_hyper)


@pytest.fixture
def small_model():
    """Narrow float64 network for exact numeric checks."""
    config = EncoderConfig(num_classes=2, rotation_bins=4, embedding_dim=8, width=4)
    torch.manual_seed(11)
    return ShapePoseNet(config).double()


@pytest.fixture
def temp_output_dir(tmp_path):
    """Temporary output directory for testing."""
    output_dir = tmp_path / "output"
    output_dir.mkdir(exist_ok=True)
    return output_dir
