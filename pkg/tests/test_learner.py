"""Tests for the encoders, batches, losses, checkpoints and the training loop."""

import json
import math
import struct
from dataclasses import replace

import numpy as np
import pytest
import torch

from find_your_cad_model.exceptions import CheckpointError, DomainError
from find_your_cad_model.learner import (
    CHECKPOINT_VERSION,
    TRACE_COLUMNS,
    BatchBuilder,
    EncoderConfig,
    RegionExample,
    ShapePoseNet,
    TrainingBatch,
    ViewExample,
    backward,
    build_model,
    encode_view,
    image_weights,
    load_checkpoint,
    lr_at,
    region_outputs,
    save_checkpoint,
    total_loss,
    train,
    view_embeddings,
    write_trace,
)
from find_your_cad_model.models import TrainConfig
from find_your_cad_model.pose import build_bins


@pytest.fixture
def tiny_bins(tiny_dataset):
    return build_bins(tiny_dataset.train_rotations(), 4, seed=0)


@pytest.fixture
def fixed_batch(tiny_dataset, tiny_bins, tiny_train_config):
    builder = BatchBuilder(tiny_dataset, tiny_bins, tiny_train_config)
    return builder.sample(np.random.default_rng(21))


def _conv2d(x, weight, bias, stride, padding):
    """Direct loops over output positions, channels and kernel taps."""
    c_in, h, w = x.shape
    padded = np.zeros((c_in, h + 2 * padding, w + 2 * padding))
    padded[:, padding : padding + h, padding : padding + w] = x
    c_out, _, kh, kw = weight.shape
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, out_h, out_w))
    for o in range(c_out):
        for i in range(out_h):
            for j in range(out_w):
                total = bias[o]
                for c in range(c_in):
                    for a in range(kh):
                        for b in range(kw):
                            total += weight[o, c, a, b] * padded[c, i * stride + a, j * stride + b]
                out[o, i, j] = total
    return out


def _huber(x, delta):
    x = np.abs(x)
    return np.where(x < delta, 0.5 * x**2, delta * (x - 0.5 * delta))


class TestEncoders:
    """Forward passes of both streams."""

    def test_tower_matches_direct_convolution(self, small_model):
        """The region tower equals straight-line convolutions, ReLU and pooling."""
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 4, 4))
        tower = small_model.region.tower
        params = {k: v.detach().numpy() for k, v in tower.state_dict().items()}

        h = (x - params["norm.mean"][0]) / params["norm.std"][0]
        h = np.maximum(_conv2d(h, params["conv1.weight"], params["conv1.bias"], 1, 1), 0)
        h = np.maximum(_conv2d(h, params["conv2.weight"], params["conv2.bias"], 2, 1), 0)
        h = np.maximum(_conv2d(h, params["conv3.weight"], params["conv3.bias"], 2, 1), 0)
        expected = h.mean(axis=(1, 2))

        with torch.no_grad():
            actual = tower(torch.as_tensor(x[None], dtype=torch.float64))[0].numpy()
        np.testing.assert_allclose(actual, expected, atol=1e-12)

    def test_output_shapes(self, small_model):
        """Embedding plus per-class pose heads."""
        outputs = region_outputs(small_model, np.zeros((2, 3, 32, 32)))
        assert outputs.embedding.shape == (2, 8)
        assert outputs.pose_logits.shape == (2, 8)
        assert outputs.delta.shape == (2, 8)
        assert outputs.center.shape == (2, 4)

    def test_encode_view_matches_batch(self, small_model):
        """Single-view encoding equals the batched embedding."""
        features = np.random.default_rng(1).random((2, 3, 32, 32))
        batched = view_embeddings(small_model, features)
        single = encode_view(small_model, features[1], class_id=0, object_id=3, view_id=1)
        np.testing.assert_allclose(single.values, batched[1], atol=1e-12)
        assert single.key == (3, 1)

    def test_rejects_non_finite_input(self, small_model):
        """NaN features never reach the network."""
        features = np.zeros((3, 32, 32))
        features[0, 0, 0] = np.nan
        with pytest.raises(DomainError):
            region_outputs(small_model, features)

    def test_config_round_trip(self):
        """Encoder configs survive their dict form."""
        config = EncoderConfig(num_classes=3, rotation_bins=5, embedding_dim=6, width=7)
        assert EncoderConfig.from_dict(config.to_dict()) == config


class TestLoss:
    """Composition and gradients of the combined loss."""

    def test_single_region_matches_hand_composition(self, small_model, tiny_hyper):
        """One region, one positive and one negative view."""
        rng = np.random.default_rng(2)
        region = RegionExample(
            features=rng.random((3, 32, 32)),
            class_id=1,
            object_id=5,
            bin_index=2,
            delta=np.array([0.9, 0.1, -0.2, 0.3]),
            regress_mask=True,
            center_delta=np.array([0.1, -0.2]),
        )
        views = [
            ViewExample(rng.random((3, 32, 32)), 1, 5, 0),
            ViewExample(rng.random((3, 32, 32)), 1, 6, 0),
        ]
        batch = TrainingBatch(regions=[region], views=views)
        loss = total_loss(small_model, batch, tiny_hyper)

        out = region_outputs(small_model, region.features)
        emb = view_embeddings(small_model, np.stack([v.features for v in views]))
        anchor = out.embedding[0].numpy()

        def d(v):
            return float(np.dot(anchor, v) / (np.linalg.norm(anchor) * np.linalg.norm(v)) / tiny_hyper.temperature)

        embed = -math.log(math.exp(d(emb[0])) / (math.exp(d(emb[0])) + tiny_hyper.negative_weight * math.exp(d(emb[1]))))
        logits = out.pose_logits[0].numpy().reshape(2, 4)[1]
        pose_class = -(logits[2] - math.log(np.exp(logits).sum()))
        delta = out.delta[0].numpy().reshape(2, 4)[1]
        center = out.center[0].numpy().reshape(2, 2)[1]
        pose_reg = _huber(delta - region.delta, tiny_hyper.huber_delta).sum()
        center_loss = _huber(center - region.center_delta, tiny_hyper.huber_delta).sum()
        expected = 0.5 * embed + 0.25 * pose_class + 5.0 * (pose_reg + center_loss)

        assert float(loss.terms["embed"]) == pytest.approx(embed, abs=1e-10)
        assert float(loss.terms["pose_class"]) == pytest.approx(pose_class, abs=1e-10)
        assert float(loss.total) == pytest.approx(expected, abs=1e-10)

    def test_regression_gate_drops_delta_term(self, small_model, tiny_hyper):
        """Regions outside the gate contribute no rotation-delta loss."""
        region = RegionExample(
            np.ones((3, 32, 32)), 0, 1, 0, np.array([0.0, 1.0, 0.0, 0.0]), False, np.zeros(2)
        )
        loss = total_loss(small_model, TrainingBatch(regions=[region]), tiny_hyper)
        assert float(loss.terms["pose_reg"]) == 0.0
        assert float(loss.terms["embed"]) == 0.0

    def test_empty_batch(self, small_model, tiny_hyper):
        """A batch without regions is rejected."""
        with pytest.raises(DomainError):
            total_loss(small_model, TrainingBatch(), tiny_hyper)

    def test_mining_respects_caps(self, small_model, fixed_batch, tiny_hyper):
        """No region uses more than P_h positives or N_h negatives."""
        hyper = replace(tiny_hyper, hard_positives=1, hard_negatives=2)
        loss = total_loss(small_model, fixed_batch, hyper)
        assert len(loss.mined) == len(fixed_batch)
        assert all(p == 1 and n <= 2 for p, n in loss.mined)

    @pytest.mark.parametrize("draw", range(20))
    def test_gradient_matches_finite_differences(self, tiny_dataset, tiny_bins, tiny_train_config, tiny_hyper, draw):
        """Central differences agree with the reverse-mode gradient on sampled entries."""
        torch.manual_seed(draw)
        model = ShapePoseNet(EncoderConfig(num_classes=2, rotation_bins=4, embedding_dim=8, width=4)).double()
        batch = BatchBuilder(tiny_dataset, tiny_bins, tiny_train_config).sample(np.random.default_rng(draw))
        grads = backward(model, batch, tiny_hyper)
        rng = np.random.default_rng(100 + draw)
        h = 1e-6
        for name, param in model.named_parameters():
            flat = param.data.view(-1)
            index = int(rng.integers(flat.numel()))
            original = float(flat[index])
            with torch.no_grad():
                flat[index] = original + h
                plus = float(total_loss(model, batch, tiny_hyper).total)
                flat[index] = original - h
                minus = float(total_loss(model, batch, tiny_hyper).total)
                flat[index] = original
            numeric = (plus - minus) / (2 * h)
            analytic = float(grads[name].view(-1)[index])
            assert abs(numeric - analytic) <= 1e-4 * abs(analytic) + 1e-6, name

    def test_frozen_views_receive_no_gradient(self, small_model, fixed_batch, tiny_hyper):
        """Freezing the view stream zeroes its gradients."""
        grads = backward(small_model, fixed_batch, tiny_hyper, freeze_views=True)
        assert all(float(g.abs().sum()) == 0.0 for n, g in grads.items() if n.startswith("view."))


class TestBatches:
    """Training batch assembly."""

    def test_batch_contents(self, fixed_batch, tiny_train_config):
        """Every region has positives among the views; view keys are unique."""
        assert len(fixed_batch) >= tiny_train_config.images_per_step
        keys = [v.key for v in fixed_batch.views]
        assert len(keys) == len(set(keys))
        for region in fixed_batch.regions:
            assert any(v.object_id == region.object_id for v in fixed_batch.views)
            assert region.features.shape == (3, 32, 32)
            assert 0 <= region.bin_index < 4

    def test_image_weights(self, tiny_dataset):
        """Each image takes the largest repeat factor among its classes."""
        samples = tiny_dataset.samples("train")
        weights = image_weights(samples, 1.0)
        freq = {}
        for s in samples:
            for c in {a.class_id for a in s.annotations}:
                freq[c] = freq.get(c, 0) + 1
        for sample, weight in zip(samples, weights):
            classes = {a.class_id for a in sample.annotations}
            expected = max((max(1.0, math.sqrt(len(samples) / freq[c])) for c in classes), default=0.0)
            assert weight == pytest.approx(expected)


class TestCheckpoint:
    """Binary checkpoint persistence."""

    def test_round_trip_is_exact(self, tmp_path):
        """Float32 weights and metadata reload unchanged."""
        torch.manual_seed(4)
        model = ShapePoseNet(EncoderConfig(num_classes=2, rotation_bins=3, embedding_dim=5, width=4))
        save_checkpoint(tmp_path / "m.ckpt", model, {"steps": 7})
        loaded, meta = load_checkpoint(tmp_path / "m.ckpt")
        assert meta == {"steps": 7}
        assert loaded.config == model.config
        for name, tensor in model.state_dict().items():
            assert torch.equal(loaded.state_dict()[name], tensor)

    def test_rejects_foreign_file(self, tmp_path):
        """Files without the magic bytes are not checkpoints."""
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"NOPE" + bytes(8))
        with pytest.raises(DomainError):
            load_checkpoint(path)

    def test_rejects_trailing_bytes(self, tmp_path):
        """Extra payload after the tensors is an error."""
        model = ShapePoseNet(EncoderConfig(num_classes=2, rotation_bins=3, embedding_dim=5, width=4))
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
        with pytest.raises(DomainError):
            load_checkpoint(path)

    @staticmethod
    def _write_raw(path, header_bytes):
        path.write_bytes(b"FYCM" + struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)) + header_bytes)
        return path

    def test_unparsable_header(self, tmp_path):
        """A header that is not JSON is a checkpoint error, not a decode traceback."""
        path = self._write_raw(tmp_path / "m.ckpt", b"{\"model\": ")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_header_missing_fields(self, tmp_path):
        """Valid JSON without the model and tensor entries is a checkpoint error."""
        path = self._write_raw(tmp_path / "m.ckpt", json.dumps({"version": 1}).encode("utf-8"))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_file(self, tmp_path):
        """A file cut inside the header is rejected."""
        model = ShapePoseNet(EncoderConfig(num_classes=2, rotation_bins=3, embedding_dim=5, width=4))
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, model)
        path.write_bytes(path.read_bytes()[:20])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestTraining:
    """Learning-rate schedule and the training loop."""

    def test_lr_schedule(self):
        """Decay by lr_decay at each milestone."""
        config = TrainConfig()
        assert lr_at(0, config) == pytest.approx(0.08)
        assert lr_at(1999, config) == pytest.approx(0.08)
        assert lr_at(2000, config) == pytest.approx(0.008)
        assert lr_at(2500, config) == pytest.approx(0.0008)

    def test_scaled_milestones(self):
        """Scaled configs place milestones at 2/3 and 5/6 of the run."""
        assert TrainConfig.scaled(600).milestones == (400, 500)

    def test_milestones_past_end(self):
        """Milestones beyond the last step are rejected."""
        with pytest.raises(DomainError):
            TrainConfig(steps=10, milestones=(5, 10))

    def test_deterministic(self, tiny_dataset, tiny_bins, tiny_train_config):
        """Two runs with the same seed produce the same trace and weights."""
        first = train(tiny_train_config, tiny_dataset, tiny_bins)
        second = train(tiny_train_config, tiny_dataset, tiny_bins)
        assert first.trace == second.trace
        for name, tensor in first.model.state_dict().items():
            assert torch.equal(second.model.state_dict()[name], tensor)

    def test_trace_follows_schedule(self, tiny_dataset, tiny_bins, tiny_train_config):
        """One finite trace row per step with the scheduled learning rate."""
        result = train(tiny_train_config, tiny_dataset, tiny_bins)
        assert [row["step"] for row in result.trace] == [0, 1, 2]
        for row in result.trace:
            assert row["lr"] == pytest.approx(lr_at(row["step"], tiny_train_config))
            assert all(math.isfinite(row[c]) for c in TRACE_COLUMNS)

    def test_zero_learning_rate_keeps_weights(self, tiny_dataset, tiny_bins, tiny_train_config, small_model):
        """With lr 0 parameters never move."""
        config = replace(tiny_train_config, hyper=replace(tiny_train_config.hyper, base_lr=0.0))
        before = {k: v.clone() for k, v in small_model.state_dict().items()}
        train(config, tiny_dataset, tiny_bins, model=small_model)
        for name, tensor in small_model.state_dict().items():
            assert torch.equal(before[name], tensor)

    def test_zero_steps_returns_initialization(self, tiny_dataset, tiny_bins, tiny_hyper):
        """steps=0 returns the seeded initial network."""
        config = TrainConfig.scaled(0, seed=5, hyper=tiny_hyper)
        result = train(config, tiny_dataset, tiny_bins)
        fresh = build_model(len(tiny_dataset.classes), config)
        assert result.trace == []
        for name, tensor in fresh.state_dict().items():
            assert torch.equal(result.model.state_dict()[name], tensor)

    def test_write_trace(self, tmp_path):
        """CSV header lists the trace columns."""
        row = {c: 0.0 for c in TRACE_COLUMNS}
        write_trace(tmp_path / "trace.csv", [row])
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert lines[0] == ",".join(TRACE_COLUMNS)
        assert len(lines) == 2
