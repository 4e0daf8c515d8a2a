"""Tests for file I/O and logging helpers."""

import logging

import numpy as np
import pytest

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.utils import (
    ensure_directory,
    load_json,
    load_pgm,
    log_session_end,
    log_session_start,
    quantize_image,
    save_json,
    save_pgm,
    setup_logging,
)


class TestJson:
    """JSON save and load."""

    def test_round_trip(self, temp_output_dir):
        """Saved documents load back equal."""
        data = {"b": [1, 2.5], "a": "é"}
        assert save_json(data, temp_output_dir / "nested" / "doc.json", sort_keys=True)
        assert load_json(temp_output_dir / "nested" / "doc.json") == data

    def test_sorted_output(self, temp_output_dir):
        """sort_keys gives byte-stable output."""
        save_json({"b": 1, "a": 2}, temp_output_dir / "doc.json", sort_keys=True)
        text = (temp_output_dir / "doc.json").read_text()
        assert text.index('"a"') < text.index('"b"')

    def test_missing_and_invalid(self, temp_output_dir):
        """Failures return None instead of raising."""
        assert load_json(temp_output_dir / "missing.json") is None
        (temp_output_dir / "bad.json").write_text("{")
        assert load_json(temp_output_dir / "bad.json") is None

    def test_numpy_values(self, temp_output_dir):
        """numpy scalars and arrays are written as plain JSON numbers and lists."""
        data = {"ap": np.float64(0.75), "count": np.int64(3), "box": np.array([1.0, 2.0])}
        assert save_json(data, temp_output_dir / "np.json")
        assert load_json(temp_output_dir / "np.json") == {"ap": 0.75, "count": 3, "box": [1.0, 2.0]}
        assert not (temp_output_dir / "np.json.part").exists()

    def test_unserializable(self, temp_output_dir):
        """Objects json cannot encode make save_json return False."""
        assert save_json({"x": object()}, temp_output_dir / "x.json") is False


class TestPgm:
    """Binary grayscale images."""

    def test_round_trip_on_grid(self, temp_output_dir):
        """Quantized images survive exactly."""
        image = quantize_image(np.random.default_rng(0).random((5, 7)))
        save_pgm(temp_output_dir / "img.pgm", image)
        np.testing.assert_array_equal(load_pgm(temp_output_dir / "img.pgm"), image)

    def test_quantize_clips(self):
        """Values outside [0, 1] are clipped."""
        np.testing.assert_array_equal(quantize_image(np.array([-1.0, 2.0])), [0.0, 1.0])

    def test_header_with_comment(self, temp_output_dir):
        """Comment lines in the header are skipped."""
        path = temp_output_dir / "c.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 255]))
        np.testing.assert_array_equal(load_pgm(path), [[0.0, 1.0]])

    def test_rejects_bad_input(self, temp_output_dir):
        """Non-2-D or non-finite images and foreign files are errors."""
        with pytest.raises(DomainError):
            save_pgm(temp_output_dir / "x.pgm", np.zeros(3))
        with pytest.raises(DomainError):
            save_pgm(temp_output_dir / "x.pgm", np.full((2, 2), np.nan))
        (temp_output_dir / "p6.pgm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(DomainError):
            load_pgm(temp_output_dir / "p6.pgm")

    def test_truncated(self, temp_output_dir):
        """Short pixel data is rejected."""
        path = temp_output_dir / "t.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
        with pytest.raises(DomainError):
            load_pgm(path)


class TestLogging:
    """Rotating log setup and session banners."""

    def test_setup_creates_log_file(self, temp_output_dir):
        """The log directory and file are created and receive records."""
        log_path = setup_logging(temp_output_dir / "logs", console_output=False)
        log_session_start({"command": "test"})
        log_session_end({"status": "ok"})
        for handler in logging.getLogger().handlers:
            handler.flush()
        text = log_path.read_text(encoding="utf-8")
        assert "SESSION STARTED" in text
        assert "command: test" in text
        assert "SESSION ENDED" in text
        assert "Elapsed: " in text

    def test_setup_replaces_handlers(self, temp_output_dir):
        """Repeated setup does not stack handlers."""
        setup_logging(temp_output_dir / "logs", console_output=True)
        setup_logging(temp_output_dir / "logs", console_output=True)
        assert len(logging.getLogger().handlers) == 2

    def test_ensure_directory(self, temp_output_dir):
        """Nested directories are created."""
        target = temp_output_dir / "a" / "b"
        assert ensure_directory(target)
        assert target.is_dir()
