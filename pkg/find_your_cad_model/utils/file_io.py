"""JSON documents (dataset headers, bins, reports) and binary PGM images."""

import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from find_your_cad_model.exceptions import DomainError

logger = logging.getLogger(__name__)

PGM_MAXVAL = 255
_PGM_HEADER = re.compile(rb"\AP5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s")


def _numpy_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def save_json(
    data: Any, file_path: Union[str, Path], indent: int = 2, sort_keys: bool = False
) -> bool:
    """
    Write ``data`` as JSON, replacing any existing file only once the dump succeeded.

    numpy scalars and arrays are converted to plain numbers and lists.

    Returns:
        True on success, False (after logging the error) otherwise
    """
    file_path = Path(file_path)
    partial = file_path.with_name(file_path.name + ".part")
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        text = json.dumps(
            data,
            ensure_ascii=False,
            indent=indent,
            sort_keys=sort_keys,
            default=_numpy_default,
        )
        partial.write_text(text + "\n", encoding="utf-8")
        os.replace(partial, file_path)
    except (TypeError, ValueError, OSError) as e:
        logger.error(f"Failed to save JSON to {file_path}: {e}")
        if partial.exists():
            partial.unlink()
        return False
    logger.debug(f"Saved JSON to: {file_path}")
    return True


def load_json(file_path: Union[str, Path]) -> Union[Dict, List, None]:
    """Parsed document, or None when the file is missing or not valid JSON."""
    file_path = Path(file_path)
    if not file_path.is_file():
        logger.error(f"JSON file not found: {file_path}")
        return None
    try:
        return json.loads(file_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError, OSError) as e:
        logger.error(f"Invalid JSON in {file_path}: {e}")
        return None


def ensure_directory(directory: Union[str, Path]) -> bool:
    """Create ``directory`` and its parents; False (logged) when that fails."""
    try:
        Path(directory).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error(f"Failed to create directory {directory}: {e}")
        return False
    return True


def quantize_image(image: np.ndarray) -> np.ndarray:
    """Snap intensities in [0, 1] onto the k/255 grid a PGM file can hold."""
    return np.round(np.clip(image, 0.0, 1.0) * PGM_MAXVAL) / PGM_MAXVAL


def save_pgm(file_path: Union[str, Path], image: np.ndarray) -> None:
    """Write a [0, 1] grayscale image as binary P5 with maxval 255."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DomainError(f"PGM images are 2-D, got shape {image.shape}")
    if not np.all(np.isfinite(image)):
        raise DomainError("PGM image contains non-finite values")
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    height, width = image.shape
    pixels = np.round(np.clip(image, 0.0, 1.0) * PGM_MAXVAL).astype(np.uint8)
    with open(file_path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii"))
        f.write(pixels.tobytes())


def load_pgm(file_path: Union[str, Path]) -> np.ndarray:
    """Read a binary P5 image into float64 values k/maxval."""
    raw = Path(file_path).read_bytes()
    match = _PGM_HEADER.match(raw)
    if match is None:
        raise DomainError(f"{file_path} is not a binary PGM (P5) file")
    width, height, maxval = (int(g) for g in match.groups())
    if not 0 < maxval < 256:
        raise DomainError(f"{file_path}: unsupported maxval {maxval}")
    body = raw[match.end():]
    if len(body) < width * height:
        raise DomainError(f"{file_path}: truncated pixel data")
    pixels = np.frombuffer(body[: width * height], dtype=np.uint8)
    return pixels.reshape(height, width).astype(np.float64) / maxval
