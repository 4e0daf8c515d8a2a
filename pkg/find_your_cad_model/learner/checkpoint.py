"""Versioned binary checkpoints: magic, header JSON, then float32 tensors.

    b"FYCM" | uint32 version | uint32 header length | header (UTF-8 JSON) | tensors

All integers and tensor data are little-endian. The header lists every tensor's
name and shape in storage order.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
import torch

from find_your_cad_model.exceptions import CheckpointError

from .encoders import EncoderConfig, ShapePoseNet

logger = logging.getLogger(__name__)

MAGIC = b"FYCM"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Union[str, Path], model: ShapePoseNet, meta: Dict[str, Any] = None
) -> None:
    state = model.state_dict()
    tensors = [(name, state[name].detach().cpu().numpy().astype("<f4")) for name in sorted(state)]
    header = {
        "version": CHECKPOINT_VERSION,
        "model": model.config.to_dict(),
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in tensors],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        f.write(blob)
        for _, array in tensors:
            f.write(array.tobytes())
    logger.info(f"💾 Saved checkpoint: {path}")


def _read_header(path: Union[str, Path], raw: bytes) -> Tuple[Dict[str, Any], int]:
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint")
    version, length = struct.unpack("<II", raw[4:12])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if 12 + length > len(raw):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[12 : 12 + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable header: {e}") from e
    if not isinstance(header, dict):
        raise CheckpointError(f"{path}: header is not a JSON object")
    return header, 12 + length


def load_checkpoint(path: Union[str, Path]) -> Tuple[ShapePoseNet, Dict[str, Any]]:
    raw = Path(path).read_bytes()
    header, offset = _read_header(path, raw)
    state: Dict[str, torch.Tensor] = {}
    try:
        model = ShapePoseNet(EncoderConfig.from_dict(header["model"]))
        for spec in header["tensors"]:
            count = int(np.prod(spec["shape"], dtype=np.int64))
            array = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(spec["shape"])
            state[spec["name"]] = torch.from_numpy(array.astype(np.float32))
            offset += 4 * count
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: malformed header: {type(e).__name__}: {e}") from e
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    try:
        model.load_state_dict(state)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: tensors do not match the model: {e}") from e
    return model, header.get("meta", {})
