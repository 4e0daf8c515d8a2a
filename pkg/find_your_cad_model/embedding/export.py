"""Binary embedding dump: one JSON header line, then little-endian float32 rows."""

import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from find_your_cad_model.exceptions import DomainError
from find_your_cad_model.models import EmbeddingTag, EmbeddingVector

logger = logging.getLogger(__name__)

EXPORT_VERSION = 1
EXPORT_DTYPE = "<f4"


def write_embeddings(
    path: Union[str, Path], vectors: Sequence[EmbeddingVector], dim: int = 128
) -> dict:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if vectors:
        dim = vectors[0].values.shape[0]
        if any(v.values.shape[0] != dim for v in vectors):
            raise DomainError("all exported vectors must share one dimension")
    header = {
        "version": EXPORT_VERSION,
        "dim": int(dim),
        "count": len(vectors),
        "dtype": EXPORT_DTYPE,
        "tags": [v.tag.value for v in vectors],
        "class_ids": [int(v.class_id) for v in vectors],
        "object_ids": [int(v.object_id) for v in vectors],
        "view_ids": [int(v.view_id) for v in vectors],
    }
    data = np.array([v.values for v in vectors], dtype=EXPORT_DTYPE).reshape(-1, dim)
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        f.write(data.tobytes())
    logger.info(f"Wrote {len(vectors)} embeddings ({dim}-d) to {path}")
    return header


def read_embeddings(path: Union[str, Path]) -> Tuple[dict, List[EmbeddingVector]]:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        payload = f.read()
    if header.get("version") != EXPORT_VERSION:
        raise DomainError(f"unsupported embedding export version {header.get('version')}")
    count, dim = header["count"], header["dim"]
    data = np.frombuffer(payload, dtype=header.get("dtype", EXPORT_DTYPE))
    if data.size != count * dim:
        raise DomainError(f"{path}: expected {count * dim} floats, found {data.size}")
    data = data.reshape(count, dim)
    vectors = [
        EmbeddingVector(
            values=data[i],
            tag=EmbeddingTag(header["tags"][i]),
            class_id=header["class_ids"][i],
            object_id=header["object_ids"][i],
            view_id=header["view_ids"][i],
        )
        for i in range(count)
    ]
    return header, vectors
