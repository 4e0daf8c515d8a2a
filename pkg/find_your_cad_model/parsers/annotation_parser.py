import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from find_your_cad_model.exceptions import AnnotationParseError
from find_your_cad_model.models import Box, Quaternion

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = (
    "image",
    "class",
    "box",
    "mask",
    "model_id",
    "rotation",
    "translation",
    "focal_length",
)
OPTIONAL_FIELDS = ("split", "scale", "principal_point", "image_size")


@dataclass
class AnnotationRecord:
    """One annotated object: a line of the JSON-lines annotation file."""

    image: str
    class_id: int
    box: Box
    mask: str
    model_id: int
    rotation: Quaternion
    translation: np.ndarray
    focal_length: Tuple[float, float]
    split: Optional[str] = None
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    principal_point: Optional[Tuple[float, float]] = None
    image_size: Optional[Tuple[int, int]] = None
    line_number: int = 0

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "image": self.image,
            "class": self.class_id,
            "box": [float(v) for v in self.box],
            "mask": self.mask,
            "model_id": self.model_id,
            "rotation": self.rotation.as_list(),
            "translation": [float(v) for v in self.translation],
            "focal_length": [float(v) for v in self.focal_length],
            "scale": [float(v) for v in self.scale],
        }
        if self.split is not None:
            doc["split"] = self.split
        if self.principal_point is not None:
            doc["principal_point"] = [float(v) for v in self.principal_point]
        if self.image_size is not None:
            doc["image_size"] = [int(v) for v in self.image_size]
        return doc


class AnnotationParser:
    """Validating reader for JSON-lines object annotations."""

    def __init__(self):
        self.stats = {"processed": 0, "successful": 0, "failed": 0}
        self.failed_lines: List[str] = []

    def reset(self) -> None:
        self.stats = {"processed": 0, "successful": 0, "failed": 0}
        self.failed_lines = []

    def parse_line(self, line: str, line_number: int) -> AnnotationRecord:
        """Parse one record; raises AnnotationParseError naming the field and line."""
        self.stats["processed"] += 1
        try:
            record = self._parse(line, line_number)
        except AnnotationParseError as e:
            self.stats["failed"] += 1
            self.failed_lines.append(f"{line_number}: {e.field}: {e.reason}")
            raise
        self.stats["successful"] += 1
        return record

    def parse_text(self, text: str) -> List[AnnotationRecord]:
        records = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            records.append(self.parse_line(line, number))
        return records

    def parse_file(self, path: Union[str, Path]) -> List[AnnotationRecord]:
        path = Path(path)
        logger.info(f"📖 Reading annotations: {path}")
        records = self.parse_text(path.read_text(encoding="utf-8"))
        logger.info(
            f"Processed: {self.stats['processed']}, Successful: {self.stats['successful']}, "
            f"Failed: {self.stats['failed']}"
        )
        return records

    def _parse(self, line: str, line_number: int) -> AnnotationRecord:
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise AnnotationParseError("<record>", line_number, f"invalid JSON ({e.msg})")
        if not isinstance(doc, dict):
            raise AnnotationParseError("<record>", line_number, "record is not an object")

        for name in REQUIRED_FIELDS:
            if name not in doc:
                raise AnnotationParseError(name, line_number, "missing required field")
        unknown = sorted(set(doc) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS))
        if unknown:
            raise AnnotationParseError(unknown[0], line_number, "unknown field")

        image = self._string(doc, "image", line_number)
        mask = self._string(doc, "mask", line_number)
        class_id = self._index(doc, "class", line_number)
        model_id = self._index(doc, "model_id", line_number)

        box = self._numbers(doc, "box", 4, line_number)
        if not (box[0] < box[2] and box[1] < box[3]):
            raise AnnotationParseError(
                "box", line_number, "expected xmin < xmax and ymin < ymax"
            )

        rotation = self._numbers(doc, "rotation", 4, line_number)
        norm = math.sqrt(sum(v * v for v in rotation))
        if norm == 0.0:
            raise AnnotationParseError("rotation", line_number, "zero quaternion")
        if abs(norm - 1.0) > 1e-12:
            rotation = [v / norm for v in rotation]
        rotation_q = Quaternion(*rotation)

        translation = self._numbers(doc, "translation", 3, line_number)
        if translation[2] <= 0:
            raise AnnotationParseError("translation", line_number, "depth must be positive")

        if isinstance(doc["focal_length"], (int, float)):
            doc["focal_length"] = [doc["focal_length"]] * 2
        focal_pair = self._numbers(doc, "focal_length", 2, line_number)
        if min(focal_pair) <= 0:
            raise AnnotationParseError("focal_length", line_number, "must be positive")

        record = AnnotationRecord(
            image=image,
            class_id=class_id,
            box=tuple(box),  # type: ignore[arg-type]
            mask=mask,
            model_id=model_id,
            rotation=rotation_q,
            translation=np.array(translation),
            focal_length=(focal_pair[0], focal_pair[1]),
            line_number=line_number,
        )
        if "split" in doc:
            record.split = self._string(doc, "split", line_number)
        if "scale" in doc:
            scale = self._numbers(doc, "scale", 3, line_number)
            if min(scale) <= 0:
                raise AnnotationParseError("scale", line_number, "must be positive")
            record.scale = np.array(scale)
        if "principal_point" in doc:
            pp = self._numbers(doc, "principal_point", 2, line_number)
            record.principal_point = (pp[0], pp[1])
        if "image_size" in doc:
            size = self._numbers(doc, "image_size", 2, line_number)
            if min(size) < 1 or any(v != int(v) for v in size):
                raise AnnotationParseError("image_size", line_number, "expected positive integers")
            record.image_size = (int(size[0]), int(size[1]))
        return record

    @staticmethod
    def _string(doc: Dict[str, Any], name: str, line_number: int) -> str:
        value = doc[name]
        if not isinstance(value, str) or not value:
            raise AnnotationParseError(name, line_number, "expected a non-empty string")
        return value

    @staticmethod
    def _index(doc: Dict[str, Any], name: str, line_number: int) -> int:
        value = doc[name]
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise AnnotationParseError(name, line_number, "expected a non-negative integer")
        return value

    @staticmethod
    def _numbers(doc: Dict[str, Any], name: str, count: int, line_number: int) -> List[float]:
        value = doc[name]
        if not isinstance(value, list) or len(value) != count:
            raise AnnotationParseError(name, line_number, f"expected {count} numbers")
        numbers = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise AnnotationParseError(name, line_number, f"expected {count} finite numbers")
            numbers.append(float(v))
        return numbers
