"""Exception hierarchy shared by every package."""

from typing import Any, Dict, Optional


class CadModelError(Exception):
    """Base class for all errors raised by find_your_cad_model."""


class DomainError(CadModelError, ValueError):
    """An input lies outside the domain of an operation."""


class AnnotationParseError(CadModelError, ValueError):
    """A JSON-lines annotation record violates the schema."""

    def __init__(self, field: str, line_number: int, reason: str):
        self.field = field
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: field '{field}': {reason}")


class ConfigError(CadModelError):
    """Bad command-line flags, config file or paths."""


class UnknownClassError(CadModelError, LookupError):
    """A class id has no entries in an index or bin set."""


class UnknownSampleError(CadModelError, LookupError):
    """A sample id does not exist in the dataset."""


class TrainingDivergedError(CadModelError, RuntimeError):
    """The training loss became NaN or infinite."""

    def __init__(self, step: int, last_finite: Optional[Dict[str, Any]] = None):
        self.step = step
        self.last_finite = last_finite or {}
        super().__init__(
            f"loss diverged at step {step}; last finite terms: {self.last_finite}"
        )


class DatasetError(DomainError):
    """A dataset directory exists but its header or records are malformed."""


class CheckpointError(DomainError):
    """A checkpoint file is truncated, foreign or carries a malformed header."""
