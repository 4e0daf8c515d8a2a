"""
Utility functions and helpers.
"""

from .file_io import (
    ensure_directory,
    load_json,
    load_pgm,
    quantize_image,
    save_json,
    save_pgm,
)
from .logging_config import log_session_end, log_session_start, setup_logging

__all__ = [
    "ensure_directory",
    "load_json",
    "load_pgm",
    "log_session_end",
    "log_session_start",
    "quantize_image",
    "save_json",
    "save_pgm",
    "setup_logging",
]
