"""
Parsers for annotation records and run configuration files.
"""

from .annotation_parser import AnnotationParser, AnnotationRecord
from .config_parser import CONFIG_VERSION, parse_config_file, parse_config_text

__all__ = [
    "AnnotationParser",
    "AnnotationRecord",
    "CONFIG_VERSION",
    "parse_config_file",
    "parse_config_text",
]
