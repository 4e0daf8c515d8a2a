"""
Process-wide logging for the cad-model commands.

Every command logs to ``<out>/logs/find_your_cad_model.log`` (rotated) and,
unless ``--quiet`` is given, echoes a shorter form of each line to stdout.
"""

import logging
import logging.handlers
import sys
import time
from pathlib import Path
from typing import Mapping, Optional, Union

FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CONSOLE_FORMAT = "%(asctime)s %(levelname)-7s %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
BANNER_WIDTH = 60
QUIET_LIBRARIES = ("torch", "scipy")

_session_started: Optional[float] = None


def setup_logging(
    log_dir: Union[str, Path] = "logs",
    log_file: str = "find_your_cad_model.log",
    log_level: int = logging.INFO,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    console_output: bool = True,
) -> Path:
    """
    Route the root logger to a rotating file and, optionally, stdout.

    Calling it again (several commands in one process, as the tests do)
    replaces the previous handlers.

    Args:
        log_dir: Directory holding the log file, created if missing
        log_file: Name of the log file
        log_level: Threshold for both handlers
        max_bytes: Size at which the file rotates
        backup_count: Rotated files kept next to the active one
        console_output: Also echo to stdout

    Returns:
        Path of the active log file
    """
    log_path = Path(log_dir) / log_file
    log_path.parent.mkdir(parents=True, exist_ok=True)

    root = logging.getLogger()
    root.setLevel(log_level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    file_handler = logging.handlers.RotatingFileHandler(
        log_path, maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8"
    )
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, DATE_FORMAT))
    root.addHandler(file_handler)

    if console_output:
        console = logging.StreamHandler(sys.stdout)
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT, "%H:%M:%S"))
        root.addHandler(console)

    for name in QUIET_LIBRARIES:
        logging.getLogger(name).setLevel(max(log_level, logging.WARNING))

    logging.getLogger(__name__).debug(
        f"Logging to {log_path} at {logging.getLevelName(log_level)}"
    )
    return log_path


def _banner(title: str, items: Mapping[str, object]) -> None:
    logger = logging.getLogger(__name__)
    rule = "=" * BANNER_WIDTH
    logger.info(rule)
    logger.info(title)
    logger.info(rule)
    for key, value in items.items():
        logger.info(f"{key}: {value}")
    logger.info(rule)


def log_session_start(session_info: Mapping[str, object]) -> None:
    """Opening banner: command, seed, paths."""
    global _session_started
    _session_started = time.perf_counter()
    _banner("SESSION STARTED", session_info)


def log_session_end(stats: Mapping[str, object]) -> None:
    """Closing banner with the command's statistics and wall time."""
    items = dict(stats)
    if _session_started is not None:
        items.setdefault("Elapsed", f"{time.perf_counter() - _session_started:.1f}s")
    _banner("SESSION ENDED", items)
