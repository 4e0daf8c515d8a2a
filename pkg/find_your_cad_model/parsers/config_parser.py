"""Reader for versioned key=value run configuration files."""

import logging
from pathlib import Path
from typing import Dict, Iterable, Union

from find_your_cad_model.exceptions import ConfigError

logger = logging.getLogger(__name__)

CONFIG_VERSION = "1"


def parse_config_text(text: str, allowed_keys: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    allowed = set(allowed_keys)
    values: Dict[str, str] = {}
    version = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected key=value, got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if not key:
            raise ConfigError(f"{source}:{number}: empty key")
        if key == "config_version":
            version = value
            continue
        if key not in allowed:
            raise ConfigError(f"{source}:{number}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key '{key}'")
        values[key] = value
    if version is None:
        raise ConfigError(f"{source}: missing config_version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"{source}: unsupported config_version {version}")
    return values


def parse_config_file(path: Union[str, Path], allowed_keys: Iterable[str]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = parse_config_text(path.read_text(encoding="utf-8"), allowed_keys, str(path))
    logger.info(f"Loaded {len(values)} settings from {path}")
    return values
