"""Flat dotted key-value experiment config files.

Format::

    # comment
    experiment = decay
    model.alpha = 0.75
    grid.N = 16
    initial_data.mode = [1, 0]

Keys are dotted paths into the experiment config; values are left as strings for
pydantic to coerce, except values starting with ``[`` or ``{`` which are parsed as JSON.
"""
import json
from pathlib import Path
from typing import Any, Dict, Union

from .errors import ConfigError
from .logger import get_logger

logger = get_logger(__name__)


def _parse_value(raw: str, line_no: int) -> Any:
    value = raw.strip()
    if value[:1] in ("[", "{"):
        try:
            return json.loads(value)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {line_no}: malformed JSON value: {e}") from e
    if len(value) >= 2 and value[0] == value[-1] and value[0] in ("'", '"'):
        return value[1:-1]
    if value.lower() in ("none", "null"):
        return None
    return value


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse config text into a nested dictionary"""
    tree: Dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {stripped!r}")

        key, raw = stripped.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        if not all(parts):
            raise ConfigError(f"line {line_no}: malformed key {key!r}")

        node = tree
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"line {line_no}: key {key!r} conflicts with a scalar value")
            node = child
        if parts[-1] in node:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        node[parts[-1]] = _parse_value(raw, line_no)

    return tree


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read and parse a config file"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        logger.error("Failed to read config file", path=str(path), error=str(e))
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    tree = parse_config_text(text)
    logger.debug("Parsed config file", path=str(path), sections=sorted(tree))
    return tree
