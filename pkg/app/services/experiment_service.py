"""Experiment files: INI text with a [common] section and one section per command.

    [common]
    domain = slab
    n_interior = 200

    [evolve]
    lambda = 3
    delta = 0.7
    snapshot_times = 0, 0.1, 0.2
"""
import configparser
import logging
import re
from pathlib import Path
from typing import Dict, Optional, Tuple

from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.experiment import ExperimentConfig
from app.utils.logger import log_configuration_validation

logger = logging.getLogger(__name__)

KEY_ALIASES = {"lambda": "lambdas", "delta": "deltas"}
_KEY_LINE = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> Dict[Tuple[str, str], int]:
    """(section, key) -> 1-based line number"""
    index, section = {}, None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip()
            continue
        key = _KEY_LINE.match(line)
        if key and section is not None:
            index[(section, key.group(1).strip().lower())] = number
    return index


def _location(path: Path, section: str, key: str, lines: Dict[Tuple[str, str], int]) -> str:
    line = lines.get((section, key))
    where = f"{path}:{line}" if line else str(path)
    return f"{where} [{section}] {key}"


def load_experiment(path: Optional[Path], command: str) -> ExperimentConfig:
    """Parse and validate the settings for one command"""
    if path is None:
        config = ExperimentConfig(command=command)
        log_configuration_validation(True)
        return config

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read experiment file {path}: {e.strerror}")

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e.message if hasattr(e, 'message') else e}")

    lines = _line_index(text)
    values: Dict[str, str] = {}
    origin: Dict[str, Tuple[str, str]] = {}
    for section in ("common", command):
        if not parser.has_section(section):
            continue
        for key, value in parser.items(section):
            field = KEY_ALIASES.get(key, key).replace("-", "_")
            values[field] = value
            origin[field] = (section, key)

    unknown = [f for f in values if f not in ExperimentConfig.model_fields or f == "command"]
    if unknown:
        section, key = origin[unknown[0]]
        raise ConfigError(f"{_location(path, section, key, lines)}: unknown key")

    try:
        config = ExperimentConfig(command=command, **values)
    except ValidationError as e:
        errors = []
        for error in e.errors():
            field = str(error["loc"][0]) if error["loc"] else "?"
            section, key = origin.get(field, (command, field))
            errors.append(f"{_location(path, section, key, lines)}: {error['msg']}")
        log_configuration_validation(False, errors)
        raise ConfigError("; ".join(errors))

    log_configuration_validation(True)
    logger.info(f"Loaded [{command}] from {path}")
    return config
