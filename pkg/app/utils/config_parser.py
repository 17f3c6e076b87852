"""
Strict parser for flat run configurations.

One `section.key = value [unit]` assignment per line; `#` starts a comment.
Dimensioned keys require a unit suffix and are converted to SI on read.
"""
import difflib
from typing import Any, Dict, List

from app.core.logging_config import get_logger
from app.schemas.config import RunConfig
from app.utils.errors import ConfigurationError
from app.utils.units import (
    ENERGY,
    FREQUENCY,
    INVERSE_LENGTH,
    LENGTH,
    MASS,
    TEMPERATURE,
    TIME,
    VELOCITY,
    format_quantity,
    parse_quantity,
)

logger = get_logger(__name__)

NUMBER = "number"
INTEGER = "integer"
TEXT = "text"

KEY_KINDS: Dict[str, str] = {
    "reaction.m_a": MASS,
    "reaction.m_b": MASS,
    "reaction.m_c": MASS,
    "reaction.delta": NUMBER,
    **{f"reaction.{pair}.{name}": kind
       for pair in ("ab", "bc", "ac")
       for name, kind in (("D", ENERGY), ("beta", INVERSE_LENGTH), ("q0", LENGTH))},
    "simulator.m_tilde": MASS,
    "simulator.l": NUMBER,
    "simulator.target_frequency": FREQUENCY,
    "simulator.target_channel": INTEGER,
    "simulator.temperature": TEMPERATURE,
    "grid.Q1_min": LENGTH,
    "grid.Q1_max": LENGTH,
    "grid.Q2_min": LENGTH,
    "grid.Q2_max": LENGTH,
    "grid.n1": INTEGER,
    "grid.n2": INTEGER,
    "packet.channel": TEXT,
    "packet.center": LENGTH,
    "packet.width": LENGTH,
    "packet.velocity": VELOCITY,
    "packet.n": INTEGER,
    "cap.width": LENGTH,
    "cap.strength": ENERGY,
    "cap.power": INTEGER,
    "schedule.dt": TIME,
    "schedule.n_steps": INTEGER,
    "schedule.stride": INTEGER,
    "schedule.flux_stride": INTEGER,
    "analysis.reactant_offset": LENGTH,
    "analysis.product_offset": LENGTH,
    "analysis.basis": TEXT,
    "analysis.n_max": INTEGER,
    "output.directory": TEXT,
}

# keys that also accept a keyword standing for "derive it"
KEYWORDS = {
    "packet.velocity": "thermal",
    "schedule.dt": "auto",
}


def _error(source: str, line: int, column: int, message: str) -> ConfigurationError:
    return ConfigurationError(f"{source}:{line}:{column}: {message}",
                              details={"source": source, "line": line, "column": column})


def _convert(key: str, text: str) -> Any:
    if KEYWORDS.get(key) == text:
        return None
    kind = KEY_KINDS[key]
    if kind == TEXT:
        return text
    if kind == INTEGER:
        try:
            return int(text)
        except ValueError:
            raise ConfigurationError(f"'{text}' is not an integer")
    if kind == NUMBER:
        try:
            return float(text)
        except ValueError:
            raise ConfigurationError(f"'{text}' is not a number")
    return parse_quantity(text, kind)


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse configuration text into a flat {key: SI value} mapping.

    Raises:
        ConfigurationError: with `source:line:column` for syntax errors,
            unknown or duplicate keys and bad values
    """
    values: Dict[str, Any] = {}
    defined_at: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip()) + 1
        if "=" not in line:
            raise _error(source, number, indent, "expected 'key = value'")

        key_part, _, value_part = line.partition("=")
        key = key_part.strip()
        value = value_part.strip()
        value_column = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())

        if key not in KEY_KINDS:
            hint = difflib.get_close_matches(key, KEY_KINDS, n=1)
            suffix = f" (did you mean '{hint[0]}'?)" if hint else ""
            raise _error(source, number, indent, f"unknown key '{key}'{suffix}")
        if key in values:
            raise _error(source, number, indent,
                         f"duplicate key '{key}' (first set on line {defined_at[key]})")
        if not value:
            raise _error(source, number, value_column, f"missing value for '{key}'")
        try:
            values[key] = _convert(key, value)
        except ConfigurationError as e:
            raise _error(source, number, value_column, f"{key}: {e.message}")
        defined_at[key] = number
    return values


def build_run_config(values: Dict[str, Any]) -> RunConfig:
    """Nest a flat mapping by its dotted keys and validate it as a RunConfig."""
    nested: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            continue
        *path, leaf = key.split(".")
        node = nested
        for part in path:
            node = node.setdefault(part, {})
        node[leaf] = value
    if "reaction" not in nested:
        raise ConfigurationError("Configuration is missing the [reaction] block", details={"block": "reaction"})
    return RunConfig.parse_obj(nested)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    return build_run_config(parse_config_text(text, source))


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    config = parse_config(text, source=path)
    logger.debug(f"Loaded configuration {path}", extra={"path": path})
    return config


def _lookup(config: RunConfig, key: str) -> Any:
    node: Any = config
    for part in key.split("."):
        if node is None:
            return None
        node = getattr(node, part)
    return node


def serialize_config(config: RunConfig) -> str:
    """Canonical text in SI units; parse_config(serialize_config(c)) == c."""
    lines: List[str] = []
    section = None
    for key, kind in KEY_KINDS.items():
        block = key.split(".", 1)[0]
        if getattr(config, block) is None:
            continue
        value = _lookup(config, key)
        if value is None:
            if key not in KEYWORDS:
                continue
            text = KEYWORDS[key]
        elif kind == TEXT:
            text = str(value)
        elif kind == INTEGER:
            text = str(int(value))
        elif kind == NUMBER:
            text = repr(float(value))
        else:
            text = format_quantity(value, kind)
        if block != section:
            if lines:
                lines.append("")
            lines.append(f"# {block}")
            section = block
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"

