import math
import re
from typing import Dict, Tuple

from scipy import constants as codata

from app.utils.errors import ConfigurationError

MASS = "mass"
LENGTH = "length"
INVERSE_LENGTH = "inverse_length"
ENERGY = "energy"
TEMPERATURE = "temperature"
FREQUENCY = "frequency"
TIME = "time"
VELOCITY = "velocity"

_MASS_UNITS = {
    "kg": 1.0,
    "g": codata.gram,
    "amu": codata.physical_constants["atomic mass constant"][0],
    "u": codata.physical_constants["atomic mass constant"][0],
}

_LENGTH_UNITS = {
    "m": 1.0,
    "cm": codata.centi,
    "mm": codata.milli,
    "um": codata.micro,
    "nm": codata.nano,
    "angstrom": codata.angstrom,
    "A": codata.angstrom,
}

_TEMPERATURE_UNITS = {
    "K": 1.0,
    "mK": codata.milli,
    "uK": codata.micro,
    "nK": codata.nano,
}

_ENERGY_UNITS = {
    "J": 1.0,
    "eV": codata.electron_volt,
    "meV": codata.milli * codata.electron_volt,
    "kcal/mol": codata.kilo * codata.calorie / codata.Avogadro,
    "kJ/mol": codata.kilo / codata.Avogadro,
}
# temperature-equivalent energies, as depths are quoted in experiments
_ENERGY_UNITS.update({name: factor * codata.k for name, factor in _TEMPERATURE_UNITS.items()})

UNIT_TABLES: Dict[str, Dict[str, float]] = {
    MASS: _MASS_UNITS,
    LENGTH: _LENGTH_UNITS,
    INVERSE_LENGTH: {f"1/{name}": 1.0 / factor for name, factor in _LENGTH_UNITS.items()},
    ENERGY: _ENERGY_UNITS,
    TEMPERATURE: _TEMPERATURE_UNITS,
    FREQUENCY: {"Hz": 1.0, "kHz": codata.kilo, "MHz": codata.mega, "GHz": codata.giga},
    TIME: {"s": 1.0, "ms": codata.milli, "us": codata.micro, "ns": codata.nano},
    VELOCITY: {"m/s": 1.0, "mm/s": codata.milli, "um/s": codata.micro, "cm/s": codata.centi},
}

# canonical spelling used when writing quantities back out
SI_UNIT = {
    MASS: "kg",
    LENGTH: "m",
    INVERSE_LENGTH: "1/m",
    ENERGY: "J",
    TEMPERATURE: "K",
    FREQUENCY: "Hz",
    TIME: "s",
    VELOCITY: "m/s",
}

_QUANTITY = re.compile(r"^\s*(?P<number>[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)\s*(?P<unit>\S*)\s*$")


def split_quantity(text: str) -> Tuple[float, str]:
    """Split '0.917 angstrom' (or '5.657kHz') into number and unit text."""
    match = _QUANTITY.match(text)
    if not match:
        raise ConfigurationError(f"Not a quantity: '{text.strip()}'")
    return float(match.group("number")), match.group("unit")


def parse_quantity(text: str, dimension: str) -> float:
    """
    Parse a unit-suffixed quantity into SI.

    Args:
        text: e.g. '9.609e-19 J', '2.242 1/angstrom', '5.657 kHz'
        dimension: one of the dimension names of this module

    Raises:
        ConfigurationError: bare number, unknown unit or wrong dimension
    """
    if dimension not in UNIT_TABLES:
        raise ConfigurationError(f"Unknown dimension '{dimension}'")
    value, unit = split_quantity(text)
    if not unit:
        raise ConfigurationError(
            f"Missing unit in '{text.strip()}' (expected {dimension}, e.g. {SI_UNIT[dimension]})"
        )
    table = UNIT_TABLES[dimension]
    if unit not in table:
        raise ConfigurationError(
            f"Unit '{unit}' is not a {dimension} unit (accepted: {', '.join(sorted(table))})"
        )
    result = value * table[unit]
    if not math.isfinite(result):
        raise ConfigurationError(f"Quantity '{text.strip()}' is not finite")
    return result


def format_quantity(value: float, dimension: str) -> str:
    """Write an SI value with its canonical unit; repr keeps it lossless."""
    return f"{float(value)!r} {SI_UNIT[dimension]}"
