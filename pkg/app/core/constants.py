"""Physical constants and unit conversions shared by every module.

Values come from scipy's CODATA tables; everything downstream works in SI.
"""
import math

import numpy as np
from pydantic import BaseModel
from scipy import constants as codata

from app.utils.errors import DomainError


class PhysicalConstants(BaseModel):
    """Constants that enter the scaled Schrodinger equation and the thermal estimate."""

    hbar: float = codata.hbar
    k_b: float = codata.k
    amu: float = codata.physical_constants["atomic mass constant"][0]

    class Config:
        allow_mutation = False


class UnitConversions(BaseModel):
    """Pure multiplicative factors; divide to invert."""

    angstrom_to_m: float = codata.angstrom
    joule_to_microkelvin: float = 1.0 / (codata.k * codata.micro)
    hz_to_khz: float = 1.0 / codata.kilo
    m_per_s_to_mm_per_s: float = 1.0 / codata.milli

    class Config:
        allow_mutation = False


PHYSICAL_CONSTANTS = PhysicalConstants()
UNITS = UnitConversions()

HBAR = PHYSICAL_CONSTANTS.hbar
K_B = PHYSICAL_CONSTANTS.k_b
AMU = PHYSICAL_CONSTANTS.amu
PLANCK = 2.0 * math.pi * HBAR
ANGSTROM = UNITS.angstrom_to_m


def energy_to_temperature(energy):
    """Express an energy (J) as a temperature (K) via E / k_B."""
    values = np.asarray(energy, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("Energy must be finite", details={"energy": str(energy)})
    if np.any(values < 0):
        raise DomainError("Energy must be non-negative", details={"energy": str(energy)})
    result = values / K_B
    return float(result) if result.ndim == 0 else result


def energy_to_microkelvin(energy):
    return energy_to_temperature(energy) / codata.micro


def amu_to_kg(mass_amu: float) -> float:
    return mass_amu * AMU
