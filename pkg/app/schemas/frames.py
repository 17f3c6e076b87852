import math
from typing import Dict, Tuple

from pydantic import Field, validator

from app.core.constants import HBAR, UNITS
from app.schemas.reaction import ReactionBase


def _finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return value


class MassFactors(ReactionBase):
    """Kinematic factors of the mass-weighted coordinates."""

    a: float = Field(..., description="kg^(1/2)")
    b: float = Field(..., description="kg^(1/2)")
    beta_angle: float = Field(..., description="skew angle, rad")

    @validator("a", "b")
    def validate_factor(cls, v, field):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"{field.name} must be finite and strictly positive")
        return v

    @validator("beta_angle")
    def validate_angle(cls, v):
        if not 0.0 < v < math.pi / 2:
            raise ValueError("beta_angle must lie strictly between 0 and pi/2")
        return v

    @property
    def beta_degrees(self) -> float:
        return math.degrees(self.beta_angle)


class ScalingParams(ReactionBase):
    """Free parameters linking the chemical and the simulation frame."""

    m_tilde: float = Field(..., description="simulator atom mass, kg")
    l: float = Field(..., description="dimensionless scaling factor")

    @validator("m_tilde", "l")
    def validate_positive(cls, v, field):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"{field.name} must be finite and strictly positive")
        return v

    @property
    def length_factor(self) -> float:
        """sqrt(m_tilde) * l, the kg^(1/2) denominator of the coordinate map."""
        return math.sqrt(self.m_tilde) * self.l


class ChemCoords(ReactionBase):
    q1: float
    q2: float
    r_cm: float = 0.0

    @validator("q1", "q2", "r_cm")
    def validate_finite(cls, v, field):
        return _finite(field.name, v)


class SimCoords(ReactionBase):
    Q1: float
    Q2: float

    @validator("Q1", "Q2")
    def validate_finite(cls, v, field):
        return _finite(field.name, v)


class LabPositions(ReactionBase):
    x_a: float
    x_b: float
    x_c: float

    @property
    def q1(self) -> float:
        return self.x_b - self.x_a

    @property
    def q2(self) -> float:
        return self.x_c - self.x_b


class SimMomenta(ReactionBase):
    p_cm: float
    p_q1: float
    p_q2: float


class InitialVelocity(ReactionBase):
    v_q1: float = Field(..., description="m/s, toward the interaction region")
    v_q2: float = 0.0


class ChannelParams(ReactionBase):
    """
    Asymptotic harmonic channels in the simulation frame.

    Channel 1 (products) has transverse coordinate chi_1 = sin(beta) Q1 - cos(beta) Q2,
    channel 2 (reactants) has chi_2 = Q2.
    """

    chi_10: float
    chi_20: float
    k_tilde_1: float
    k_tilde_2: float
    nu_tilde_1: float
    nu_tilde_2: float
    v_tilde_1: float = Field(..., description="scaled product valley depth, J")
    v_tilde_2: float = Field(..., description="scaled reactant valley depth, J")
    length_scale_product: float = Field(..., description="m of Q per m of q2 along the product channel")
    length_scale_reactant: float = Field(..., description="m of Q per m of q1 along the reactant channel")


class ChannelFrame(ReactionBase):
    """Orthonormal frame of one asymptotic channel in the (Q1, Q2) plane."""

    channel: int
    longitudinal: Tuple[float, float]
    transverse: Tuple[float, float]
    chi0: float
    omega: float = Field(..., description="transverse angular frequency, rad/s")
    mass: float

    @property
    def oscillator_length(self) -> float:
        return math.sqrt(HBAR / (self.mass * self.omega))

    def longitudinal_coordinate(self, Q1, Q2):
        return self.longitudinal[0] * Q1 + self.longitudinal[1] * Q2

    def transverse_coordinate(self, Q1, Q2):
        return self.transverse[0] * Q1 + self.transverse[1] * Q2

    def point(self, s: float, chi: float) -> Tuple[float, float]:
        """Position with longitudinal coordinate s and transverse coordinate chi."""
        return (s * self.longitudinal[0] + chi * self.transverse[0],
                s * self.longitudinal[1] + chi * self.transverse[1])


class ChannelGeometry(ReactionBase):
    """Both channel frames plus the corner where their valley axes meet."""

    beta_angle: float
    product: ChannelFrame
    reactant: ChannelFrame

    def frame(self, channel) -> ChannelFrame:
        if channel in (1, "product"):
            return self.product
        if channel in (2, "reactant"):
            return self.reactant
        raise ValueError(f"Unknown channel '{channel}'")

    @property
    def corner(self) -> Tuple[float, float]:
        """Intersection of the two valley axes chi_1 = chi_10 and Q2 = chi_20."""
        chi_10, chi_20 = self.product.chi0, self.reactant.chi0
        q1 = (chi_10 + math.cos(self.beta_angle) * chi_20) / math.sin(self.beta_angle)
        return q1, chi_20


class DesignReport(ReactionBase):
    """SI waveguide parameters realizing the scaled surface with a chosen atom."""

    nu_tilde_1: float
    nu_tilde_2: float
    v_tilde_1: float
    v_tilde_2: float
    v_q1: float
    length_scale_product: float
    length_scale_reactant: float
    chi_10: float
    chi_20: float
    k_tilde_1: float
    k_tilde_2: float
    tau_scale: float
    l: float
    m_tilde: float
    temperature: float

    def to_json_dict(self) -> Dict[str, float]:
        """Structured-text field names, with frequencies in Hz and depths in uK."""
        return {
            "nu_tilde_1_hz": self.nu_tilde_1,
            "nu_tilde_2_hz": self.nu_tilde_2,
            "v_tilde_1_uK": self.v_tilde_1 * UNITS.joule_to_microkelvin,
            "v_tilde_2_uK": self.v_tilde_2 * UNITS.joule_to_microkelvin,
            "v_tilde_1_j": self.v_tilde_1,
            "v_tilde_2_j": self.v_tilde_2,
            "v_q1_mm_s": self.v_q1 * UNITS.m_per_s_to_mm_per_s,
            "l": self.l,
            "m_tilde_kg": self.m_tilde,
            "tau_scale": self.tau_scale,
            "chi_10_m": self.chi_10,
            "chi_20_m": self.chi_20,
            "k_tilde_1_n_per_m": self.k_tilde_1,
            "k_tilde_2_n_per_m": self.k_tilde_2,
            "length_scale_product_m_per_m": self.length_scale_product,
            "length_scale_reactant_m_per_m": self.length_scale_reactant,
            "temperature_k": self.temperature,
        }
