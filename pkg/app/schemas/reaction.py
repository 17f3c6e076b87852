import math
from typing import Tuple

from pydantic import BaseModel, Field, validator


class ReactionBase(BaseModel):
    """Base schema for immutable reaction data."""

    class Config:
        allow_mutation = False
        extra = "forbid"


def finite_positive(name: str, value: float) -> float:
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be finite and strictly positive")
    return value


class MassTriple(ReactionBase):
    """Nuclear masses (kg) of A + BC -> AB + C."""

    m_a: float
    m_b: float
    m_c: float

    @validator("m_a", "m_b", "m_c")
    def validate_mass(cls, v, field):
        return finite_positive(field.name, v)

    @property
    def total(self) -> float:
        return self.m_a + self.m_b + self.m_c

    @property
    def mu_ab(self) -> float:
        return self.m_a * self.m_b / (self.m_a + self.m_b)

    @property
    def mu_bc(self) -> float:
        return self.m_b * self.m_c / (self.m_b + self.m_c)

    @property
    def mu_ac(self) -> float:
        return self.m_a * self.m_c / (self.m_a + self.m_c)


class DiatomSpec(ReactionBase):
    """Morse parameters of one diatomic pair, SI units."""

    D: float = Field(..., description="dissociation energy, J")
    beta_morse: float = Field(..., description="Morse range parameter, 1/m")
    q0: float = Field(..., description="equilibrium distance, m")
    mu: float = Field(..., description="reduced mass, kg")

    @validator("D", "beta_morse", "q0", "mu")
    def validate_positive(cls, v, field):
        return finite_positive(field.name, v)

    @property
    def force_constant(self) -> float:
        return 2.0 * self.D * self.beta_morse ** 2


class LepsSurface(ReactionBase):
    """
    LEPS surface for a collinear triatomic.

    Pair 1 is AB (products), pair 2 is BC (reactants), pair 3 is AC; the
    field names fix the indexing.
    """

    ab: DiatomSpec
    bc: DiatomSpec
    ac: DiatomSpec
    delta: float = Field(..., description="Sato parameter")

    @validator("delta")
    def validate_delta(cls, v):
        if not math.isfinite(v) or v <= -1.0:
            raise ValueError("delta must be finite and greater than -1")
        return v

    @property
    def pairs(self) -> Tuple[DiatomSpec, DiatomSpec, DiatomSpec]:
        return self.ab, self.bc, self.ac

    @property
    def max_depth(self) -> float:
        return max(spec.D for spec in self.pairs)

    def channel_diatom(self, channel: int) -> DiatomSpec:
        """Diatom bound in asymptotic channel 1 (products) or 2 (reactants)."""
        if channel == 1:
            return self.ab
        if channel == 2:
            return self.bc
        raise ValueError(f"channel must be 1 or 2, got {channel}")

    def with_parameters(self, **updates) -> "LepsSurface":
        """
        Return a validated copy with some parameters replaced.

        Keys are 'delta' or '<pair>.<field>', e.g. 'ac.D', 'bc.beta_morse'.
        """
        data = self.dict()
        for key, value in updates.items():
            if key == "delta":
                data["delta"] = value
                continue
            pair, _, name = key.partition(".")
            if pair not in ("ab", "bc", "ac") or name not in DiatomSpec.__fields__:
                raise ValueError(f"Unknown surface parameter '{key}'")
            data[pair][name] = value
        return LepsSurface.parse_obj(data)
