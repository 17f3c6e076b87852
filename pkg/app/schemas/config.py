import math
from typing import Literal, Optional

from pydantic import Field, root_validator, validator

from app.models.grid import Grid2D
from app.schemas.propagation import CAPSpec, Schedule, WavePacketSpec
from app.schemas.reaction import DiatomSpec, LepsSurface, MassTriple, ReactionBase, finite_positive


class PairConfig(ReactionBase):
    D: float
    beta: float
    q0: float

    @validator("D", "beta", "q0")
    def validate_positive(cls, v, field):
        return finite_positive(field.name, v)


class ReactionConfig(ReactionBase):
    """Masses, the three Morse pairs and the Sato parameter; reduced masses follow from the masses."""

    m_a: float
    m_b: float
    m_c: float
    delta: float
    ab: PairConfig
    bc: PairConfig
    ac: PairConfig

    @validator("m_a", "m_b", "m_c")
    def validate_mass(cls, v, field):
        return finite_positive(field.name, v)

    @validator("delta")
    def validate_delta(cls, v):
        if not math.isfinite(v) or v <= -1.0:
            raise ValueError("delta must be finite and greater than -1")
        return v

    @property
    def masses(self) -> MassTriple:
        return MassTriple(m_a=self.m_a, m_b=self.m_b, m_c=self.m_c)

    @property
    def surface(self) -> LepsSurface:
        masses = self.masses
        reduced = {"ab": masses.mu_ab, "bc": masses.mu_bc, "ac": masses.mu_ac}
        pairs = {
            name: DiatomSpec(D=pair.D, beta_morse=pair.beta, q0=pair.q0, mu=reduced[name])
            for name, pair in (("ab", self.ab), ("bc", self.bc), ("ac", self.ac))
        }
        return LepsSurface(delta=self.delta, **pairs)


class SimulatorConfig(ReactionBase):
    """Simulator atom and scaling; exactly one of l and target_frequency."""

    m_tilde: float
    l: Optional[float] = None
    target_frequency: Optional[float] = Field(None, description="Hz")
    target_channel: Literal[1, 2] = 2
    temperature: float = Field(0.0, description="K")

    @validator("m_tilde")
    def validate_mass(cls, v):
        return finite_positive("m_tilde", v)

    @validator("l", "target_frequency")
    def validate_scale(cls, v, field):
        return v if v is None else finite_positive(field.name, v)

    @validator("temperature")
    def validate_temperature(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError("temperature must be finite and non-negative")
        return v

    @root_validator(skip_on_failure=True)
    def validate_scaling(cls, values):
        if (values.get("l") is None) == (values.get("target_frequency") is None):
            raise ValueError("exactly one of l and target_frequency must be given")
        return values


class GridConfig(ReactionBase):
    Q1_min: float
    Q1_max: float
    Q2_min: float
    Q2_max: float
    n1: int
    n2: int

    def to_grid(self) -> Grid2D:
        return Grid2D(self.Q1_min, self.Q1_max, self.Q2_min, self.Q2_max, self.n1, self.n2)


class PacketConfig(ReactionBase):
    """Initial packet; velocity None means the thermal estimate at the simulator temperature."""

    channel: Literal["reactant", "product"] = "reactant"
    center: float
    width: float
    velocity: Optional[float] = None
    n: int = Field(0, ge=0)

    def to_spec(self, velocity: float) -> WavePacketSpec:
        return WavePacketSpec(channel=self.channel, center=self.center, width=self.width,
                              velocity=velocity, n=self.n)


class AnalysisConfig(ReactionBase):
    reactant_offset: float
    product_offset: float
    basis: Literal["harmonic", "morse"] = "harmonic"
    n_max: int = Field(5, ge=0)


class OutputConfig(ReactionBase):
    directory: str = "runs"


class RunConfig(ReactionBase):
    """
    A whole run. Only the reaction block is always needed; commands ask for
    the others with `missing_blocks`.
    """

    reaction: ReactionConfig
    simulator: Optional[SimulatorConfig] = None
    grid: Optional[GridConfig] = None
    packet: Optional[PacketConfig] = None
    cap: Optional[CAPSpec] = None
    schedule: Optional[Schedule] = None
    analysis: Optional[AnalysisConfig] = None
    output: OutputConfig = OutputConfig()

    def missing_blocks(self, *blocks: str):
        return [block for block in blocks if getattr(self, block) is None]
