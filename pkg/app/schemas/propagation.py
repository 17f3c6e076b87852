import math
from typing import Dict, Literal, Optional

from pydantic import BaseModel, Field, validator

from app.schemas.reaction import ReactionBase

CHANNEL_NUMBERS = {"product": 1, "reactant": 2}


class WavePacketSpec(ReactionBase):
    """
    Initial packet: a Gaussian along the channel times a transverse eigenstate.

    The longitudinal coordinate of a channel grows away from the interaction
    region; a positive velocity moves the packet toward it.
    """

    channel: Literal["reactant", "product"] = "reactant"
    center: float = Field(..., description="longitudinal centre, m")
    width: float = Field(..., description="longitudinal sigma, m")
    velocity: float = Field(0.0, description="m/s, positive toward the interaction region")
    n: int = Field(0, ge=0, description="transverse vibrational index")

    @validator("width")
    def validate_width(cls, v):
        if not math.isfinite(v) or v <= 0:
            raise ValueError("width must be finite and strictly positive")
        return v

    @validator("center", "velocity")
    def validate_finite(cls, v, field):
        if not math.isfinite(v):
            raise ValueError(f"{field.name} must be finite")
        return v

    @property
    def channel_number(self) -> int:
        return CHANNEL_NUMBERS[self.channel]


class CAPSpec(ReactionBase):
    """Monomial absorbing strips at the far ends of both channel valleys."""

    width: float = Field(..., description="m")
    strength: float = Field(..., description="J")
    power: int = Field(3, ge=1)

    @validator("width", "strength")
    def validate_positive(cls, v, field):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"{field.name} must be finite and strictly positive")
        return v


class Schedule(ReactionBase):
    """Time stepping; dt None means 1e-3 of the fastest transverse period."""

    dt: Optional[float] = Field(None, description="s")
    n_steps: int = Field(..., ge=0)
    stride: int = Field(100, ge=1, description="snapshot stride in steps")
    flux_stride: int = Field(10, ge=1, description="steps between flux samples")

    @validator("dt")
    def validate_dt(cls, v):
        if v is not None and (not math.isfinite(v) or v <= 0):
            raise ValueError("dt must be finite and strictly positive")
        return v


class SnapshotRecord(BaseModel):
    step: int
    time: float
    norm: float
    absorbed: Dict[str, float]

    class Config:
        allow_mutation = False
