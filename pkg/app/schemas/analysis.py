import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator

from app.schemas.frames import ChannelGeometry
from app.schemas.reaction import ReactionBase


class ChannelPartition(ReactionBase):
    """
    Dividing lines of the simulation frame, placed by offsets from the corner
    where the two valley axes meet.

    The reactant line is perpendicular to Q1; the product line is perpendicular
    to the product channel axis. Cells beyond the product line on the product
    side of the bisector between the axes form the product region; cells beyond
    the reactant line and outside the product region form the reactant region.
    """

    geometry: ChannelGeometry
    reactant_offset: float = Field(..., description="m along the reactant axis")
    product_offset: float = Field(..., description="m along the product axis")

    @validator("reactant_offset", "product_offset")
    def validate_offset(cls, v, field):
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"{field.name} must be finite and strictly positive")
        return v

    @property
    def corner(self) -> Tuple[float, float]:
        return self.geometry.corner

    @property
    def reactant_line(self) -> float:
        """Longitudinal coordinate (Q1) of the reactant line."""
        return self.geometry.reactant.longitudinal_coordinate(*self.corner) + self.reactant_offset

    @property
    def product_line(self) -> float:
        """Longitudinal coordinate of the product line along the product axis."""
        return self.geometry.product.longitudinal_coordinate(*self.corner) + self.product_offset

    def line(self, channel: str) -> float:
        return self.reactant_line if channel == "reactant" else self.product_line

    def product_side(self, Q1, Q2):
        half = 0.5 * self.geometry.beta_angle
        c1, c2 = self.corner
        return -math.sin(half) * (np.asarray(Q1) - c1) + math.cos(half) * (np.asarray(Q2) - c2) > 0

    def regions(self, Q1, Q2) -> Dict[str, np.ndarray]:
        """Boolean masks of the three regions over arrays of points."""
        product_s = self.geometry.product.longitudinal_coordinate(Q1, Q2)
        product = self.product_side(Q1, Q2) & (product_s > self.product_line)
        reactant = (np.asarray(Q1) > self.reactant_line) & ~product
        interaction = ~(product | reactant)
        return {"reactant": reactant, "product": product, "interaction": interaction}


class StatePopulation(BaseModel):
    n: int
    p: float


class VibrationalDistribution(ReactionBase):
    channel: Literal["reactant", "product"]
    basis: Literal["harmonic", "morse"]
    mode: Literal["snapshot", "flux"]
    populations: List[StatePopulation]
    residual: float
    channel_population: float
    truncated: bool = False

    @validator("populations")
    def validate_populations(cls, v):
        for state in v:
            if not 0.0 <= state.p <= 1.0:
                raise ValueError(f"population of n={state.n} outside [0, 1]")
        return v

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([state.p for state in self.populations])

    @property
    def peak(self) -> int:
        return self.populations[int(np.argmax(self.probabilities))].n

    def to_json_dict(self) -> Dict:
        return {
            "channel": self.channel,
            "basis": self.basis,
            "mode": self.mode,
            "populations": [{"n": state.n, "p": state.p} for state in self.populations],
            "residual": self.residual,
            "channel_population": self.channel_population,
            "truncated": self.truncated,
        }


class SaddleInfo(ReactionBase):
    q1: float = Field(..., description="m")
    q2: float = Field(..., description="m")
    energy: float = Field(..., description="J")
    barrier: float = Field(..., description="J above the reactant valley floor")
    hessian_eigenvalues: Tuple[float, float]
    gradient_norm: float
    iterations: int
    sim_location: Optional[Tuple[float, float]] = None

    def to_json_dict(self) -> Dict:
        return {
            "q1_m": self.q1,
            "q2_m": self.q2,
            "energy_j": self.energy,
            "barrier_j": self.barrier,
            "hessian_eigenvalues_j_per_m2": list(self.hessian_eigenvalues),
            "gradient_norm_j_per_m": self.gradient_norm,
            "iterations": self.iterations,
            "sim_location_m": list(self.sim_location) if self.sim_location else None,
        }


class GridSaddleEstimate(ReactionBase):
    """Lowest level at which the reactant and product valleys connect on a raster."""

    q1: float
    q2: float
    energy: float
    index: Tuple[int, int]


class ChannelPopulations(ReactionBase):
    reactant: float
    product: float
    interaction: float
    method: Literal["region", "ledger"]

    @property
    def total(self) -> float:
        return self.reactant + self.product + self.interaction

    def to_json_dict(self) -> Dict:
        return {
            "reactant": self.reactant,
            "product": self.product,
            "interaction": self.interaction,
            "method": self.method,
        }


class ContourRaster(BaseModel):
    """V / E_zp over a rectangular window, for external plotting."""

    frame: Literal["chem", "sim"]
    x: np.ndarray
    y: np.ndarray
    energies: np.ndarray
    values: np.ndarray
    zero_point_energy: float
    clip_level: float

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @property
    def header(self) -> Tuple[str, str, str]:
        if self.frame == "chem":
            return "q1", "q2", "v_over_ezp"
        return "Q1", "Q2", "v_over_ezp"

    def columns(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()])
