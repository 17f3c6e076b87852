import math
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import Field, root_validator, validator

from app.schemas.config import RunConfig
from app.schemas.reaction import LepsSurface, ReactionBase
from app.utils.errors import ConfigurationError
from app.utils.units import ENERGY, LENGTH, parse_quantity

Observable = Literal["barrier_height", "exoergicity", "saddle_q1", "saddle_q2", "product_branching"]

# dimension of each observable's target; None means a plain probability
OBSERVABLE_DIMENSIONS = {
    "barrier_height": ENERGY,
    "exoergicity": ENERGY,
    "saddle_q1": LENGTH,
    "saddle_q2": LENGTH,
    "product_branching": None,
}

PAIR_PARAMETERS = ("D", "beta_morse")


class FreeParameter(ReactionBase):
    """A surface parameter varied by the fit: 'delta' or '<pair>.D' / '<pair>.beta_morse'."""

    name: str
    lower: float
    upper: float
    initial: Optional[float] = None

    @validator("name")
    def validate_name(cls, v):
        if v == "delta":
            return v
        pair, _, field = v.partition(".")
        if pair not in ("ab", "bc", "ac") or field not in PAIR_PARAMETERS:
            raise ValueError(f"'{v}' is not a fit parameter (use delta, <pair>.D or <pair>.beta_morse)")
        return v

    @root_validator(skip_on_failure=True)
    def validate_bounds(cls, values):
        lower, upper = values["lower"], values["upper"]
        if not (math.isfinite(lower) and math.isfinite(upper)) or lower >= upper:
            raise ValueError("bounds must be finite with lower < upper")
        floor = -1.0 if values["name"] == "delta" else 0.0
        if lower <= floor:
            raise ValueError(f"lower bound of {values['name']} must exceed {floor}")
        initial = values.get("initial")
        if initial is not None and not lower <= initial <= upper:
            raise ValueError(f"initial value of {values['name']} lies outside its bounds")
        return values

    def current_value(self, surface: LepsSurface) -> float:
        if self.name == "delta":
            return surface.delta
        pair, _, field = self.name.partition(".")
        return getattr(getattr(surface, pair), field)


class ObjectiveTerm(ReactionBase):
    """One weighted squared relative residual ((value - target) / target)^2."""

    observable: Observable
    target: float
    weight: float = Field(1.0, gt=0)

    @validator("target", pre=True)
    def parse_target(cls, v, values):
        if isinstance(v, str):
            dimension = OBSERVABLE_DIMENSIONS.get(values.get("observable"))
            try:
                return float(v) if dimension is None else parse_quantity(v, dimension)
            except ConfigurationError as e:
                raise ValueError(e.message)
        return v

    @validator("target")
    def validate_target(cls, v):
        if not math.isfinite(v) or v == 0:
            raise ValueError("target must be finite and non-zero")
        return v


class BranchingPreset(ReactionBase):
    """Coarse propagation used for branching observables inside a fit."""

    n1: int = 256
    n2: int = 256
    dt_factor: float = Field(4.0, ge=1.0)


class FitProblem(ReactionBase):
    surface: LepsSurface
    parameters: List[FreeParameter] = []
    objectives: List[ObjectiveTerm] = Field(..., min_items=1)
    max_evaluations: int = Field(2000, ge=1)
    run_config: Optional[RunConfig] = None
    preset: BranchingPreset = BranchingPreset()

    @validator("parameters")
    def validate_unique(cls, v):
        names = [parameter.name for parameter in v]
        if len(set(names)) != len(names):
            raise ValueError("parameters must be unique")
        return v

    @root_validator(skip_on_failure=True)
    def validate_branching(cls, values):
        needs_run = any(term.observable == "product_branching" for term in values["objectives"])
        if needs_run and values.get("run_config") is None:
            raise ValueError("product_branching needs a run configuration")
        return values

    @property
    def names(self) -> List[str]:
        return [parameter.name for parameter in self.parameters]

    @property
    def lower(self) -> np.ndarray:
        return np.array([parameter.lower for parameter in self.parameters])

    @property
    def upper(self) -> np.ndarray:
        return np.array([parameter.upper for parameter in self.parameters])

    def initial_values(self, overrides: Optional[Dict[str, float]] = None) -> Dict[str, float]:
        """Start point: overrides, then each parameter's initial value, then the surface itself."""
        overrides = overrides or {}
        return {
            parameter.name: overrides.get(
                parameter.name,
                parameter.initial if parameter.initial is not None else parameter.current_value(self.surface),
            )
            for parameter in self.parameters
        }


class FitResult(ReactionBase):
    parameters: Dict[str, float]
    objective: float
    evaluations: int
    converged: bool
    penalized_evaluations: int = 0
    message: str = ""
    preset: Optional[BranchingPreset] = None

    def to_json_dict(self) -> Dict[str, Union[float, int, bool, str, Dict, None]]:
        return {
            "parameters": dict(self.parameters),
            "objective": self.objective,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "penalized_evaluations": self.penalized_evaluations,
            "message": self.message,
            "preset": self.preset.dict() if self.preset else None,
        }
