import math
from typing import Dict, Any, Tuple

import numpy as np

from app.utils.errors import ConfigurationError

MIN_POINTS = 64


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class Grid2D:
    """
    Uniform periodic grid over the simulation frame (Q1, Q2), in metres.

    Point i of axis 1 sits at q1_min + i * dx1 with dx1 = (q1_max - q1_min) / n1,
    so q1_max itself is the periodic image of q1_min.
    """

    def __init__(self, q1_min: float, q1_max: float, q2_min: float, q2_max: float, n1: int, n2: int):
        self.q1_min = float(q1_min)
        self.q1_max = float(q1_max)
        self.q2_min = float(q2_min)
        self.q2_max = float(q2_max)
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.clean()

    def clean(self):
        """Validate extents and point counts."""
        for name in ("q1_min", "q1_max", "q2_min", "q2_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"Grid extent {name} must be finite")
        if self.q1_max <= self.q1_min or self.q2_max <= self.q2_min:
            raise ConfigurationError("Grid extents must satisfy min < max",
                                     details=self.to_dict())
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if n < MIN_POINTS or not _is_power_of_two(n):
                raise ConfigurationError(f"Grid {name} = {n} must be a power of two and at least {MIN_POINTS}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n1, self.n2

    @property
    def dx1(self) -> float:
        return (self.q1_max - self.q1_min) / self.n1

    @property
    def dx2(self) -> float:
        return (self.q2_max - self.q2_min) / self.n2

    @property
    def cell_area(self) -> float:
        return self.dx1 * self.dx2

    @property
    def axis1(self) -> np.ndarray:
        return self.q1_min + self.dx1 * np.arange(self.n1)

    @property
    def axis2(self) -> np.ndarray:
        return self.q2_min + self.dx2 * np.arange(self.n2)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis1, self.axis2, indexing="ij")

    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers (1/m) in FFT order, broadcastable over the grid."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n1, d=self.dx1)
        k2 = 2.0 * np.pi * np.fft.fftfreq(self.n2, d=self.dx2)
        return k1[:, None], k2[None, :]

    def fractional_index(self, Q1, Q2) -> Tuple[np.ndarray, np.ndarray]:
        """Grid-index coordinates of physical points, for interpolation."""
        return (np.asarray(Q1) - self.q1_min) / self.dx1, (np.asarray(Q2) - self.q2_min) / self.dx2

    def contains(self, Q1: float, Q2: float) -> bool:
        return self.q1_min <= Q1 < self.q1_max and self.q2_min <= Q2 < self.q2_max

    def scaled(self, length: float) -> "Grid2D":
        """Same grid with extents divided by a length unit."""
        return Grid2D(self.q1_min / length, self.q1_max / length,
                      self.q2_min / length, self.q2_max / length, self.n1, self.n2)

    def with_points(self, n1: int, n2: int) -> "Grid2D":
        return Grid2D(self.q1_min, self.q1_max, self.q2_min, self.q2_max, n1, n2)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q1_min": self.q1_min,
            "q1_max": self.q1_max,
            "q2_min": self.q2_min,
            "q2_max": self.q2_max,
            "n1": self.n1,
            "n2": self.n2,
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid2D) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (f"Grid2D(Q1=[{self.q1_min:.4g}, {self.q1_max:.4g}), Q2=[{self.q2_min:.4g}, "
                f"{self.q2_max:.4g}), n=({self.n1}, {self.n2}))")
