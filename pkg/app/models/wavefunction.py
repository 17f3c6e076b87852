from typing import Dict, Any, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from app.core.constants import HBAR
from app.models.grid import Grid2D
from app.utils.errors import ConfigurationError, NumericalError

NORM_TOLERANCE = 1e-9


class Wavefunction:
    """
    Complex amplitudes over a Grid2D at one simulation time.

    Amplitudes are normalised in SI, sum |psi|^2 dx1 dx2 = 1 at t = 0, and carry
    units of 1/m.
    """

    def __init__(self, amplitudes: np.ndarray, grid: Grid2D, time: float = 0.0, step: int = 0):
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        self.grid = grid
        self.time = float(time)
        self.step = int(step)
        self.clean()

    def clean(self):
        """Validate shape, finiteness and the norm bound."""
        if self.amplitudes.shape != self.grid.shape:
            raise ConfigurationError(
                f"Amplitude shape {self.amplitudes.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise NumericalError("Wavefunction contains non-finite amplitudes",
                                 details={"time": self.time, "step": self.step})
        norm = self.norm()
        if not 0.0 < norm <= 1.0 + NORM_TOLERANCE:
            raise NumericalError(f"Wavefunction norm {norm!r} outside (0, 1]",
                                 details={"time": self.time, "step": self.step})

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density()) * self.grid.cell_area)

    def copy(self) -> "Wavefunction":
        return Wavefunction(self.amplitudes.copy(), self.grid, self.time, self.step)

    def position_mean(self) -> Tuple[float, float]:
        Q1, Q2 = self.grid.mesh()
        rho = self.density()
        total = rho.sum()
        return float((Q1 * rho).sum() / total), float((Q2 * rho).sum() / total)

    def position_width(self) -> Tuple[float, float]:
        """Standard deviations of Q1 and Q2, m."""
        Q1, Q2 = self.grid.mesh()
        rho = self.density()
        total = rho.sum()
        mean1, mean2 = self.position_mean()
        var1 = ((Q1 - mean1) ** 2 * rho).sum() / total
        var2 = ((Q2 - mean2) ** 2 * rho).sum() / total
        return float(np.sqrt(var1)), float(np.sqrt(var2))

    def _spectral_density(self, workers: Optional[int] = None) -> np.ndarray:
        return np.abs(sfft.fft2(self.amplitudes, workers=workers)) ** 2

    def momentum_mean(self, workers: Optional[int] = None) -> Tuple[float, float]:
        """Spectral mean momentum (P1, P2), kg m/s."""
        weights = self._spectral_density(workers)
        k1, k2 = self.grid.wavenumbers()
        total = weights.sum()
        return (float(HBAR * (k1 * weights).sum() / total),
                float(HBAR * (k2 * weights).sum() / total))

    def kinetic_energy(self, mass: float, workers: Optional[int] = None) -> float:
        weights = self._spectral_density(workers)
        k1, k2 = self.grid.wavenumbers()
        kinetic = HBAR ** 2 * (k1 ** 2 + k2 ** 2) / (2.0 * mass)
        return float((kinetic * weights).sum() / weights.sum())

    def potential_energy(self, potential: np.ndarray) -> float:
        rho = self.density()
        return float((potential * rho).sum() / rho.sum())

    def energy(self, potential: np.ndarray, mass: float, workers: Optional[int] = None) -> float:
        """<H> per unit norm, J."""
        return self.kinetic_energy(mass, workers) + self.potential_energy(potential)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "time": self.time,
            "norm": self.norm(),
            "grid": self.grid.to_dict(),
        }
