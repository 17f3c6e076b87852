import numpy as np
import pytest

from app.core.constants import HBAR
from app.models.grid import Grid2D
from app.models.wavefunction import Wavefunction
from app.utils.errors import ConfigurationError, NumericalError

MASS = 1.1526e-26


def gaussian(grid, center=(0.0, 0.0), sigma=1e-6, wavenumber=(0.0, 0.0)):
    Q1, Q2 = grid.mesh()
    amplitudes = np.exp(-((Q1 - center[0]) ** 2 + (Q2 - center[1]) ** 2) / (4 * sigma ** 2))
    amplitudes = amplitudes * np.exp(1j * (wavenumber[0] * Q1 + wavenumber[1] * Q2))
    amplitudes /= np.sqrt(np.sum(np.abs(amplitudes) ** 2) * grid.cell_area)
    return Wavefunction(amplitudes, grid)


@pytest.fixture
def grid():
    return Grid2D(-16e-6, 16e-6, -16e-6, 16e-6, 128, 128)


def test_norm_and_moments(grid):
    psi = gaussian(grid, center=(2e-6, -1e-6), sigma=1.5e-6)

    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    mean1, mean2 = psi.position_mean()
    assert mean1 == pytest.approx(2e-6, rel=1e-9)
    assert mean2 == pytest.approx(-1e-6, rel=1e-9)
    width1, width2 = psi.position_width()
    assert width1 == pytest.approx(1.5e-6, rel=1e-6)
    assert width2 == pytest.approx(1.5e-6, rel=1e-6)


def test_spectral_momentum_and_energy(grid):
    k = 2 * np.pi / grid.dx1 / 32
    psi = gaussian(grid, sigma=2e-6, wavenumber=(k, 0.0))

    p1, p2 = psi.momentum_mean()
    assert p1 == pytest.approx(HBAR * k, rel=1e-6)
    assert p2 == pytest.approx(0.0, abs=1e-6 * HBAR * k)

    # <p^2>/2m = (hbar k)^2 / 2m plus the width term hbar^2 / (8 m sigma^2) per axis
    expected = (HBAR * k) ** 2 / (2 * MASS) + 2 * HBAR ** 2 / (8 * MASS * (2e-6) ** 2)
    assert psi.kinetic_energy(MASS) == pytest.approx(expected, rel=1e-6)
    assert psi.energy(np.zeros(grid.shape), MASS) == pytest.approx(expected, rel=1e-6)


def test_rejects_shape_mismatch_and_non_finite(grid):
    with pytest.raises(ConfigurationError):
        Wavefunction(np.zeros((64, 64)), grid)
    amplitudes = gaussian(grid).amplitudes.copy()
    amplitudes[0, 0] = np.nan
    with pytest.raises(NumericalError):
        Wavefunction(amplitudes, grid)


def test_rejects_norm_above_one(grid):
    with pytest.raises(NumericalError):
        Wavefunction(gaussian(grid).amplitudes * 1.01, grid)
    with pytest.raises(NumericalError):
        Wavefunction(np.zeros(grid.shape), grid)


def test_copy_is_independent(grid):
    psi = gaussian(grid)
    clone = psi.copy()
    clone.amplitudes[64, 64] = 0.0
    assert psi.amplitudes[64, 64] != 0.0
    assert clone.to_dict()["grid"] == grid.to_dict()
