"""Transverse vibrational bases: harmonic (Hermite-Gaussian) and Morse states."""
import math
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicSpline
from scipy.special import eval_genlaguerre, eval_hermite, gammaln

from app.core.constants import HBAR
from app.core.events import event_emitter
from app.core.logging_config import get_logger
from app.schemas.reaction import DiatomSpec
from app.utils.errors import DomainError, TruncationError

logger = get_logger(__name__)

# walls of the DVR box sit where V = WALL_DEPTHS * D
WALL_DEPTHS = 20.0
# decay lengths kept beyond the outer turning point of the highest state
TAIL_DECAY_LENGTHS = 14.0


class MorseStates(NamedTuple):
    energies: np.ndarray       # closed form, J
    grid_energies: np.ndarray  # sinc-DVR eigenvalues, J
    x: np.ndarray              # m
    functions: np.ndarray      # (n_states, len(x)), orthonormal with weight dx

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def on(self, points: np.ndarray) -> np.ndarray:
        """Eigenfunctions interpolated onto other points, zero outside the DVR box."""
        spline = CubicSpline(self.x, self.functions, axis=1, extrapolate=False)
        values = spline(np.asarray(points, dtype=float))
        return np.nan_to_num(values, nan=0.0)


def harmonic_state(n: int, x, mass: float, omega: float) -> np.ndarray:
    """Normalised eigenstate n of (1/2) m omega^2 x^2, in 1/sqrt(m)."""
    if n < 0:
        raise DomainError(f"Vibrational index must be non-negative, got {n}")
    alpha = mass * omega / HBAR
    xi = math.sqrt(alpha) * np.asarray(x, dtype=float)
    log_norm = 0.25 * math.log(alpha / math.pi) - 0.5 * (n * math.log(2.0) + gammaln(n + 1))
    return math.exp(log_norm) * eval_hermite(n, xi) * np.exp(-0.5 * xi ** 2)


def harmonic_basis(n_max: int, x, mass: float, omega: float) -> np.ndarray:
    return np.stack([harmonic_state(n, x, mass, omega) for n in range(n_max + 1)])


def morse_parameter(spec: DiatomSpec, mass: float) -> float:
    """lambda = sqrt(2 m D) / (beta hbar); the well holds floor(lambda - 1/2) + 1 states."""
    return math.sqrt(2.0 * mass * spec.D) / (spec.beta_morse * HBAR)


def morse_omega(spec: DiatomSpec, mass: float) -> float:
    return math.sqrt(2.0 * spec.D * spec.beta_morse ** 2 / mass)


def highest_bound_state(spec: DiatomSpec, mass: float) -> int:
    """Largest n with a bound level, floor(2D / (hbar omega) - 1/2); -1 when there is none."""
    ratio = 2.0 * spec.D / (HBAR * morse_omega(spec, mass)) - 0.5
    return math.floor(ratio) if ratio >= 0 else -1


def morse_energies(spec: DiatomSpec, mass: float, n_max: int) -> np.ndarray:
    """Closed-form levels hbar omega (n + 1/2) - [hbar omega (n + 1/2)]^2 / 4D, above the well bottom."""
    quantum = HBAR * morse_omega(spec, mass) * (np.arange(n_max + 1) + 0.5)
    return quantum - quantum ** 2 / (4.0 * spec.D)


def morse_eigenfunction(spec: DiatomSpec, mass: float, n: int, x) -> np.ndarray:
    """Analytic bound state n via generalised Laguerre polynomials, in 1/sqrt(m)."""
    lam = morse_parameter(spec, mass)
    if n > lam - 0.5:
        raise DomainError(f"Morse well has no bound state n = {n}")
    z = 2.0 * lam * np.exp(-spec.beta_morse * (np.asarray(x, dtype=float) - spec.q0))
    s = 2.0 * lam - 2.0 * n - 1.0
    log_norm = 0.5 * (math.log(spec.beta_morse) + gammaln(n + 1) + math.log(s) - gammaln(2.0 * lam - n))
    return np.exp(log_norm + 0.5 * s * np.log(z) - 0.5 * z) * eval_genlaguerre(n, s, z)


def _dvr_box(spec: DiatomSpec, mass: float, n_top: int, points: Optional[int]):
    beta = spec.beta_morse
    left = spec.q0 - math.log(1.0 + math.sqrt(WALL_DEPTHS)) / beta

    energy = float(morse_energies(spec, mass, n_top)[-1])
    outer = spec.q0 - math.log(1.0 - math.sqrt(min(energy / spec.D, 1.0 - 1e-12))) / beta
    kappa = math.sqrt(2.0 * mass * max(spec.D - energy, 1e-3 * spec.D)) / HBAR
    right = outer + TAIL_DECAY_LENGTHS / kappa

    if points is None:
        k_max = math.sqrt(2.0 * mass * (WALL_DEPTHS + 1.0) * spec.D) / HBAR
        points = int(math.ceil((right - left) * k_max / math.pi)) + 1
        points = max(points, 200)
    return np.linspace(left, right, points)


def _sinc_dvr_kinetic(n_points: int, dx: float, mass: float) -> np.ndarray:
    """Colbert-Miller kinetic matrix on an infinite uniform grid."""
    offsets = np.arange(n_points, dtype=float)
    column = np.empty(n_points)
    column[0] = math.pi ** 2 / 3.0
    column[1:] = 2.0 * (-1.0) ** offsets[1:] / offsets[1:] ** 2
    return HBAR ** 2 / (2.0 * mass * dx ** 2) * linalg.toeplitz(column)


def morse_bound_states(spec: DiatomSpec, mass: float, n_max: int,
                       points: Optional[int] = None, channel: str = "") -> MorseStates:
    """
    Bound states 0..n_max of a 1D Morse well by sinc-DVR diagonalisation.

    Requests beyond the last bound level are truncated and reported on the
    event bus.

    Raises:
        DomainError: the well has no bound state
    """
    top = highest_bound_state(spec, mass)
    if top < 0:
        raise DomainError("Morse well supports no bound state",
                          details={"D": spec.D, "beta": spec.beta_morse, "mass": mass})
    if n_max < 0:
        raise DomainError(f"n_max must be non-negative, got {n_max}")
    if n_max > top:
        warning = TruncationError(f"Requested n_max={n_max} but only {top + 1} bound states",
                                  details={"requested": n_max, "available": top + 1})
        logger.warning(warning.message, extra=warning.details)
        event_emitter.emit("analysis.truncated", channel=channel or "morse",
                           requested=n_max, available=top + 1)
        n_max = top

    x = _dvr_box(spec, mass, n_max, points)
    dx = x[1] - x[0]
    potential = spec.D * (1.0 - np.exp(-spec.beta_morse * (x - spec.q0))) ** 2
    hamiltonian = _sinc_dvr_kinetic(len(x), dx, mass) + np.diag(potential)
    values, vectors = linalg.eigh(hamiltonian, subset_by_index=[0, n_max])

    functions = vectors.T / math.sqrt(dx)
    # outermost lobe positive, matching the Laguerre form
    for row in functions:
        outer_lobe = np.nonzero(np.abs(row) > 1e-3 * np.abs(row).max())[0][-1]
        if row[outer_lobe] < 0:
            row *= -1.0

    logger.debug(f"Morse DVR solved with {len(x)} points for {n_max + 1} states",
                 extra={"points": len(x), "states": n_max + 1})
    return MorseStates(energies=morse_energies(spec, mass, n_max), grid_energies=values,
                       x=x, functions=functions)
