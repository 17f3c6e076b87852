"""Observables: saddle point, channel populations, vibrational distributions, contour rasters."""
import math
import time
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy import linalg, ndimage

from app.core import settings
from app.core.constants import HBAR
from app.core.events import event_emitter
from app.core.logging_config import get_logger, log_operation_failed, log_operation_start, log_operation_success
from app.models.grid import Grid2D
from app.models.wavefunction import Wavefunction
from app.schemas.analysis import (
    ChannelPartition,
    ChannelPopulations,
    ContourRaster,
    GridSaddleEstimate,
    SaddleInfo,
    StatePopulation,
    VibrationalDistribution,
)
from app.schemas.frames import MassFactors, ScalingParams
from app.schemas.propagation import CAPSpec
from app.schemas.reaction import DiatomSpec, LepsSurface, MassTriple
from app.services.frames import chem_to_sim, channel_params, mass_factors, scale_potential, zero_point_energy
from app.services.potentials import channel_floor, harmonic_params, leps_energy, leps_gradient, leps_hessian
from app.services.propagator import PropagationResult
from app.services.vibrational import harmonic_basis, morse_bound_states
from app.utils.errors import (
    ConfigurationError,
    DomainError,
    NumericalError,
    SaddleClassificationError,
    SaddleSearchError,
)

logger = get_logger(__name__)

MAX_NEWTON_ITERATIONS = 200
MAX_NEWTON_STEP = 0.05e-10  # m
GRADIENT_TOLERANCE = 1e-10  # relative to D_2 / q_20
# transverse extent of a channel cut, in oscillator lengths around chi0
CUT_INNER = 8.0
CUT_OUTER = 12.0

Window = Tuple[float, float, float, float]


# --- saddle point ---------------------------------------------------------

def default_window(surface: LepsSurface) -> Window:
    """Square (q1, q2) window spanning both valleys and the interaction region."""
    low = 0.55 * min(surface.ab.q0, surface.bc.q0)
    high = max(surface.ab.q0, surface.bc.q0) + 8.0 / min(surface.ab.beta_morse, surface.bc.beta_morse)
    return low, high, low, high


def _check_window(window: Window) -> None:
    q1_lo, q1_hi, q2_lo, q2_hi = window
    if not (q1_lo < q1_hi and q2_lo < q2_hi):
        raise DomainError("Window must satisfy min < max on both axes", details={"window": window})


def mountain_pass(energies: np.ndarray, reactant_seed: Tuple[int, int],
                  product_seed: Tuple[int, int]) -> Tuple[Tuple[int, int], float]:
    """
    Lowest level at which the two seed cells share a connected sublevel set.

    Bisection over the sorted raster values with scipy.ndimage.label; the cell
    holding that level is the pass between the two basins.
    """
    levels = np.unique(energies[np.isfinite(energies)])
    lo = int(np.searchsorted(levels, max(energies[reactant_seed], energies[product_seed])))
    hi = len(levels) - 1

    def connected(level: float) -> bool:
        labels, _ = ndimage.label(energies <= level)
        return labels[reactant_seed] != 0 and labels[reactant_seed] == labels[product_seed]

    if not connected(levels[hi]):
        raise NumericalError("Reactant and product seeds are never connected on the raster")
    while lo < hi:
        mid = (lo + hi) // 2
        if connected(levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    level = float(levels[lo])
    cells = np.argwhere(energies == level)
    index = (int(cells[0][0]), int(cells[0][1]))
    return index, level


def valley_seeds(energies: np.ndarray) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    """Reactant seed on the far-q1 column, product seed on the far-q2 row."""
    reactant = (energies.shape[0] - 1, int(np.argmin(energies[-1, :])))
    product = (int(np.argmin(energies[:, -1])), energies.shape[1] - 1)
    return reactant, product


def estimate_saddle_on_grid(surface: LepsSurface, window: Optional[Window] = None,
                            resolution: int = 201) -> GridSaddleEstimate:
    window = window or default_window(surface)
    _check_window(window)
    q1 = np.linspace(window[0], window[1], resolution)
    q2 = np.linspace(window[2], window[3], resolution)
    energies = leps_energy(surface, q1[:, None], q2[None, :])
    index, level = mountain_pass(energies, *valley_seeds(energies))
    return GridSaddleEstimate(q1=float(q1[index[0]]), q2=float(q2[index[1]]), energy=level, index=index)


def find_saddle(surface: LepsSurface, guess: Optional[Tuple[float, float]] = None,
                max_iterations: int = MAX_NEWTON_ITERATIONS,
                factors: Optional[MassFactors] = None, scaling: Optional[ScalingParams] = None) -> SaddleInfo:
    """
    Newton iteration on the analytic gradient and Hessian.

    Without a guess the raster mountain pass supplies one. Iteration continues
    past the gradient tolerance until the step stalls at round-off.

    Raises:
        SaddleSearchError: no convergence within max_iterations
        SaddleClassificationError: the stationary point is a minimum or maximum
    """
    if guess is None:
        estimate = estimate_saddle_on_grid(surface)
        guess = (estimate.q1, estimate.q2)

    operation = "find_saddle"
    log_operation_start(logger, operation, guess=guess)
    start_time = time.time()

    tolerance = GRADIENT_TOLERANCE * surface.bc.D / surface.bc.q0
    q = np.array(guess, dtype=float)
    last_step = math.inf
    converged = False
    try:
        for iteration in range(1, max_iterations + 1):
            gradient = np.array(leps_gradient(surface, q[0], q[1]))
            gradient_norm = float(np.linalg.norm(gradient))
            if gradient_norm < tolerance and last_step <= 1e-12 * np.linalg.norm(q):
                converged = True
                break
            hessian = leps_hessian(surface, q[0], q[1])
            step = -linalg.solve(hessian, gradient, assume_a="sym")
            length = float(np.linalg.norm(step))
            if length > MAX_NEWTON_STEP:
                step *= MAX_NEWTON_STEP / length
                length = MAX_NEWTON_STEP
            q = q + step
            last_step = length
    except (linalg.LinAlgError, NumericalError) as e:
        duration_ms = round((time.time() - start_time) * 1000, 2)
        log_operation_failed(logger, operation, e, duration_ms)
        raise SaddleSearchError(f"Saddle search broke down: {e}", details={"q": q.tolist()},
                                original_exception=e)

    duration_ms = round((time.time() - start_time) * 1000, 2)
    if not converged:
        error = SaddleSearchError(f"Saddle search did not converge in {max_iterations} iterations",
                                  details={"q": q.tolist(), "guess": list(guess)})
        log_operation_failed(logger, operation, error, duration_ms)
        raise error

    eigenvalues = linalg.eigvalsh(leps_hessian(surface, q[0], q[1]))
    if not eigenvalues[0] < 0 < eigenvalues[1]:
        raise SaddleClassificationError("Stationary point is not a first-order saddle",
                                        details={"q": q.tolist(), "eigenvalues": eigenvalues.tolist()})

    energy = leps_energy(surface, q[0], q[1])
    barrier = energy - channel_floor(surface, 2)
    sim_location = None
    if factors is not None and scaling is not None:
        Q1, Q2 = chem_to_sim(q[0], q[1], factors, scaling)
        sim_location = (float(Q1), float(Q2))

    log_operation_success(logger, operation, duration_ms, iterations=iteration, barrier=barrier)
    event_emitter.emit("saddle.converged", q1=float(q[0]), q2=float(q[1]), barrier=barrier,
                       iterations=iteration)
    return SaddleInfo(q1=float(q[0]), q2=float(q[1]), energy=energy, barrier=barrier,
                      hessian_eigenvalues=(float(eigenvalues[0]), float(eigenvalues[1])),
                      gradient_norm=gradient_norm, iterations=iteration, sim_location=sim_location)


# --- channel populations --------------------------------------------------

def validate_partition(partition: ChannelPartition, grid: Grid2D, cap: CAPSpec) -> None:
    """
    Raises:
        ConfigurationError: an analysis line lies outside the grid or inside an absorbing strip
    """
    reactant_line = partition.reactant_line
    if not grid.q1_min < reactant_line < grid.q1_max - cap.width:
        raise ConfigurationError("Reactant analysis line lies outside the grid or inside the absorbing strip",
                                 details={"line": reactant_line, "cap_start": grid.q1_max - cap.width})

    frame = partition.geometry.product
    reach = CUT_INNER * frame.oscillator_length
    for chi in (frame.chi0 - reach, frame.chi0 + reach):
        Q1, Q2 = frame.point(partition.product_line, chi)
        if not (grid.q1_min <= Q1 < grid.q1_max and grid.q2_min <= Q2 < grid.q2_max - cap.width):
            raise ConfigurationError(
                "Product analysis line lies outside the grid or inside the absorbing strip",
                details={"point": (Q1, Q2), "cap_start": grid.q2_max - cap.width})


def region_populations(psi: Wavefunction, partition: ChannelPartition) -> Dict[str, float]:
    Q1, Q2 = psi.grid.mesh()
    rho = psi.density()
    return {name: float(rho[mask].sum()) * psi.grid.cell_area
            for name, mask in partition.regions(Q1, Q2).items()}


def channel_populations(source: Union[Wavefunction, PropagationResult], partition: ChannelPartition,
                        cap: Optional[CAPSpec] = None,
                        absorbed: Optional[Dict[str, float]] = None) -> ChannelPopulations:
    """
    Reactant, product and interaction probabilities.

    A Wavefunction is integrated over the three regions. A PropagationResult,
    or a Wavefunction given together with an absorbed ledger, adds the
    probability each absorbing strip removed to the matching region.
    """
    if isinstance(source, PropagationResult):
        psi, absorbed = source.final, source.absorbed
    else:
        psi = source
    if cap is not None:
        validate_partition(partition, psi.grid, cap)
    populations = region_populations(psi, partition)
    if absorbed is None:
        return ChannelPopulations(method="region", **populations)
    return ChannelPopulations(
        reactant=populations["reactant"] + absorbed.get("reactant", 0.0),
        product=populations["product"] + absorbed.get("product", 0.0),
        interaction=populations["interaction"],
        method="ledger",
    )


# --- vibrational distributions --------------------------------------------

def _complex_samples(amplitudes: np.ndarray, grid: Grid2D, Q1: np.ndarray, Q2: np.ndarray) -> np.ndarray:
    i, j = grid.fractional_index(Q1, Q2)
    coordinates = np.array([np.ravel(i), np.ravel(j)])
    real = ndimage.map_coordinates(amplitudes.real, coordinates, order=3, mode="constant", cval=0.0)
    imag = ndimage.map_coordinates(amplitudes.imag, coordinates, order=3, mode="constant", cval=0.0)
    return (real + 1j * imag).reshape(np.shape(Q1))


def transverse_samples(partition: ChannelPartition, channel: str, grid: Grid2D) -> Tuple[np.ndarray, float]:
    """Transverse coordinates of a channel cut and their spacing."""
    frame = partition.geometry.frame(channel)
    length = frame.oscillator_length
    low, high = frame.chi0 - CUT_INNER * length, frame.chi0 + CUT_OUTER * length
    if channel == "reactant":
        axis = grid.axis2
        return axis[(axis >= low) & (axis <= high)], grid.dx2
    spacing = 0.5 * min(grid.dx1, grid.dx2)
    return np.arange(low, high, spacing), spacing


def _channel_cuts(psi: Wavefunction, partition: ChannelPartition, channel: str):
    """Transverse cuts (n_s, n_chi) beyond the analysis line, with spacings."""
    grid = psi.grid
    chi, dchi = transverse_samples(partition, channel, grid)
    line = partition.line(channel)
    if channel == "reactant":
        columns = grid.axis1 >= line
        rows = np.isin(grid.axis2, chi)
        return psi.amplitudes[columns][:, rows], chi, grid.dx1, dchi

    frame = partition.geometry.product
    ds = min(grid.dx1, grid.dx2)
    # the product axis leaves the grid through Q2 = q2_max
    s_end = (grid.q2_max + frame.chi0 * math.cos(partition.geometry.beta_angle)) / math.sin(
        partition.geometry.beta_angle)
    s = np.arange(line, s_end, ds)
    S, C = np.meshgrid(s, chi, indexing="ij")
    Q1, Q2 = frame.point(S, C)
    return _complex_samples(psi.amplitudes, grid, Q1, Q2), chi, ds, dchi


def channel_basis(partition: ChannelPartition, channel: str, chi: np.ndarray, basis: str, n_max: int,
                  morse_spec: Optional[DiatomSpec] = None) -> Tuple[np.ndarray, bool]:
    """Basis functions (n_states, len(chi)) on the cut, and whether the request was truncated."""
    frame = partition.geometry.frame(channel)
    if basis == "harmonic":
        return harmonic_basis(n_max, chi - frame.chi0, frame.mass, frame.omega), False
    if basis == "morse":
        if morse_spec is None:
            raise ConfigurationError("Morse projection needs the scaled channel Morse profile")
        states = morse_bound_states(morse_spec, frame.mass, n_max, channel=channel)
        return states.on(chi), len(states.energies) < n_max + 1
    raise ConfigurationError(f"Unknown vibrational basis '{basis}'")


def _distribution(channel: str, basis: str, mode: str, probabilities: np.ndarray, population: float,
                  truncated: bool) -> VibrationalDistribution:
    clipped = np.clip(probabilities, 0.0, 1.0)
    return VibrationalDistribution(
        channel=channel,
        basis=basis,
        mode=mode,
        populations=[StatePopulation(n=n, p=float(p)) for n, p in enumerate(clipped)],
        residual=float(population - clipped.sum()),
        channel_population=float(population),
        truncated=truncated,
    )


def vibrational_distribution(psi: Wavefunction, partition: ChannelPartition, channel: str,
                             basis: str = "harmonic", n_max: int = 5,
                             morse_spec: Optional[DiatomSpec] = None) -> VibrationalDistribution:
    """
    Populations of transverse states in the region beyond a channel's analysis line.

    Each cut across the channel is projected onto the basis and |<phi_n|psi>|^2
    is integrated along the channel.
    """
    cuts, chi, ds, dchi = _channel_cuts(psi, partition, channel)
    functions, truncated = channel_basis(partition, channel, chi, basis, n_max, morse_spec)
    overlaps = cuts @ functions.T * dchi
    probabilities = np.sum(np.abs(overlaps) ** 2, axis=0) * ds
    population = region_populations(psi, partition)[channel]
    return _distribution(channel, basis, "snapshot", probabilities, population, truncated)


class FluxAccumulator:
    """
    Observer for propagate(): integrates the state-resolved probability current
    through a channel's analysis line.

    The first call seeds the ledger with the populations already beyond the
    line, so the result tends to a constant once the packet has left the
    interaction region.
    """

    def __init__(self, partition: ChannelPartition, channel: str, basis: str = "harmonic",
                 n_max: int = 5, stride: int = 10, morse_spec: Optional[DiatomSpec] = None,
                 workers: Optional[int] = None):
        self.partition = partition
        self.channel = channel
        self.basis = basis
        self.n_max = n_max
        self.stride = stride
        self.morse_spec = morse_spec
        self.workers = workers if workers is not None else settings.FFT_WORKERS
        self.frame = partition.geometry.frame(channel)

        self._points = None
        self._functions = None
        self._dchi = None
        self.truncated = False
        self.probabilities = None
        self.population = 0.0
        self._last_time = None
        self._last_flux = None

    def _setup(self, grid: Grid2D) -> None:
        chi, self._dchi = transverse_samples(self.partition, self.channel, grid)
        self._functions, self.truncated = channel_basis(self.partition, self.channel, chi, self.basis,
                                                        self.n_max, self.morse_spec)
        self._points = self.frame.point(self.partition.line(self.channel), chi)

    def _line_flux(self, psi: Wavefunction) -> Tuple[np.ndarray, float]:
        """Probability current per state and in total across the line, 1/s."""
        grid = psi.grid
        k1, k2 = grid.wavenumbers()
        u1, u2 = self.frame.longitudinal
        spectrum = sfft.fft2(psi.amplitudes, workers=self.workers)
        derivative = sfft.ifft2(1j * (k1 * u1 + k2 * u2) * spectrum, workers=self.workers)

        values = _complex_samples(psi.amplitudes, grid, *self._points)
        slopes = _complex_samples(derivative, grid, *self._points)
        coefficients = self._functions @ values * self._dchi
        coefficient_slopes = self._functions @ slopes * self._dchi
        scale = HBAR / self.frame.mass
        per_state = scale * np.imag(np.conj(coefficients) * coefficient_slopes)
        total = scale * float(np.sum(np.imag(np.conj(values) * slopes)) * self._dchi)
        return per_state, total

    def __call__(self, psi: Wavefunction) -> None:
        if self._points is None:
            self._setup(psi.grid)
            seed = vibrational_distribution(psi, self.partition, self.channel, self.basis, self.n_max,
                                            self.morse_spec)
            self.probabilities = seed.probabilities.copy()
            self.population = seed.channel_population

        per_state, total = self._line_flux(psi)
        if self._last_time is not None:
            interval = psi.time - self._last_time
            self.probabilities += 0.5 * (per_state + self._last_flux[0]) * interval
            self.population += 0.5 * (total + self._last_flux[1]) * interval
        self._last_time = psi.time
        self._last_flux = (per_state, total)

    def distribution(self) -> VibrationalDistribution:
        if self.probabilities is None:
            raise ConfigurationError("Flux accumulator was never attached to a propagation")
        return _distribution(self.channel, self.basis, "flux", self.probabilities, self.population,
                             self.truncated)


# --- contour rasters ------------------------------------------------------

def contour_raster(surface: LepsSurface, window: Window, resolution: int = 201, frame: str = "chem",
                   masses: Optional[MassTriple] = None, scaling: Optional[ScalingParams] = None,
                   clip_level: Optional[float] = None) -> ContourRaster:
    """
    V / E_zp over a window of the chemical (q1, q2) or simulation (Q1, Q2) frame.

    E_zp is half a reactant vibrational quantum of the same frame; the default
    clip level is twice the deepest well.
    """
    _check_window(window)
    if resolution < 2:
        raise DomainError(f"Raster resolution must be at least 2, got {resolution}")
    x = np.linspace(window[0], window[1], resolution)
    y = np.linspace(window[2], window[3], resolution)
    X, Y = np.meshgrid(x, y, indexing="ij")

    if frame == "chem":
        with np.errstate(over="ignore", invalid="ignore"):
            energies = leps_energy(surface, X, Y)
        e_zp = zero_point_energy(harmonic_params(surface.bc).nu)
        depth_scale = 1.0
    elif frame == "sim":
        if masses is None or scaling is None:
            raise ConfigurationError("Simulation-frame raster needs masses and scaling parameters")
        factors = mass_factors(masses)
        with np.errstate(over="ignore", invalid="ignore"):
            energies = scale_potential(surface, factors, scaling)(X, Y)
        e_zp = zero_point_energy(channel_params(surface, masses, factors, scaling).nu_tilde_2)
        depth_scale = scaling.l ** 2
    else:
        raise ConfigurationError(f"Unknown frame '{frame}'")

    if clip_level is None:
        clip_level = 2.0 * surface.max_depth * depth_scale / e_zp
    values = np.where(np.isfinite(energies), energies / e_zp, clip_level)
    values = np.minimum(values, clip_level)
    return ContourRaster(frame=frame, x=x, y=y, energies=energies, values=values,
                         zero_point_energy=e_zp, clip_level=clip_level)
