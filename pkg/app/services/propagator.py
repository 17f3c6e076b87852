"""
Split-operator propagation of the scaled 2D Schrodinger equation.

Phase factors are built in reduced units (hbar = m_tilde = 1, length = reactant
transverse oscillator length, energy = h nu_tilde_2, time = 1 / omega_tilde_2);
amplitudes stay in SI because the equation is linear in them.
"""
import math
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy import fft as sfft
from scipy.integrate import solve_ivp

from app.core import settings
from app.core.constants import HBAR
from app.core.events import event_emitter
from app.core.logging_config import get_logger, log_operation_failed, log_operation_start, log_operation_success
from app.models.grid import Grid2D
from app.models.wavefunction import Wavefunction
from app.schemas.frames import ChannelFrame, ChannelGeometry
from app.schemas.propagation import CAPSpec, Schedule, SnapshotRecord, WavePacketSpec
from app.services.vibrational import harmonic_state
from app.utils.errors import BookkeepingError, ConfigurationError, NumericalError, ResolutionError

logger = get_logger(__name__)

PHASE_LIMIT = 0.5
BOOKKEEPING_TOLERANCE = 1e-6
# reflected and transmitted shares a strip may leave at the design velocity
CAP_TOLERANCE = 1e-4
# points required per half-wavelength of the transverse state
POINTS_PER_NODE = 8
ZONES = ("reactant", "product")


class ReducedUnits(BaseModel):
    """hbar = mass = 1 and the time unit is 1 / omega."""

    mass: float
    omega: float

    class Config:
        allow_mutation = False

    @classmethod
    def for_channel(cls, frame: ChannelFrame) -> "ReducedUnits":
        return cls(mass=frame.mass, omega=frame.omega)

    @property
    def length(self) -> float:
        return math.sqrt(HBAR / (self.mass * self.omega))

    @property
    def energy(self) -> float:
        return HBAR * self.omega

    @property
    def time(self) -> float:
        return 1.0 / self.omega


class CapRaster(BaseModel):
    """Absorbing rate Gamma (J) on the grid and the zone each absorbing cell belongs to."""

    gamma: np.ndarray
    zones: Dict[str, np.ndarray]

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False


class PropagationResult(BaseModel):
    final: Wavefunction
    snapshots: List[SnapshotRecord]
    wavefunctions: List[Wavefunction]
    absorbed: Dict[str, float]
    n_steps: int
    initial_total: float

    class Config:
        arbitrary_types_allowed = True

    @property
    def total_probability(self) -> float:
        return self.final.norm() + sum(self.absorbed.values())

    @property
    def bookkeeping_error(self) -> float:
        return abs(self.total_probability - self.initial_total)


def potential_raster(potential: Callable, grid: Grid2D, clip: float) -> np.ndarray:
    """
    Potential on the grid in joules, clamped from above at `clip`.

    The exponential walls overflow at tiny bond lengths; those cells take the
    clip value too.
    """
    Q1, Q2 = grid.mesh()
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(potential(Q1, Q2), dtype=float)
    values = np.where(np.isfinite(values), values, clip)
    return np.minimum(values, clip)


def cap_raster(grid: Grid2D, cap: CAPSpec) -> CapRaster:
    """
    Reactant strip at the high-Q1 edge, product strip at the high-Q2 edge.

    Gamma = strength * (depth / width)^power; overlapping cells go to the stronger strip.
    """
    Q1, Q2 = grid.mesh()
    depth1 = np.clip(Q1 - (grid.q1_max - cap.width), 0.0, None)
    depth2 = np.clip(Q2 - (grid.q2_max - cap.width), 0.0, None)
    gamma1 = cap.strength * (depth1 / cap.width) ** cap.power
    gamma2 = cap.strength * (depth2 / cap.width) ** cap.power
    gamma = np.maximum(gamma1, gamma2)
    zones = {
        "reactant": (gamma1 > 0) & (gamma1 >= gamma2),
        "product": (gamma2 > 0) & (gamma2 > gamma1),
    }
    return CapRaster(gamma=gamma, zones=zones)


def in_cap_zone(grid: Grid2D, cap: CAPSpec, Q1: float, Q2: float) -> bool:
    return Q1 >= grid.q1_max - cap.width or Q2 >= grid.q2_max - cap.width


class CapReflection(BaseModel):
    velocity: float
    reflection: float
    transmission: float

    class Config:
        allow_mutation = False

    @property
    def absorbed(self) -> float:
        return 1.0 - self.reflection - self.transmission

    @property
    def acceptable(self) -> bool:
        return self.reflection < CAP_TOLERANCE and self.transmission < CAP_TOLERANCE


def cap_reflection(cap: CAPSpec, mass: float, velocity: float) -> CapReflection:
    """
    Reflected and transmitted shares of a plane wave meeting one absorbing strip.

    The stationary equation is integrated across the strip in units of the
    incident wavenumber, from the outgoing wave beyond the grid edge back to
    the free side, where the solution splits into incident and reflected parts.

    Raises:
        ConfigurationError: velocity not strictly positive
        NumericalError: the integration failed
    """
    if not math.isfinite(velocity) or velocity <= 0:
        raise ConfigurationError("CAP reflection needs a strictly positive velocity", details={"velocity": velocity})
    energy = 0.5 * mass * velocity ** 2
    depth = mass * velocity / HBAR * cap.width

    def rhs(x, y):
        gamma = cap.strength * (x / depth) ** cap.power
        return [y[1], -(1.0 + 1j * gamma / energy) * y[0]]

    outgoing = np.exp(1j * depth)
    solution = solve_ivp(rhs, (depth, 0.0), [outgoing, 1j * outgoing], method="DOP853", rtol=1e-10, atol=1e-12)
    if not solution.success:
        raise NumericalError(f"CAP reflection integration failed: {solution.message}",
                             details={"velocity": velocity, "width": cap.width})
    psi, dpsi = solution.y[:, -1]
    incident = 0.5 * (psi - 1j * dpsi)
    reflected = 0.5 * (psi + 1j * dpsi)
    return CapReflection(
        velocity=velocity,
        reflection=float(abs(reflected / incident) ** 2),
        transmission=float(1.0 / abs(incident) ** 2),
    )


def check_resolution(grid: Grid2D, frame: ChannelFrame, n: int) -> None:
    """
    Raises:
        ResolutionError: fewer than POINTS_PER_NODE points per node spacing of state n
    """
    spacing = math.pi * frame.oscillator_length / math.sqrt(2 * n + 1)
    cell = max(grid.dx1, grid.dx2)
    if spacing < POINTS_PER_NODE * cell:
        raise ResolutionError(
            f"Transverse state n={n} is not resolved: node spacing {spacing:.3e} m "
            f"needs grid spacing below {spacing / POINTS_PER_NODE:.3e} m",
            details={"n": n, "node_spacing": spacing, "dx1": grid.dx1, "dx2": grid.dx2},
        )


def init_wavepacket(spec: WavePacketSpec, grid: Grid2D, geometry: ChannelGeometry,
                    cap: Optional[CAPSpec] = None) -> Wavefunction:
    """
    Gaussian along the channel times the transverse harmonic eigenstate n.

    Raises:
        ConfigurationError: centre outside the grid or inside an absorbing strip
        ResolutionError: transverse state not resolved
    """
    frame = geometry.frame(spec.channel_number)
    center = frame.point(spec.center, frame.chi0)
    if not grid.contains(*center):
        raise ConfigurationError("Wave packet centre lies outside the grid",
                                 details={"center": center, "grid": grid.to_dict()})
    if cap is not None and in_cap_zone(grid, cap, *center):
        raise ConfigurationError("Wave packet centre lies inside an absorbing zone",
                                 details={"center": center, "cap_width": cap.width})
    check_resolution(grid, frame, spec.n)

    Q1, Q2 = grid.mesh()
    s = frame.longitudinal_coordinate(Q1, Q2)
    chi = frame.transverse_coordinate(Q1, Q2)
    wavenumber = -frame.mass * spec.velocity / HBAR

    envelope = np.exp(-((s - spec.center) ** 2) / (4.0 * spec.width ** 2))
    transverse = harmonic_state(spec.n, chi - frame.chi0, frame.mass, frame.omega)
    amplitudes = envelope * np.exp(1j * wavenumber * s) * transverse
    amplitudes /= math.sqrt(np.sum(np.abs(amplitudes) ** 2) * grid.cell_area)

    logger.debug(f"Initial {spec.channel} packet at {center}",
                 extra={"channel": spec.channel, "center": center, "velocity": spec.velocity, "n": spec.n})
    return Wavefunction(amplitudes, grid, time=0.0, step=0)


class SplitOperatorPropagator:
    """
    Strang splitting exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) with the CAP
    folded into the potential half-steps as exp(-Gamma dt / 2 hbar).
    """

    def __init__(self, grid: Grid2D, potential: np.ndarray, cap: Optional[CapRaster], mass: float,
                 dt: float, units: Optional[ReducedUnits] = None, workers: Optional[int] = None):
        if not math.isfinite(dt) or dt <= 0:
            raise ConfigurationError("Time step must be positive", details={"dt": dt})
        phase = dt * float(np.max(np.abs(potential))) / HBAR
        if phase >= PHASE_LIMIT:
            raise ConfigurationError(
                f"Time step too large: dt * max|V| / hbar = {phase:.3f} rad (limit {PHASE_LIMIT})",
                details={"dt": dt, "phase": phase},
            )
        self.grid = grid
        self.dt = dt
        self.mass = mass
        self.units = units or ReducedUnits(mass=mass, omega=1.0 / dt)
        self.workers = workers if workers is not None else settings.FFT_WORKERS
        self.potential = potential

        dt_r = dt / self.units.time
        v_r = potential / self.units.energy
        k1, k2 = grid.wavenumbers()
        k1_r, k2_r = k1 * self.units.length, k2 * self.units.length
        # mass in reduced units is m / m_unit
        m_r = mass / self.units.mass
        self.kinetic_phase = np.exp(-0.5j * dt_r * (k1_r ** 2 + k2_r ** 2) / m_r)

        if cap is None:
            gamma_r = np.zeros_like(v_r)
            self.zones = {}
        else:
            gamma_r = cap.gamma / self.units.energy
            self.zones = cap.zones
        self.half_step = np.exp((-1j * v_r - gamma_r) * dt_r / 2.0)
        # fraction of density removed by one half-step
        self.half_loss = 1.0 - np.exp(-gamma_r * dt_r)
        self.absorbing = bool(np.any(gamma_r > 0))

    def _absorb(self, amplitudes: np.ndarray, ledger: Dict[str, float]) -> None:
        if not self.absorbing:
            return
        lost = np.abs(amplitudes) ** 2 * self.half_loss
        for zone, mask in self.zones.items():
            ledger[zone] += float(lost[mask].sum()) * self.grid.cell_area

    def _advance(self, amplitudes: np.ndarray, ledger: Dict[str, float]) -> np.ndarray:
        self._absorb(amplitudes, ledger)
        amplitudes = amplitudes * self.half_step
        spectrum = sfft.fft2(amplitudes, workers=self.workers)
        spectrum *= self.kinetic_phase
        amplitudes = sfft.ifft2(spectrum, workers=self.workers)
        self._absorb(amplitudes, ledger)
        return amplitudes * self.half_step

    def step(self, psi: Wavefunction, ledger: Optional[Dict[str, float]] = None) -> Wavefunction:
        """One time step; absorbed probability is added to `ledger` when given."""
        ledger = ledger if ledger is not None else {zone: 0.0 for zone in ZONES}
        amplitudes = self._advance(psi.amplitudes, ledger)
        return Wavefunction(amplitudes, self.grid, time=psi.time + self.dt, step=psi.step + 1)

    def propagate(self, psi0: Wavefunction, n_steps: int, stride: int = 100,
                  observers: Sequence = (), on_snapshot: Optional[Callable] = None,
                  keep_wavefunctions: bool = True, absorbed: Optional[Dict[str, float]] = None,
                  check_bookkeeping: bool = True) -> PropagationResult:
        """
        Advance `n_steps` steps from psi0.

        Snapshots are taken at the start, every `stride` steps and at the end.
        Observers are callables with a `stride` attribute, called as
        observer(wavefunction) whenever the step count is a multiple of it.

        Raises:
            BookkeepingError: norm plus absorbed probability drifted by more than 1e-6
        """
        ledger = {zone: 0.0 for zone in ZONES}
        if absorbed:
            ledger.update(absorbed)
        initial_total = psi0.norm() + sum(ledger.values())

        operation = f"propagate {n_steps} steps"
        log_operation_start(logger, operation, n_steps=n_steps, dt=self.dt, start_step=psi0.step)
        start_time = time.time()

        snapshots: List[SnapshotRecord] = []
        wavefunctions: List[Wavefunction] = []

        def record(wavefunction: Wavefunction):
            norm = wavefunction.norm()
            snapshots.append(SnapshotRecord(step=wavefunction.step, time=wavefunction.time,
                                            norm=norm, absorbed=dict(ledger)))
            if keep_wavefunctions:
                wavefunctions.append(wavefunction.copy())
            if on_snapshot is not None:
                on_snapshot(wavefunction, snapshots[-1])
            event_emitter.emit("propagation.snapshot", step=wavefunction.step,
                               time=wavefunction.time, norm=norm)

        try:
            amplitudes = psi0.amplitudes.copy()
            step = psi0.step
            current = psi0
            record(current)
            for observer in observers:
                observer(current)

            for i in range(1, n_steps + 1):
                amplitudes = self._advance(amplitudes, ledger)
                step += 1
                snapshot_due = i % stride == 0 or i == n_steps
                observers_due = [observer for observer in observers if i % observer.stride == 0]
                if snapshot_due or observers_due:
                    current = Wavefunction(amplitudes, self.grid, time=psi0.time + i * self.dt, step=step)
                    for observer in observers_due:
                        observer(current)
                    if snapshot_due:
                        record(current)

            final = Wavefunction(amplitudes, self.grid, time=psi0.time + n_steps * self.dt, step=step)
            result = PropagationResult(final=final, snapshots=snapshots, wavefunctions=wavefunctions,
                                       absorbed=dict(ledger), n_steps=n_steps, initial_total=initial_total)

            duration_ms = round((time.time() - start_time) * 1000, 2)
            log_operation_success(logger, operation, duration_ms, norm=final.norm(), absorbed=ledger,
                                  bookkeeping_error=result.bookkeeping_error)
            event_emitter.emit("propagation.completed", n_steps=n_steps, norm=final.norm(),
                               absorbed=dict(ledger))
        except Exception as e:
            duration_ms = round((time.time() - start_time) * 1000, 2)
            log_operation_failed(logger, operation, e, duration_ms)
            raise

        if check_bookkeeping:
            verify_bookkeeping(result)
        return result


def verify_bookkeeping(result: PropagationResult, tolerance: float = BOOKKEEPING_TOLERANCE) -> None:
    if result.bookkeeping_error > tolerance:
        raise BookkeepingError(
            f"Norm plus absorbed probability drifted by {result.bookkeeping_error:.3e}",
            details={"norm": result.final.norm(), "absorbed": result.absorbed,
                     "initial_total": result.initial_total},
        )


def step(psi: Wavefunction, dt: float, potential: np.ndarray, cap: Optional[CapRaster], mass: float,
         units: Optional[ReducedUnits] = None) -> Wavefunction:
    """Single Strang step without keeping a propagator around."""
    return SplitOperatorPropagator(psi.grid, potential, cap, mass, dt, units).step(psi)


def propagate(psi0: Wavefunction, schedule: Schedule, potential: np.ndarray, cap: Optional[CapRaster],
              mass: float, units: Optional[ReducedUnits] = None, **kwargs) -> PropagationResult:
    if schedule.dt is None:
        raise ConfigurationError("Schedule needs an explicit dt here")
    propagator = SplitOperatorPropagator(psi0.grid, potential, cap, mass, schedule.dt, units)
    return propagator.propagate(psi0, schedule.n_steps, stride=schedule.stride, **kwargs)
