"""Orchestration of whole runs: from a RunConfig to a prepared grid, a propagation and its analysis."""
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from app.core.constants import HBAR
from app.core.events import event_emitter
from app.core.logging_config import get_logger
from app.models.grid import Grid2D
from app.models.wavefunction import Wavefunction
from app.schemas.analysis import ChannelPartition, ChannelPopulations, VibrationalDistribution
from app.schemas.config import RunConfig
from app.schemas.fit import BranchingPreset
from app.schemas.frames import ChannelGeometry, ChannelParams, DesignReport, MassFactors, ScalingParams
from app.schemas.propagation import CAPSpec, Schedule, WavePacketSpec
from app.schemas.reaction import DiatomSpec, LepsSurface, MassTriple
from app.services import analysis
from app.services.frames import (
    channel_geometry,
    channel_params,
    design_report,
    initial_velocity,
    mass_factors,
    scale_potential,
    scaled_channel_morse,
    solve_l,
    transverse_period,
)
from app.services.propagator import (
    PHASE_LIMIT,
    CapRaster,
    CapReflection,
    PropagationResult,
    ReducedUnits,
    SplitOperatorPropagator,
    cap_raster,
    cap_reflection,
    init_wavepacket,
    potential_raster,
)
from app.utils.errors import ConfigurationError

logger = get_logger(__name__)

# default time step as a fraction of the fastest transverse period
DT_PERIOD_FRACTION = 1e-3
# margin kept below the phase-wrap limit when a time step is derived
PHASE_MARGIN = 0.8
COVERAGE_LENGTHS = 8.0
CHANNELS = ("reactant", "product")


class RunSetup(BaseModel):
    """Everything a propagation needs, derived once from a RunConfig."""

    config: RunConfig
    surface: LepsSurface
    masses: MassTriple
    factors: MassFactors
    scaling: ScalingParams
    params: ChannelParams
    geometry: ChannelGeometry
    grid: Grid2D
    potential: np.ndarray
    cap: CAPSpec
    cap_raster: CapRaster
    packet: WavePacketSpec
    partition: ChannelPartition
    schedule: Schedule
    units: ReducedUnits

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def morse_spec(self, channel: str) -> DiatomSpec:
        number = 1 if channel == "product" else 2
        return scaled_channel_morse(self.surface, self.factors, self.scaling, number)

    @property
    def dt(self) -> float:
        return self.schedule.dt


class AnalysisReport(BaseModel):
    step: int
    time: float
    populations: Dict[str, ChannelPopulations]
    distributions: Dict[str, VibrationalDistribution]
    basis_discrepancy: Dict[str, float]

    class Config:
        allow_mutation = False

    def branching_json(self) -> Dict:
        return {
            "step": self.step,
            "time": self.time,
            **{method: populations.to_json_dict() for method, populations in self.populations.items()},
        }

    def distributions_json(self) -> Dict:
        return {
            "step": self.step,
            "time": self.time,
            "distributions": {channel: dist.to_json_dict() for channel, dist in self.distributions.items()},
            "basis_discrepancy": dict(self.basis_discrepancy),
        }


class SimulationService:
    """Builds and runs simulations described by a RunConfig."""

    @classmethod
    def require(cls, config: RunConfig, *blocks: str) -> None:
        """
        Raises:
            ConfigurationError: naming the missing blocks
        """
        missing = config.missing_blocks(*blocks)
        if missing:
            raise ConfigurationError(
                f"Configuration is missing the {', '.join(f'[{block}]' for block in missing)} block",
                details={"missing": missing},
            )

    @classmethod
    def scaling(cls, config: RunConfig) -> ScalingParams:
        cls.require(config, "simulator")
        simulator = config.simulator
        l = simulator.l
        if l is None:
            l = solve_l(simulator.target_frequency, simulator.target_channel, config.reaction.surface,
                        config.reaction.masses, simulator.m_tilde)
        return ScalingParams(m_tilde=simulator.m_tilde, l=l)

    @classmethod
    def design(cls, config: RunConfig, target_frequency: Optional[float] = None) -> DesignReport:
        """Design report; a target frequency given here replaces the configured l."""
        cls.require(config, "simulator")
        simulator = config.simulator
        if target_frequency is None and simulator.l is not None:
            return design_report(config.reaction.surface, config.reaction.masses, simulator.m_tilde,
                                 simulator.temperature, l=simulator.l)
        return design_report(config.reaction.surface, config.reaction.masses, simulator.m_tilde,
                             simulator.temperature,
                             target_frequency=target_frequency or simulator.target_frequency,
                             target_channel=simulator.target_channel)

    @classmethod
    def auto_time_step(cls, params: ChannelParams, potential: np.ndarray) -> float:
        """1e-3 of the fastest transverse period, reduced if the phase guard requires it."""
        dt = DT_PERIOD_FRACTION * transverse_period(params)
        largest = float(np.max(np.abs(potential)))
        if largest > 0:
            dt = min(dt, PHASE_MARGIN * PHASE_LIMIT * HBAR / largest)
        return dt

    @classmethod
    def check_coverage(cls, grid: Grid2D, geometry: ChannelGeometry) -> None:
        """
        Raises:
            ConfigurationError: the reactant valley is not covered to 8 oscillator lengths
        """
        frame = geometry.reactant
        reach = COVERAGE_LENGTHS * frame.oscillator_length
        if not (grid.q2_min <= frame.chi0 - reach and frame.chi0 + reach < grid.q2_max):
            raise ConfigurationError(
                "Grid does not cover the reactant valley to 8 transverse oscillator lengths",
                details={"chi_20": frame.chi0, "reach": reach, "q2_min": grid.q2_min, "q2_max": grid.q2_max},
            )

    @classmethod
    def check_absorber(cls, cap: CAPSpec, mass: float, velocity: float) -> CapReflection:
        """Warn when the strips reflect or let through more than CAP_TOLERANCE at the launch velocity."""
        check = cap_reflection(cap, mass, velocity)
        if not check.acceptable:
            event_emitter.emit("cap.reflection", velocity=velocity, reflection=check.reflection,
                               transmission=check.transmission)
        return check

    @classmethod
    def prepare(cls, config: RunConfig, surface: Optional[LepsSurface] = None,
                preset: Optional[BranchingPreset] = None) -> RunSetup:
        """
        Validate every block and derive the grid, potential, absorbing strips and partition.

        A preset coarsens the grid and stretches the time step, keeping the
        simulated duration.
        """
        cls.require(config, "simulator", "grid", "packet", "cap", "schedule", "analysis")
        surface = surface or config.reaction.surface
        masses = config.reaction.masses
        factors = mass_factors(masses)
        scaling = cls.scaling(config)
        params = channel_params(surface, masses, factors, scaling)
        geometry = channel_geometry(params, factors, scaling)

        grid = config.grid.to_grid()
        if preset is not None:
            grid = grid.with_points(preset.n1, preset.n2)
        cls.check_coverage(grid, geometry)

        clip = 2.0 * surface.max_depth * scaling.l ** 2
        potential = potential_raster(scale_potential(surface, factors, scaling), grid, clip)

        schedule = config.schedule
        dt = schedule.dt if schedule.dt is not None else cls.auto_time_step(params, potential)
        n_steps = schedule.n_steps
        if preset is not None:
            limit = PHASE_MARGIN * PHASE_LIMIT * HBAR / float(np.max(np.abs(potential)))
            stretched = min(dt * preset.dt_factor, limit)
            n_steps = int(math.ceil(n_steps * dt / stretched))
            dt = stretched
        schedule = schedule.copy(update={"dt": dt, "n_steps": n_steps})

        velocity = config.packet.velocity
        if velocity is None:
            velocity = initial_velocity(config.simulator.temperature, masses, factors, scaling).v_q1
        packet = config.packet.to_spec(velocity)
        if velocity > 0:
            cls.check_absorber(config.cap, scaling.m_tilde, velocity)

        partition = ChannelPartition(geometry=geometry, reactant_offset=config.analysis.reactant_offset,
                                     product_offset=config.analysis.product_offset)
        analysis.validate_partition(partition, grid, config.cap)

        logger.info(f"Prepared run on {grid!r} with dt = {dt:.4e} s",
                    extra={"dt": dt, "n_steps": n_steps, "velocity": velocity, "l": scaling.l})
        return RunSetup(
            config=config, surface=surface, masses=masses, factors=factors, scaling=scaling,
            params=params, geometry=geometry, grid=grid, potential=potential, cap=config.cap,
            cap_raster=cap_raster(grid, config.cap), packet=packet, partition=partition,
            schedule=schedule, units=ReducedUnits.for_channel(geometry.reactant),
        )

    @classmethod
    def initial_state(cls, setup: RunSetup) -> Wavefunction:
        return init_wavepacket(setup.packet, setup.grid, setup.geometry, setup.cap)

    @classmethod
    def propagator(cls, setup: RunSetup, workers: Optional[int] = None) -> SplitOperatorPropagator:
        return SplitOperatorPropagator(setup.grid, setup.potential, setup.cap_raster, setup.scaling.m_tilde,
                                       setup.dt, units=setup.units, workers=workers)

    @classmethod
    def flux_accumulators(cls, setup: RunSetup, workers: Optional[int] = None) -> Dict[str, analysis.FluxAccumulator]:
        settings = setup.config.analysis
        return {
            channel: analysis.FluxAccumulator(
                setup.partition, channel, basis=settings.basis, n_max=settings.n_max,
                stride=setup.schedule.flux_stride,
                morse_spec=setup.morse_spec(channel) if settings.basis == "morse" else None,
                workers=workers,
            )
            for channel in CHANNELS
        }

    @classmethod
    def run(cls, setup: RunSetup, psi0: Optional[Wavefunction] = None,
            absorbed: Optional[Dict[str, float]] = None, on_snapshot: Optional[Callable] = None,
            workers: Optional[int] = None, with_flux: bool = True,
            keep_wavefunctions: bool = False) -> Tuple[PropagationResult, Dict[str, VibrationalDistribution]]:
        """
        Propagate to the scheduled step count, resuming from psi0 when given.

        Flux distributions are only meaningful for a run that starts at step 0.
        """
        psi0 = psi0 or cls.initial_state(setup)
        remaining = max(setup.schedule.n_steps - psi0.step, 0)
        accumulators = cls.flux_accumulators(setup, workers) if with_flux and psi0.step == 0 else {}
        result = cls.propagator(setup, workers).propagate(
            psi0, remaining, stride=setup.schedule.stride, observers=list(accumulators.values()),
            on_snapshot=on_snapshot, keep_wavefunctions=keep_wavefunctions, absorbed=absorbed,
        )
        distributions = {channel: accumulator.distribution() for channel, accumulator in accumulators.items()}
        return result, distributions

    @classmethod
    def analyze(cls, setup: RunSetup, psi: Wavefunction,
                absorbed: Optional[Dict[str, float]] = None) -> AnalysisReport:
        """
        Channel populations and vibrational distributions of one wavefunction.

        With the absorbed ledger of the run the ledger populations are added;
        harmonic and Morse projections are both computed and their largest
        population difference reported per channel.
        """
        populations = {"region": analysis.channel_populations(psi, setup.partition, setup.cap)}
        if absorbed is not None:
            populations["ledger"] = analysis.channel_populations(psi, setup.partition, absorbed=absorbed)

        settings = setup.config.analysis
        distributions, discrepancy = {}, {}
        for channel in CHANNELS:
            harmonic = analysis.vibrational_distribution(psi, setup.partition, channel, "harmonic", settings.n_max)
            morse = analysis.vibrational_distribution(psi, setup.partition, channel, "morse", settings.n_max,
                                                      morse_spec=setup.morse_spec(channel))
            distributions[channel] = harmonic if settings.basis == "harmonic" else morse
            shared = min(len(harmonic.populations), len(morse.populations))
            discrepancy[channel] = float(np.max(np.abs(
                harmonic.probabilities[:shared] - morse.probabilities[:shared])))
        return AnalysisReport(step=psi.step, time=psi.time, populations=populations,
                              distributions=distributions, basis_discrepancy=discrepancy)

    @classmethod
    def product_branching(cls, config: RunConfig, surface: LepsSurface,
                          preset: Optional[BranchingPreset] = None) -> float:
        """Reactive probability (product share of the ledger populations) of a coarse run."""
        setup = cls.prepare(config, surface=surface, preset=preset)
        result, _ = cls.run(setup, with_flux=False)
        populations = analysis.channel_populations(result, setup.partition)
        return populations.product / populations.total
