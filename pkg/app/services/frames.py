"""Chemical frame <-> simulation frame: mass-weighted coordinates and their scaling.

q1 = x_B - x_A and q2 = x_C - x_B live in the chemical frame; (Q1, Q2) is the
position of a single atom of mass m_tilde on a 2D waveguide surface scaled by l^2.
"""
import math
from typing import Optional, Tuple

import numpy as np

from app.core.constants import K_B, PLANCK
from app.core.logging_config import get_logger
from app.schemas.frames import (
    ChannelFrame,
    ChannelGeometry,
    ChannelParams,
    ChemCoords,
    DesignReport,
    InitialVelocity,
    LabPositions,
    MassFactors,
    ScalingParams,
    SimCoords,
    SimMomenta,
)
from app.schemas.reaction import DiatomSpec, LepsSurface, MassTriple
from app.services.potentials import harmonic_params, leps_energy
from app.utils.errors import DomainError

logger = get_logger(__name__)


def mass_factors(masses: MassTriple) -> MassFactors:
    M = masses.total
    a = math.sqrt(masses.m_a * (masses.m_b + masses.m_c) / M)
    b = math.sqrt(masses.m_c * (masses.m_b + masses.m_a) / M)
    beta_angle = math.atan(math.sqrt(masses.m_b * M / (masses.m_a * masses.m_c)))
    return MassFactors(a=a, b=b, beta_angle=beta_angle)


def chem_to_sim(q1, q2, factors: MassFactors, scaling: ScalingParams) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized forward map (q1, q2) -> (Q1, Q2)."""
    root = scaling.length_factor
    Q1 = (factors.a * np.asarray(q1) + factors.b * np.asarray(q2) * math.cos(factors.beta_angle)) / root
    Q2 = factors.b * np.asarray(q2) * math.sin(factors.beta_angle) / root
    return Q1, Q2


def sim_to_chem(Q1, Q2, factors: MassFactors, scaling: ScalingParams) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized inverse map (Q1, Q2) -> (q1, q2); needs sin(beta) != 0."""
    root = scaling.length_factor
    q2 = root * np.asarray(Q2) / (factors.b * math.sin(factors.beta_angle))
    q1 = (root * np.asarray(Q1) - factors.b * q2 * math.cos(factors.beta_angle)) / factors.a
    return q1, q2


def to_sim(coords: ChemCoords, factors: MassFactors, scaling: ScalingParams) -> SimCoords:
    Q1, Q2 = chem_to_sim(coords.q1, coords.q2, factors, scaling)
    return SimCoords(Q1=float(Q1), Q2=float(Q2))


def to_chem(coords: SimCoords, factors: MassFactors, scaling: ScalingParams,
            r_cm: float = 0.0) -> ChemCoords:
    q1, q2 = sim_to_chem(coords.Q1, coords.Q2, factors, scaling)
    return ChemCoords(q1=float(q1), q2=float(q2), r_cm=r_cm)


def from_sim(coords: SimCoords, masses: MassTriple, factors: MassFactors,
             scaling: ScalingParams, r_cm: float = 0.0) -> LabPositions:
    """
    Lab-frame positions of the three atoms.

    x_A carries the factor a so that x_B - x_A reproduces q1; x_B follows from
    the centre of mass staying at r_cm.
    """
    root = scaling.length_factor
    sin_b, cos_b = math.sin(factors.beta_angle), math.cos(factors.beta_angle)
    x_a = r_cm - factors.a * root * coords.Q1 / masses.m_a
    x_c = r_cm + factors.b * root * (cos_b * coords.Q1 + sin_b * coords.Q2) / masses.m_c
    x_b = (masses.total * r_cm - masses.m_a * x_a - masses.m_c * x_c) / masses.m_b
    return LabPositions(x_a=x_a, x_b=x_b, x_c=x_c)


def momentum_to_sim(p_a: float, p_b: float, p_c: float, masses: MassTriple,
                    factors: MassFactors, scaling: ScalingParams) -> SimMomenta:
    """Conjugate momenta of (R_CM, Q1, Q2) from lab momenta."""
    l_root = scaling.length_factor
    m_bc = masses.m_b + masses.m_c
    p_q1 = l_root * factors.a / m_bc * (-(m_bc / masses.m_a) * p_a + p_b + p_c)
    p_q2 = factors.b * l_root * math.sin(factors.beta_angle) * (p_c / masses.m_c - p_b / masses.m_b)
    return SimMomenta(p_cm=p_a + p_b + p_c, p_q1=p_q1, p_q2=p_q2)


class ScaledPotential:
    """V_Q(Q1, Q2) = l^2 V(q1(Q), q2(Q)) in joules."""

    def __init__(self, surface: LepsSurface, factors: MassFactors, scaling: ScalingParams):
        self.surface = surface
        self.factors = factors
        self.scaling = scaling

    @property
    def energy_scale(self) -> float:
        return self.scaling.l ** 2

    def chem_coordinates(self, Q1, Q2):
        return sim_to_chem(Q1, Q2, self.factors, self.scaling)

    def __call__(self, Q1, Q2):
        q1, q2 = self.chem_coordinates(Q1, Q2)
        return self.energy_scale * leps_energy(self.surface, q1, q2)


def scale_potential(surface: LepsSurface, factors: MassFactors, scaling: ScalingParams) -> ScaledPotential:
    return ScaledPotential(surface, factors, scaling)


def _channel_root_mass(masses: MassTriple, channel: int) -> float:
    return math.sqrt(masses.mu_ab if channel == 1 else masses.mu_bc)


def _channel_factor(factors: MassFactors, channel: int) -> float:
    """a sin(beta) for the products, b sin(beta) for the reactants."""
    weight = factors.a if channel == 1 else factors.b
    return weight * math.sin(factors.beta_angle)


def channel_params(surface: LepsSurface, masses: MassTriple, factors: MassFactors,
                   scaling: ScalingParams) -> ChannelParams:
    """
    Rotated harmonic channels of the scaled surface.

    The transverse frequencies follow from l^2 sqrt(mu_j) nu_j / (a|b sin beta);
    (1/2 pi) sqrt(K_tilde_j / m_tilde) is the same number by another route.
    """
    root = scaling.length_factor
    l4 = scaling.l ** 4
    sin_b = math.sin(factors.beta_angle)

    chi_10 = factors.a * surface.ab.q0 * sin_b / root
    chi_20 = factors.b * surface.bc.q0 * sin_b / root

    values = {}
    for channel in (1, 2):
        spec = surface.channel_diatom(channel)
        harmonic = harmonic_params(spec)
        denominator = _channel_factor(factors, channel)
        values[f"k_tilde_{channel}"] = harmonic.K * scaling.m_tilde * l4 / denominator ** 2
        values[f"nu_tilde_{channel}"] = (scaling.l ** 2 * _channel_root_mass(masses, channel)
                                         * harmonic.nu / denominator)
        values[f"v_tilde_{channel}"] = spec.D * scaling.l ** 2

    return ChannelParams(
        chi_10=chi_10,
        chi_20=chi_20,
        length_scale_product=factors.b / root,
        length_scale_reactant=factors.a / root,
        **values,
    )


def channel_geometry(params: ChannelParams, factors: MassFactors, scaling: ScalingParams) -> ChannelGeometry:
    sin_b, cos_b = math.sin(factors.beta_angle), math.cos(factors.beta_angle)
    product = ChannelFrame(
        channel=1,
        longitudinal=(cos_b, sin_b),
        transverse=(sin_b, -cos_b),
        chi0=params.chi_10,
        omega=2.0 * math.pi * params.nu_tilde_1,
        mass=scaling.m_tilde,
    )
    reactant = ChannelFrame(
        channel=2,
        longitudinal=(1.0, 0.0),
        transverse=(0.0, 1.0),
        chi0=params.chi_20,
        omega=2.0 * math.pi * params.nu_tilde_2,
        mass=scaling.m_tilde,
    )
    return ChannelGeometry(beta_angle=factors.beta_angle, product=product, reactant=reactant)


def scaled_channel_morse(surface: LepsSurface, factors: MassFactors, scaling: ScalingParams,
                         channel: int) -> DiatomSpec:
    """
    Transverse Morse profile of an asymptotic channel in the simulation frame.

    Depth l^2 D_j, range beta_j sqrt(m_tilde) l / (a|b sin beta), centred on chi_j0.
    """
    spec = surface.channel_diatom(channel)
    denominator = _channel_factor(factors, channel)
    return DiatomSpec(
        D=spec.D * scaling.l ** 2,
        beta_morse=spec.beta_morse * scaling.length_factor / denominator,
        q0=spec.q0 * denominator / scaling.length_factor,
        mu=scaling.m_tilde,
    )


def solve_l(target_nu_tilde: float, channel: int, surface: LepsSurface, masses: MassTriple,
            m_tilde: float) -> float:
    """
    Scaling factor that puts the transverse frequency of `channel` at the target.

    The transverse frequency does not depend on m_tilde; it is validated only.
    """
    if not math.isfinite(target_nu_tilde) or target_nu_tilde <= 0:
        raise DomainError("Target frequency must be positive", details={"target": target_nu_tilde})
    if not math.isfinite(m_tilde) or m_tilde <= 0:
        raise DomainError("Simulator mass must be positive", details={"m_tilde": m_tilde})
    if channel not in (1, 2):
        raise DomainError(f"channel must be 1 or 2, got {channel}")
    factors = mass_factors(masses)
    nu = harmonic_params(surface.channel_diatom(channel)).nu
    l_squared = target_nu_tilde * _channel_factor(factors, channel) / (_channel_root_mass(masses, channel) * nu)
    return math.sqrt(l_squared)


def initial_velocity(temperature: float, masses: MassTriple, factors: MassFactors,
                     scaling: ScalingParams) -> InitialVelocity:
    """Thermal launch velocity along Q1; the transverse velocity is zero."""
    if not math.isfinite(temperature) or temperature < 0:
        raise DomainError("Temperature must be non-negative", details={"temperature": temperature})
    m_bc = masses.m_b + masses.m_c
    v_q1 = (factors.a * scaling.l * math.sqrt(K_B * temperature / (scaling.m_tilde * masses.m_a))
            * (1.0 + math.sqrt(masses.m_a / m_bc)))
    return InitialVelocity(v_q1=v_q1, v_q2=0.0)


def design_report(surface: LepsSurface, masses: MassTriple, m_tilde: float, temperature: float,
                  l: Optional[float] = None, target_frequency: Optional[float] = None,
                  target_channel: int = 2) -> DesignReport:
    """
    Collect every waveguide parameter of the experiment; give l or a target frequency.

    Any temperature >= 0 K is accepted; at 0 K the launch velocity is zero.
    """
    if (l is None) == (target_frequency is None):
        raise DomainError("Exactly one of l and target_frequency must be given")
    if l is None:
        l = solve_l(target_frequency, target_channel, surface, masses, m_tilde)
        logger.info(f"Solved scaling factor l = {l:.6e} for target {target_frequency:.6g} Hz",
                    extra={"l": l, "target_frequency": target_frequency, "channel": target_channel})

    factors = mass_factors(masses)
    scaling = ScalingParams(m_tilde=m_tilde, l=l)
    params = channel_params(surface, masses, factors, scaling)
    velocity = initial_velocity(temperature, masses, factors, scaling)

    return DesignReport(
        nu_tilde_1=params.nu_tilde_1,
        nu_tilde_2=params.nu_tilde_2,
        v_tilde_1=params.v_tilde_1,
        v_tilde_2=params.v_tilde_2,
        v_q1=velocity.v_q1,
        length_scale_product=params.length_scale_product,
        length_scale_reactant=params.length_scale_reactant,
        chi_10=params.chi_10,
        chi_20=params.chi_20,
        k_tilde_1=params.k_tilde_1,
        k_tilde_2=params.k_tilde_2,
        tau_scale=1.0 / l ** 2,
        l=l,
        m_tilde=m_tilde,
        temperature=temperature,
    )


def transverse_period(params: ChannelParams) -> float:
    """Shortest transverse oscillation period of the two channels, s."""
    return 1.0 / max(params.nu_tilde_1, params.nu_tilde_2)


def zero_point_energy(nu: float) -> float:
    """Half a vibrational quantum, h nu / 2."""
    return 0.5 * PLANCK * nu
