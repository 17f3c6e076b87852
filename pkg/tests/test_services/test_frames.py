import math

import numpy as np
import pytest

from app.core.constants import ANGSTROM, UNITS
from app.schemas.frames import ChemCoords, ScalingParams
from app.services.frames import (
    channel_geometry,
    channel_params,
    chem_to_sim,
    design_report,
    from_sim,
    initial_velocity,
    mass_factors,
    momentum_to_sim,
    scale_potential,
    scaled_channel_morse,
    sim_to_chem,
    solve_l,
    to_chem,
    to_sim,
)
from app.services.potentials import harmonic_params, leps_energy
from app.utils.config_parser import load_config
from app.utils.errors import DomainError


@pytest.fixture
def fh2_channels(fh2_surface, fh2_masses, fh2_factors, li_scaling):
    return channel_params(fh2_surface, fh2_masses, fh2_factors, li_scaling)


def test_mass_factors_of_fh2(fh2_factors):
    assert fh2_factors.a == pytest.approx(5.48e-14, rel=5e-3)
    assert fh2_factors.b == pytest.approx(3.98e-14, rel=5e-3)
    assert fh2_factors.beta_degrees == pytest.approx(46.45, abs=0.1)


def test_chem_sim_round_trip(fh2_factors, li_scaling):
    q1 = np.array([0.8, 0.917, 1.5, 3.0]) * ANGSTROM
    q2 = np.array([0.742, 2.0, 0.9, 1.1]) * ANGSTROM

    back1, back2 = sim_to_chem(*chem_to_sim(q1, q2, fh2_factors, li_scaling), fh2_factors, li_scaling)

    np.testing.assert_allclose(back1, q1, rtol=1e-14)
    np.testing.assert_allclose(back2, q2, rtol=1e-14)


def test_schema_round_trip_keeps_centre_of_mass(fh2_factors, li_scaling):
    coords = ChemCoords(q1=1.2 * ANGSTROM, q2=0.8 * ANGSTROM, r_cm=3e-6)
    back = to_chem(to_sim(coords, fh2_factors, li_scaling), fh2_factors, li_scaling, r_cm=coords.r_cm)

    assert back.q1 == pytest.approx(coords.q1, rel=1e-14)
    assert back.q2 == pytest.approx(coords.q2, rel=1e-14)
    assert back.r_cm == coords.r_cm


def test_lab_positions_reproduce_bond_lengths(fh2_masses, fh2_factors, li_scaling):
    q1, q2, r_cm = 1.3 * ANGSTROM, 0.9 * ANGSTROM, 2e-10
    sim = to_sim(ChemCoords(q1=q1, q2=q2), fh2_factors, li_scaling)

    lab = from_sim(sim, fh2_masses, fh2_factors, li_scaling, r_cm=r_cm)

    assert lab.q1 == pytest.approx(q1, rel=1e-9)
    assert lab.q2 == pytest.approx(q2, rel=1e-9)
    centre = (fh2_masses.m_a * lab.x_a + fh2_masses.m_b * lab.x_b + fh2_masses.m_c * lab.x_c) / fh2_masses.total
    assert centre == pytest.approx(r_cm, rel=1e-9)


def test_momenta_are_scaled_velocities(fh2_masses, fh2_factors, li_scaling):
    v_a, v_b, v_c = 120.0, -300.0, 450.0
    p_a, p_b, p_c = fh2_masses.m_a * v_a, fh2_masses.m_b * v_b, fh2_masses.m_c * v_c

    momenta = momentum_to_sim(p_a, p_b, p_c, fh2_masses, fh2_factors, li_scaling)

    Q1_dot, Q2_dot = chem_to_sim(v_b - v_a, v_c - v_b, fh2_factors, li_scaling)
    weight = li_scaling.m_tilde * li_scaling.l ** 2
    assert momenta.p_q1 == pytest.approx(weight * Q1_dot, rel=1e-12)
    assert momenta.p_q2 == pytest.approx(weight * Q2_dot, rel=1e-12)
    assert momenta.p_cm == pytest.approx(p_a + p_b + p_c)


def test_kinetic_energy_is_diagonal_in_scaled_momenta(fh2_masses, fh2_factors, li_scaling):
    rng = np.random.default_rng(7)
    weight = li_scaling.m_tilde * li_scaling.l ** 2
    masses = np.array([fh2_masses.m_a, fh2_masses.m_b, fh2_masses.m_c])

    for p_a, p_b, p_c in rng.normal(scale=1e-23, size=(1000, 3)):
        momenta = momentum_to_sim(p_a, p_b, p_c, fh2_masses, fh2_factors, li_scaling)
        lab = float(np.sum(np.array([p_a, p_b, p_c]) ** 2 / (2 * masses)))
        scaled = momenta.p_cm ** 2 / (2 * fh2_masses.total) + (momenta.p_q1 ** 2 + momenta.p_q2 ** 2) / (2 * weight)
        assert scaled == pytest.approx(lab, rel=1e-12)


def test_scaled_potential_multiplies_by_l_squared(fh2_surface, fh2_factors, li_scaling):
    potential = scale_potential(fh2_surface, fh2_factors, li_scaling)
    q1, q2 = 1.1 * ANGSTROM, 0.95 * ANGSTROM

    value = potential(*chem_to_sim(q1, q2, fh2_factors, li_scaling))

    assert value == pytest.approx(li_scaling.l ** 2 * leps_energy(fh2_surface, q1, q2), rel=1e-12)


def test_design_values_for_lithium(fh2_channels):
    assert fh2_channels.nu_tilde_2 == pytest.approx(5.66e3, rel=1e-2)
    assert fh2_channels.nu_tilde_1 == pytest.approx(5.34e3, rel=1e-2)
    assert fh2_channels.v_tilde_2 * UNITS.joule_to_microkelvin == pytest.approx(2.4, rel=2e-2)
    assert fh2_channels.v_tilde_1 * UNITS.joule_to_microkelvin == pytest.approx(3.0, rel=3e-2)


def test_angstrom_maps_to_micrometres(fh2_channels):
    # F moved along the reactant channel
    assert fh2_channels.length_scale_reactant * ANGSTROM == pytest.approx(7.8e-6, rel=1e-2)


def test_frequencies_agree_with_scaled_force_constants(fh2_channels, li_scaling):
    for channel in (1, 2):
        k_tilde = getattr(fh2_channels, f"k_tilde_{channel}")
        nu_tilde = getattr(fh2_channels, f"nu_tilde_{channel}")
        assert math.sqrt(k_tilde / li_scaling.m_tilde) / (2 * math.pi) == pytest.approx(nu_tilde, rel=1e-12)


@pytest.mark.parametrize("channel", [1, 2])
def test_scaled_morse_has_the_channel_harmonics(fh2_surface, fh2_factors, li_scaling, fh2_channels, channel):
    scaled = scaled_channel_morse(fh2_surface, fh2_factors, li_scaling, channel)
    harmonic = harmonic_params(scaled)

    assert harmonic.K == pytest.approx(getattr(fh2_channels, f"k_tilde_{channel}"), rel=1e-12)
    assert harmonic.nu == pytest.approx(getattr(fh2_channels, f"nu_tilde_{channel}"), rel=1e-12)
    assert scaled.q0 == pytest.approx(getattr(fh2_channels, f"chi_{channel}0"), rel=1e-12)


def test_valley_axes_meet_at_the_equilibrium_corner(fh2_surface, fh2_factors, li_scaling, fh2_channels):
    geometry = channel_geometry(fh2_channels, fh2_factors, li_scaling)
    expected = chem_to_sim(fh2_surface.ab.q0, fh2_surface.bc.q0, fh2_factors, li_scaling)

    assert geometry.corner == pytest.approx(expected, rel=1e-12)
    assert fh2_channels.chi_10 == pytest.approx(5.18e-6, rel=1e-2)
    assert fh2_channels.chi_20 == pytest.approx(3.04e-6, rel=1e-2)
    assert geometry.reactant.oscillator_length == pytest.approx(0.506e-6, rel=1e-2)

    product = geometry.frame("product")
    assert product.transverse_coordinate(*expected) == pytest.approx(product.chi0, rel=1e-12)
    assert np.dot(product.longitudinal, product.transverse) == pytest.approx(0.0, abs=1e-15)


def test_thermal_velocity(fh2_masses, fh2_factors, li_scaling):
    velocity = initial_velocity(298.0, fh2_masses, fh2_factors, li_scaling)
    assert velocity.v_q1 == pytest.approx(5e-3, rel=2e-2)
    assert velocity.v_q2 == 0.0
    assert initial_velocity(0.0, fh2_masses, fh2_factors, li_scaling).v_q1 == 0.0
    with pytest.raises(DomainError):
        initial_velocity(-1.0, fh2_masses, fh2_factors, li_scaling)


def test_solve_l_inverts_the_design(fh2_surface, fh2_masses):
    l = solve_l(5.657e3, 2, fh2_surface, fh2_masses, 1.1526e-26)
    assert l == pytest.approx(6.55e-6, rel=5e-3)

    factors = mass_factors(fh2_masses)
    params = channel_params(fh2_surface, fh2_masses, factors, ScalingParams(m_tilde=1.1526e-26, l=l))
    assert params.nu_tilde_2 == pytest.approx(5.657e3, rel=1e-12)


@pytest.mark.parametrize("target, channel, m_tilde", [(0.0, 2, 1e-26), (5e3, 3, 1e-26), (5e3, 2, -1.0)])
def test_solve_l_rejects_bad_input(fh2_surface, fh2_masses, target, channel, m_tilde):
    with pytest.raises(DomainError):
        solve_l(target, channel, fh2_surface, fh2_masses, m_tilde)


def test_design_report_from_bundled_config(bundled_config):
    config = load_config(bundled_config("fh2_li7.cfg"))
    simulator = config.simulator

    report = design_report(config.reaction.surface, config.reaction.masses, simulator.m_tilde,
                           simulator.temperature, l=simulator.l)
    fields = report.to_json_dict()

    assert fields["nu_tilde_2_hz"] == pytest.approx(5.66e3, rel=1e-2)
    assert fields["nu_tilde_1_hz"] == pytest.approx(5.34e3, rel=1e-2)
    assert fields["v_tilde_2_uK"] == pytest.approx(2.4, rel=2e-2)
    assert fields["v_tilde_1_uK"] == pytest.approx(3.0, rel=3e-2)
    assert fields["v_q1_mm_s"] == pytest.approx(5.0, rel=2e-2)
    assert report.tau_scale == pytest.approx(1.0 / simulator.l ** 2)


def test_design_report_needs_one_scale(fh2_surface, fh2_masses):
    with pytest.raises(DomainError):
        design_report(fh2_surface, fh2_masses, 1.1526e-26, 298.0)
    with pytest.raises(DomainError):
        design_report(fh2_surface, fh2_masses, 1.1526e-26, 298.0, l=6.55e-6, target_frequency=5657.0)

    report = design_report(fh2_surface, fh2_masses, 1.1526e-26, 298.0, target_frequency=5657.0)
    assert report.nu_tilde_2 == pytest.approx(5657.0, rel=1e-12)


def test_design_report_at_zero_temperature(fh2_surface, fh2_masses):
    report = design_report(fh2_surface, fh2_masses, 1.1526e-26, 0.0, l=6.55e-6)

    assert report.v_q1 == 0.0
    assert report.temperature == 0.0
    assert report.nu_tilde_2 == pytest.approx(5.66e3, rel=1e-2)
    with pytest.raises(DomainError):
        design_report(fh2_surface, fh2_masses, 1.1526e-26, -1.0, l=6.55e-6)
