import numpy as np
import pytest

from app.core.constants import ANGSTROM
from app.models.grid import Grid2D
from app.schemas.analysis import ChannelPartition
from app.schemas.propagation import CAPSpec, WavePacketSpec
from app.services.analysis import (
    FluxAccumulator,
    channel_populations,
    contour_raster,
    default_window,
    estimate_saddle_on_grid,
    find_saddle,
    region_populations,
    validate_partition,
    vibrational_distribution,
)
from app.services.frames import channel_geometry, channel_params, sim_to_chem
from app.services.potentials import channel_floor, leps_energy, leps_hessian
from app.services.propagator import init_wavepacket
from app.utils.errors import ConfigurationError, DomainError


@pytest.fixture
def saddle(fh2_surface):
    return find_saddle(fh2_surface)


@pytest.fixture
def geometry(fh2_surface, fh2_masses, fh2_factors, li_scaling):
    params = channel_params(fh2_surface, fh2_masses, fh2_factors, li_scaling)
    return channel_geometry(params, fh2_factors, li_scaling)


@pytest.fixture
def partition(geometry):
    return ChannelPartition(geometry=geometry, reactant_offset=4e-6, product_offset=4e-6)


@pytest.fixture
def grid():
    return Grid2D(0.0, 24e-6, -1.5e-6, 22.5e-6, 128, 128)


@pytest.fixture
def fine_grid():
    # resolves the first excited transverse state
    return Grid2D(0.0, 24e-6, -1.5e-6, 22.5e-6, 256, 256)


@pytest.fixture
def cap():
    return CAPSpec(width=4e-6, strength=1.380649e-30)


def test_saddle_is_advanced(saddle, fh2_surface):
    assert saddle.q1 > fh2_surface.ab.q0
    assert abs(saddle.q2 - fh2_surface.bc.q0) < 0.2 * fh2_surface.bc.q0
    assert 0 < saddle.barrier < 0.1 * fh2_surface.bc.D
    negative, positive = saddle.hessian_eigenvalues
    assert negative < 0 < positive


def test_saddle_is_a_minimax(saddle, fh2_surface):
    _, vectors = np.linalg.eigh(leps_hessian(fh2_surface, saddle.q1, saddle.q2))
    centre = np.array([saddle.q1, saddle.q2])
    offsets = np.linspace(-0.02, 0.02, 41) * ANGSTROM

    along_negative = [leps_energy(fh2_surface, *(centre + t * vectors[:, 0])) for t in offsets]
    along_positive = [leps_energy(fh2_surface, *(centre + t * vectors[:, 1])) for t in offsets]

    assert int(np.argmax(along_negative)) == 20
    assert int(np.argmin(along_positive)) == 20


def test_saddle_does_not_depend_on_the_guess(saddle, fh2_surface):
    estimate = estimate_saddle_on_grid(fh2_surface)
    from_grid = find_saddle(fh2_surface, guess=(estimate.q1, estimate.q2))
    nudged = find_saddle(fh2_surface, guess=(saddle.q1 + 0.05 * ANGSTROM, saddle.q2 - 0.01 * ANGSTROM))

    for other in (from_grid, nudged):
        assert other.q1 == pytest.approx(saddle.q1, rel=1e-8)
        assert other.q2 == pytest.approx(saddle.q2, rel=1e-8)
        assert other.barrier == pytest.approx(saddle.barrier, rel=1e-8)


def test_grid_estimate_is_near_the_saddle(saddle, fh2_surface):
    window = default_window(fh2_surface)
    estimate = estimate_saddle_on_grid(fh2_surface, window, resolution=401)
    spacing = (window[1] - window[0]) / 400

    assert abs(estimate.q1 - saddle.q1) < 5 * spacing
    assert abs(estimate.q2 - saddle.q2) < 5 * spacing


def ridge_top(surface, centre, along, across, half_width, points=1001):
    """Highest valley-bottom energy over lines across the ridge, and where it sits."""
    s = np.linspace(-half_width, half_width, points)
    q = centre[:, None, None] + along[:, None, None] * s[:, None] + across[:, None, None] * s[None, :]
    energies = leps_energy(surface, q[0], q[1])
    columns = np.argmin(energies, axis=1)
    valley = energies[np.arange(points), columns]
    valley[(columns == 0) | (columns == points - 1)] = -np.inf
    row = int(np.argmax(valley))
    return float(valley[row]), centre + s[row] * along + s[columns[row]] * across


def test_barrier_matches_a_refined_grid_minimax(saddle, fh2_surface):
    estimate = estimate_saddle_on_grid(fh2_surface)
    centre = np.array([estimate.q1, estimate.q2])
    _, vectors = np.linalg.eigh(leps_hessian(fh2_surface, *centre))
    half_width = 0.25 * ANGSTROM

    for _ in range(5):
        energy, centre = ridge_top(fh2_surface, centre, vectors[:, 0], vectors[:, 1], half_width)
        half_width /= 10

    assert saddle.barrier == pytest.approx(energy - channel_floor(fh2_surface, 2), rel=1e-6)
    assert saddle.q1 == pytest.approx(centre[0], rel=1e-5)
    assert saddle.q2 == pytest.approx(centre[1], rel=1e-5)


def test_saddle_reports_simulation_location(fh2_surface, fh2_factors, li_scaling, saddle):
    located = find_saddle(fh2_surface, guess=(saddle.q1, saddle.q2), factors=fh2_factors, scaling=li_scaling)
    q1, q2 = sim_to_chem(*located.sim_location, fh2_factors, li_scaling)
    assert float(q1) == pytest.approx(saddle.q1, rel=1e-12)
    assert float(q2) == pytest.approx(saddle.q2, rel=1e-12)
    assert located.to_json_dict()["sim_location_m"] == list(located.sim_location)


def test_bad_window_is_rejected(fh2_surface):
    with pytest.raises(DomainError):
        estimate_saddle_on_grid(fh2_surface, window=(2e-10, 1e-10, 1e-10, 2e-10))


def test_regions_partition_the_norm(partition, grid, geometry):
    psi = init_wavepacket(WavePacketSpec(center=17e-6, width=1e-6, velocity=5e-3), grid, geometry)

    populations = region_populations(psi, partition)

    assert sum(populations.values()) == pytest.approx(psi.norm(), abs=1e-9)
    assert populations["reactant"] > 0.99


def test_ledger_populations_add_absorbed_probability(partition, grid, geometry):
    psi = init_wavepacket(WavePacketSpec(center=17e-6, width=1e-6), grid, geometry)

    region = channel_populations(psi, partition)
    ledger = channel_populations(psi, partition, absorbed={"reactant": 0.0, "product": 0.0})

    assert region.method == "region"
    assert ledger.method == "ledger"
    assert ledger.reactant == pytest.approx(region.reactant)
    assert region.total == pytest.approx(1.0, abs=1e-9)


def test_partition_lines_must_stay_out_of_the_absorber(geometry, grid, cap):
    validate_partition(ChannelPartition(geometry=geometry, reactant_offset=4e-6, product_offset=4e-6), grid, cap)
    with pytest.raises(ConfigurationError):
        validate_partition(ChannelPartition(geometry=geometry, reactant_offset=11e-6, product_offset=4e-6),
                           grid, cap)
    with pytest.raises(ConfigurationError):
        validate_partition(ChannelPartition(geometry=geometry, reactant_offset=4e-6, product_offset=20e-6),
                           grid, cap)


@pytest.mark.parametrize("n", [0, 1])
def test_reactant_state_projects_onto_itself(partition, fine_grid, geometry, n):
    psi = init_wavepacket(WavePacketSpec(center=17e-6, width=1e-6, n=n), fine_grid, geometry)

    distribution = vibrational_distribution(psi, partition, "reactant", "harmonic", 3)

    assert distribution.peak == n
    assert distribution.probabilities[n] / distribution.channel_population > 0.999
    assert distribution.probabilities.sum() + distribution.residual == pytest.approx(
        distribution.channel_population, abs=1e-6)


def test_product_state_projects_onto_itself(partition, grid, geometry):
    psi = init_wavepacket(WavePacketSpec(channel="product", center=16e-6, width=1e-6), grid, geometry)

    distribution = vibrational_distribution(psi, partition, "product", "harmonic", 2)

    assert distribution.channel == "product"
    assert distribution.peak == 0
    assert distribution.probabilities[0] / distribution.channel_population > 0.99


def test_unknown_basis(partition, grid, geometry):
    psi = init_wavepacket(WavePacketSpec(center=17e-6, width=1e-6), grid, geometry)
    with pytest.raises(ConfigurationError):
        vibrational_distribution(psi, partition, "reactant", "legendre", 3)
    with pytest.raises(ConfigurationError):
        vibrational_distribution(psi, partition, "reactant", "morse", 3)


def test_flux_accumulator_needs_a_propagation(partition):
    with pytest.raises(ConfigurationError):
        FluxAccumulator(partition, "reactant").distribution()


def test_chemical_raster(fh2_surface):
    window = (0.5 * ANGSTROM, 3.0 * ANGSTROM, 0.5 * ANGSTROM, 3.0 * ANGSTROM)

    raster = contour_raster(fh2_surface, window, resolution=51)

    assert raster.values.shape == (51, 51)
    assert raster.header == ("q1", "q2", "v_over_ezp")
    assert raster.columns().shape == (51 * 51, 3)
    assert np.all(raster.values <= raster.clip_level)
    finite = raster.values < raster.clip_level
    np.testing.assert_allclose(raster.values[finite], raster.energies[finite] / raster.zero_point_energy)


def test_simulation_raster_is_the_scaled_surface(fh2_surface, fh2_masses, fh2_factors, li_scaling):
    window = (8e-6, 20e-6, 2e-6, 10e-6)

    raster = contour_raster(fh2_surface, window, resolution=41, frame="sim", masses=fh2_masses,
                            scaling=li_scaling)

    X, Y = np.meshgrid(raster.x, raster.y, indexing="ij")
    expected = li_scaling.l ** 2 * leps_energy(fh2_surface, *sim_to_chem(X, Y, fh2_factors, li_scaling))
    np.testing.assert_allclose(raster.energies, expected, rtol=1e-12)
    assert raster.header[0] == "Q1"


def test_raster_arguments_are_checked(fh2_surface):
    window = (0.5 * ANGSTROM, 3.0 * ANGSTROM, 0.5 * ANGSTROM, 3.0 * ANGSTROM)
    with pytest.raises(ConfigurationError):
        contour_raster(fh2_surface, window, frame="sim")
    with pytest.raises(ConfigurationError):
        contour_raster(fh2_surface, window, frame="lab")
    with pytest.raises(DomainError):
        contour_raster(fh2_surface, window, resolution=1)
