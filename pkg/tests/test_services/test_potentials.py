import numpy as np
import pytest

from app.core.constants import ANGSTROM
from app.services.potentials import (
    channel_floor,
    clamp_radicand,
    harmonic_constants,
    harmonic_params,
    leps_energy,
    leps_gradient,
    leps_hessian,
    morse_energy,
)
from app.utils.errors import CuspError, DomainError, RadicandError

# where the radicand stays well away from zero on the F + H2 surface
SAFE_Q1 = np.linspace(0.75, 2.5, 8) * ANGSTROM
SAFE_Q2 = np.linspace(0.6, 2.0, 8) * ANGSTROM


def test_morse_energy_limits(fh2_surface):
    bc = fh2_surface.bc
    assert morse_energy(bc, bc.q0) == 0.0
    assert morse_energy(bc, 50 * ANGSTROM) == pytest.approx(bc.D, rel=1e-12)
    values = morse_energy(bc, np.array([0.6, 0.742, 1.0]) * ANGSTROM)
    assert values.shape == (3,)
    with pytest.raises(DomainError):
        morse_energy(bc, float("nan"))


def test_harmonic_constants_of_hf_and_h2(fh2_surface):
    hf = harmonic_params(fh2_surface.ab)
    hh = harmonic_params(fh2_surface.bc)

    assert hf.K == pytest.approx(966.0, rel=5e-3)
    assert hf.nu == pytest.approx(1.246e14, rel=5e-3)
    assert hh.K == pytest.approx(573.85, rel=5e-3)
    assert hh.nu == pytest.approx(1.32e14, rel=1e-2)


def test_harmonic_constants_flat_limit_and_domain():
    assert harmonic_constants(0.0, 1e10, 1e-27) == (0.0, 0.0)
    with pytest.raises(DomainError):
        harmonic_constants(-1.0, 1e10, 1e-27)


def test_morse_curvature_matches_force_constant(fh2_surface):
    ab = fh2_surface.ab
    delta = np.linspace(-0.01, 0.01, 21)
    coefficients = np.polyfit(delta, morse_energy(ab, ab.q0 + delta * ANGSTROM), 3)
    assert coefficients[1] / ANGSTROM ** 2 == pytest.approx(ab.force_constant / 2.0, rel=1e-2)


@pytest.mark.parametrize("channel", [1, 2])
def test_leps_reduces_to_morse_far_from_the_third_atom(fh2_surface, channel):
    offset = leps_energy(fh2_surface, 40 * ANGSTROM, 40 * ANGSTROM)
    bound = fh2_surface.channel_diatom(channel)
    q = bound.q0 + np.linspace(-0.4, 1.5, 50) * ANGSTROM
    far = np.full_like(q, 20 * max(fh2_surface.ab.q0, fh2_surface.bc.q0))

    if channel == 1:
        leps = leps_energy(fh2_surface, q, far)
    else:
        leps = leps_energy(fh2_surface, far, q)

    expected = morse_energy(bound, q) - bound.D + offset
    assert np.max(np.abs(leps - expected)) < 1e-3 * fh2_surface.bc.D


def test_dissociation_limit_is_zero(fh2_surface):
    assert abs(leps_energy(fh2_surface, 40 * ANGSTROM, 40 * ANGSTROM)) < 1e-12 * fh2_surface.max_depth


def test_channel_floors(fh2_surface):
    assert channel_floor(fh2_surface, 1) == pytest.approx(-fh2_surface.ab.D, rel=1e-9)
    assert channel_floor(fh2_surface, 2) == pytest.approx(-fh2_surface.bc.D, rel=1e-9)
    with pytest.raises(ValueError):
        channel_floor(fh2_surface, 3)


def test_exchange_symmetry_is_exact(h3_surface):
    q1, q2 = np.meshgrid(np.linspace(0.5, 3.0, 30) * ANGSTROM, np.linspace(0.6, 2.5, 25) * ANGSTROM)
    assert np.array_equal(leps_energy(h3_surface, q1, q2), leps_energy(h3_surface, q2, q1))


def test_energy_broadcasts(fh2_surface):
    values = leps_energy(fh2_surface, SAFE_Q1[:, None], SAFE_Q2[None, :])
    assert values.shape == (8, 8)
    assert isinstance(leps_energy(fh2_surface, ANGSTROM, ANGSTROM), float)


def test_gradient_matches_finite_differences(fh2_surface):
    h = 1e-14
    q1, q2 = np.meshgrid(SAFE_Q1, SAFE_Q2, indexing="ij")
    g1, g2 = leps_gradient(fh2_surface, q1, q2)

    fd1 = (leps_energy(fh2_surface, q1 + h, q2) - leps_energy(fh2_surface, q1 - h, q2)) / (2 * h)
    fd2 = (leps_energy(fh2_surface, q1, q2 + h) - leps_energy(fh2_surface, q1, q2 - h)) / (2 * h)
    scale = fh2_surface.max_depth * fh2_surface.ab.beta_morse

    np.testing.assert_allclose(g1, fd1, rtol=1e-5, atol=1e-6 * scale)
    np.testing.assert_allclose(g2, fd2, rtol=1e-5, atol=1e-6 * scale)


def test_hessian_matches_finite_differences_of_gradient(fh2_surface):
    h = 1e-14
    q1, q2 = np.meshgrid(SAFE_Q1, SAFE_Q2, indexing="ij")
    hess = leps_hessian(fh2_surface, q1, q2)

    plus1, minus1 = leps_gradient(fh2_surface, q1 + h, q2), leps_gradient(fh2_surface, q1 - h, q2)
    plus2, minus2 = leps_gradient(fh2_surface, q1, q2 + h), leps_gradient(fh2_surface, q1, q2 - h)
    scale = fh2_surface.max_depth * fh2_surface.ab.beta_morse ** 2

    assert hess.shape == (8, 8, 2, 2)
    np.testing.assert_allclose(hess[..., 0, 0], (plus1[0] - minus1[0]) / (2 * h), rtol=1e-5, atol=1e-6 * scale)
    np.testing.assert_allclose(hess[..., 1, 1], (plus2[1] - minus2[1]) / (2 * h), rtol=1e-5, atol=1e-6 * scale)
    np.testing.assert_allclose(hess[..., 0, 1], (plus2[0] - minus2[0]) / (2 * h), rtol=1e-5, atol=1e-6 * scale)
    assert np.array_equal(hess[..., 0, 1], hess[..., 1, 0])


def test_scalar_hessian_shape(fh2_surface):
    assert leps_hessian(fh2_surface, ANGSTROM, ANGSTROM).shape == (2, 2)


def test_radicand_clamp():
    clamped = clamp_radicand(np.array([-1e-20, 0.5]), tolerance=1e-15)
    assert clamped[0] == 0.0 and clamped[1] == 0.5
    with pytest.raises(RadicandError):
        clamp_radicand(np.array([-1e-3]), tolerance=1e-15)


def test_derivatives_refuse_the_cusp(h3_surface):
    # all three exchange terms vanish together far apart, so the radicand does too
    with pytest.raises(CuspError):
        leps_gradient(h3_surface, 60 * ANGSTROM, 60 * ANGSTROM)
