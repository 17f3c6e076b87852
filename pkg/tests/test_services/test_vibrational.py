from unittest.mock import patch

import numpy as np
import pytest

from app.core.constants import HBAR
from app.services.vibrational import (
    harmonic_basis,
    harmonic_state,
    highest_bound_state,
    morse_bound_states,
    morse_eigenfunction,
    morse_energies,
    morse_parameter,
)
from app.utils.errors import DomainError

LI_MASS = 1.1526e-26
LI_OMEGA = 2 * np.pi * 5682.0


def test_harmonic_basis_is_orthonormal():
    length = np.sqrt(HBAR / (LI_MASS * LI_OMEGA))
    x = np.linspace(-12 * length, 12 * length, 2401)
    basis = harmonic_basis(5, x, LI_MASS, LI_OMEGA)

    overlaps = basis @ basis.T * (x[1] - x[0])

    np.testing.assert_allclose(overlaps, np.eye(6), atol=1e-8)


def test_harmonic_state_parity_and_index():
    x = np.linspace(-2e-6, 2e-6, 101)
    assert np.allclose(harmonic_state(2, x, LI_MASS, LI_OMEGA), harmonic_state(2, -x, LI_MASS, LI_OMEGA))
    assert np.allclose(harmonic_state(3, x, LI_MASS, LI_OMEGA), -harmonic_state(3, -x, LI_MASS, LI_OMEGA))
    with pytest.raises(DomainError):
        harmonic_state(-1, x, LI_MASS, LI_OMEGA)


def test_h2_holds_seventeen_levels(fh2_surface):
    bc = fh2_surface.bc
    assert morse_parameter(bc, bc.mu) == pytest.approx(17.35, rel=1e-2)
    assert highest_bound_state(bc, bc.mu) == 16


def test_dvr_levels_match_closed_form(fh2_surface):
    bc = fh2_surface.bc
    states = morse_bound_states(bc, bc.mu, 5)

    np.testing.assert_allclose(states.grid_energies, states.energies, rtol=1e-5)
    assert states.energies[0] == pytest.approx(0.5 * HBAR * np.sqrt(bc.force_constant / bc.mu), rel=5e-2)
    assert np.all(np.diff(states.energies) > 0)


def test_dvr_states_match_laguerre_form(fh2_surface):
    bc = fh2_surface.bc
    states = morse_bound_states(bc, bc.mu, 3)

    for n in range(4):
        analytic = morse_eigenfunction(bc, bc.mu, n, states.x)
        overlap = np.sum(states.functions[n] * analytic) * states.dx
        assert overlap == pytest.approx(1.0, abs=1e-6)

    gram = states.functions @ states.functions.T * states.dx
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)


def test_interpolated_states_vanish_outside_the_box(fh2_surface):
    bc = fh2_surface.bc
    states = morse_bound_states(bc, bc.mu, 1)
    peak = int(np.argmax(states.functions[0]))
    points = np.array([states.x[0] - 1e-10, states.x[peak], states.x[-1] + 1e-10])

    values = states.on(points)

    assert values.shape == (2, 3)
    assert values[0, 0] == 0.0 and values[0, 2] == 0.0
    assert values[0, 1] == pytest.approx(states.functions[0, peak], rel=1e-6)


def test_truncated_basis_is_reported(fh2_surface):
    bc = fh2_surface.bc
    with patch("app.core.events.event_emitter.emit") as mock_emit:
        states = morse_bound_states(bc, bc.mu, 30, channel="reactant")

    mock_emit.assert_called_once_with("analysis.truncated", channel="reactant", requested=30, available=17)
    assert len(states.energies) == 17
    assert states.functions.shape[0] == 17


def test_closed_form_levels_close_at_the_dissociation_limit(fh2_surface):
    bc = fh2_surface.bc
    levels = morse_energies(bc, bc.mu, 16)
    assert levels[-1] < bc.D
    assert np.all(np.diff(levels) > 0)


def test_unbound_well_is_rejected(fh2_surface):
    shallow = fh2_surface.bc.copy(update={"D": 1e-30})
    with pytest.raises(DomainError):
        morse_bound_states(shallow, shallow.mu, 0)
    with pytest.raises(DomainError):
        morse_eigenfunction(fh2_surface.bc, fh2_surface.bc.mu, 20, np.zeros(3))
