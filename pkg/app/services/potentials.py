"""Morse diatomics and the LEPS three-body surface, with analytic derivatives.

All functions accept scalars or numpy arrays (broadcast together) and are pure.
"""
import math
from typing import NamedTuple, Tuple

import numpy as np

from app.core.logging_config import get_logger
from app.schemas.reaction import DiatomSpec, LepsSurface
from app.utils.errors import CuspError, DomainError, RadicandError

logger = get_logger(__name__)

# relative to (max_i D_i)^2
RADICAND_TOLERANCE = 1e-12

# dq_i/dq_k for the pair distances (q1, q2, q1 + q2)
_PAIR_JACOBIAN = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


class HarmonicParams(NamedTuple):
    K: float   # N/m
    nu: float  # Hz


class PairTerms(NamedTuple):
    """Coulomb (U) and exchange (alpha) terms of one pair with q-derivatives."""
    U: np.ndarray
    dU: np.ndarray
    d2U: np.ndarray
    alpha: np.ndarray
    dalpha: np.ndarray
    d2alpha: np.ndarray


def _as_finite(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite", details={name: str(value)})
    return arr


def _scalar_or_array(arr: np.ndarray):
    return float(arr) if np.ndim(arr) == 0 else arr


def morse_energy(spec: DiatomSpec, q):
    """D [1 - exp(-beta (q - q0))]^2, zero at q0 and D at dissociation."""
    q = _as_finite(q, "q")
    return _scalar_or_array(spec.D * (1.0 - np.exp(-spec.beta_morse * (q - spec.q0))) ** 2)


def harmonic_constants(D: float, beta_morse: float, mu: float) -> HarmonicParams:
    """K = 2 D beta^2 and nu = sqrt(K / mu) / 2 pi; D = 0 gives the flat limit."""
    if D < 0 or beta_morse < 0 or mu <= 0:
        raise DomainError("harmonic constants need D >= 0, beta >= 0 and mu > 0")
    K = 2.0 * D * beta_morse ** 2
    return HarmonicParams(K=K, nu=math.sqrt(K / mu) / (2.0 * math.pi))


def harmonic_params(spec: DiatomSpec) -> HarmonicParams:
    return harmonic_constants(spec.D, spec.beta_morse, spec.mu)


def _pair_terms(spec: DiatomSpec, delta: float, q: np.ndarray) -> PairTerms:
    beta = spec.beta_morse
    x = np.exp(-beta * (q - spec.q0))
    x2 = x * x
    c_u2, c_u1 = 0.25 * spec.D * (3.0 + delta), 0.25 * spec.D * (2.0 + 6.0 * delta)
    c_a2, c_a1 = 0.25 * spec.D * (1.0 + 3.0 * delta), 0.25 * spec.D * (6.0 + 2.0 * delta)
    return PairTerms(
        U=c_u2 * x2 - c_u1 * x,
        dU=beta * (-2.0 * c_u2 * x2 + c_u1 * x),
        d2U=beta ** 2 * (4.0 * c_u2 * x2 - c_u1 * x),
        alpha=c_a2 * x2 - c_a1 * x,
        dalpha=beta * (-2.0 * c_a2 * x2 + c_a1 * x),
        d2alpha=beta ** 2 * (4.0 * c_a2 * x2 - c_a1 * x),
    )


def _all_terms(surface: LepsSurface, q1: np.ndarray, q2: np.ndarray):
    q1, q2 = np.broadcast_arrays(q1, q2)
    distances = (q1, q2, q1 + q2)
    return [_pair_terms(spec, surface.delta, q) for spec, q in zip(surface.pairs, distances)]


def radicand_tolerance(surface: LepsSurface) -> float:
    return RADICAND_TOLERANCE * surface.max_depth ** 2


def clamp_radicand(radicand, tolerance: float) -> np.ndarray:
    """
    Zero out round-off negatives of the radicand.

    Raises:
        RadicandError: any value below -tolerance
    """
    radicand = np.asarray(radicand, dtype=float)
    if np.any(radicand < -tolerance):
        worst = float(np.min(radicand))
        raise RadicandError("LEPS radicand is negative beyond round-off",
                            details={"radicand": worst, "tolerance": tolerance})
    return np.where(radicand < 0.0, 0.0, radicand)


def _radicand(a1, a2, a3) -> np.ndarray:
    # 1/2 sum of squared differences; grouped so swapping a1 and a2 is bit-exact
    return 0.5 * ((a1 - a2) ** 2 + ((a2 - a3) ** 2 + (a1 - a3) ** 2))


def leps_energy(surface: LepsSurface, q1, q2):
    """
    LEPS potential energy (J) at bond distances q1 = x_B - x_A, q2 = x_C - x_B.

    The dissociation limit (all atoms apart) is zero; channel floors sit at -D_j.
    """
    q1 = _as_finite(q1, "q1")
    q2 = _as_finite(q2, "q2")
    t1, t2, t3 = _all_terms(surface, q1, q2)
    radicand = clamp_radicand(_radicand(t1.alpha, t2.alpha, t3.alpha), radicand_tolerance(surface))
    energy = ((t1.U + t2.U) + t3.U - np.sqrt(radicand)) / (1.0 + surface.delta)
    return _scalar_or_array(energy)


def _radicand_derivatives(terms):
    """Radicand R, dR/dq_k (..., 2) and d2R/dq_k dq_l (..., 2, 2)."""
    alpha = np.stack([t.alpha for t in terms], axis=-1)
    dalpha = np.stack([t.dalpha for t in terms], axis=-1)
    d2alpha = np.stack([t.d2alpha for t in terms], axis=-1)

    radicand = _radicand(alpha[..., 0], alpha[..., 1], alpha[..., 2])
    # dR/dalpha_i = 2 alpha_i - alpha_j - alpha_k
    g = 3.0 * alpha - alpha.sum(axis=-1, keepdims=True)
    # d alpha_i / d q_k
    a_k = dalpha[..., :, None] * _PAIR_JACOBIAN
    grad = np.einsum("...i,...ik->...k", g, a_k)

    coupling = 3.0 * np.eye(3) - 1.0
    hess = np.einsum("...ik,ij,...jl->...kl", a_k, coupling, a_k)
    hess = hess + np.einsum("...i,ik,il->...kl", g * d2alpha, _PAIR_JACOBIAN, _PAIR_JACOBIAN)
    return radicand, grad, hess


def _check_cusp(surface: LepsSurface, radicand: np.ndarray, q1, q2) -> None:
    tolerance = radicand_tolerance(surface)
    if np.any(radicand <= tolerance):
        raise CuspError("LEPS derivatives are undefined where the radicand vanishes",
                        details={"q1": str(q1), "q2": str(q2), "tolerance": tolerance})


def leps_gradient(surface: LepsSurface, q1, q2) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic (dV/dq1, dV/dq2) in J/m."""
    q1 = _as_finite(q1, "q1")
    q2 = _as_finite(q2, "q2")
    terms = _all_terms(surface, q1, q2)
    radicand, r_grad, _ = _radicand_derivatives(terms)
    _check_cusp(surface, radicand, q1, q2)

    du = np.stack([t.dU for t in terms], axis=-1) @ _PAIR_JACOBIAN
    root = np.sqrt(radicand)[..., None]
    grad = (du - r_grad / (2.0 * root)) / (1.0 + surface.delta)
    return _scalar_or_array(grad[..., 0]), _scalar_or_array(grad[..., 1])


def leps_hessian(surface: LepsSurface, q1, q2) -> np.ndarray:
    """Analytic 2x2 Hessian in J/m^2; trailing axes (2, 2) for array input."""
    q1 = _as_finite(q1, "q1")
    q2 = _as_finite(q2, "q2")
    terms = _all_terms(surface, q1, q2)
    radicand, r_grad, r_hess = _radicand_derivatives(terms)
    _check_cusp(surface, radicand, q1, q2)

    d2u = np.stack([t.d2U for t in terms], axis=-1)
    u_hess = np.einsum("...i,ik,il->...kl", d2u, _PAIR_JACOBIAN, _PAIR_JACOBIAN)
    root = np.sqrt(radicand)[..., None, None]
    outer = r_grad[..., :, None] * r_grad[..., None, :]
    sqrt_hess = r_hess / (2.0 * root) - outer / (4.0 * root ** 3)
    hess = (u_hess - sqrt_hess) / (1.0 + surface.delta)

    # one code path for the off-diagonal
    hess[..., 1, 0] = hess[..., 0, 1]
    return hess


def channel_floor(surface: LepsSurface, channel: int, separation_lengths: float = 60.0) -> float:
    """
    Energy at the bottom of an asymptotic valley, evaluated on the surface.

    The free atom is placed `separation_lengths` Morse ranges away, so the
    result is -D_j up to terms of order exp(-separation_lengths).
    """
    if channel == 2:
        far = surface.ab.q0 + separation_lengths / min(surface.ab.beta_morse, surface.ac.beta_morse)
        return leps_energy(surface, far, surface.bc.q0)
    if channel == 1:
        far = surface.bc.q0 + separation_lengths / min(surface.bc.beta_morse, surface.ac.beta_morse)
        return leps_energy(surface, surface.ab.q0, far)
    raise ValueError(f"channel must be 1 or 2, got {channel}")
