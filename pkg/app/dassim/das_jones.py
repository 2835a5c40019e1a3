"""
Jones calculus for single-mode fibre segments.

All operators are numpy arrays vectorised over leading axes: a scalar angle yields a
``(2, 2)`` matrix, an array of angles of shape ``S`` yields ``S + (2, 2)``.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from .das_errors import InvalidArgumentError
from .das_models import PolarizationParams
from .das_utils import wrap_phase

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-12


def _finite(angle, name: str) -> np.ndarray:
    angle = np.asarray(angle, dtype=float)
    if not np.all(np.isfinite(angle)):
        raise InvalidArgumentError(f"{name} must be finite")
    return angle


def phase_retarder(angle) -> np.ndarray:
    """diag(e^{+j angle}, e^{-j angle})."""
    angle = _finite(angle, "angle")
    out = np.zeros(angle.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * angle)
    out[..., 1, 1] = np.exp(-1j * angle)
    return out


def rotation(angle) -> np.ndarray:
    """Real rotation [[cos, -sin], [sin, cos]]."""
    angle = _finite(angle, "angle")
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty(angle.shape + (2, 2), dtype=float)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def unitary_from_params(params: PolarizationParams) -> np.ndarray:
    """U = e^{j phi} D_beta R_Theta D_gamma."""
    u = phase_retarder(params.beta) @ rotation(params.theta_rot) @ phase_retarder(params.gamma)
    phi = _finite(np.broadcast_to(params.common_phase, np.shape(params.beta)), "common_phase")
    return np.exp(1j * phi)[..., None, None] * u


def _draw_marginals(rng: np.random.Generator, size) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    beta = rng.uniform(-np.pi, np.pi, size)
    gamma = rng.uniform(-np.pi, np.pi, size)
    theta = np.arcsin(np.sqrt(rng.uniform(0.0, 1.0, size)))
    return beta, gamma, theta


def sample_haar(rng: np.random.Generator, size: Optional[int] = None) -> Tuple[PolarizationParams, np.ndarray]:
    """
    Draw Haar-distributed SU(2) operators.

    Args:
        rng: numpy Generator
        size: number of draws; None draws a single operator

    Returns:
        (parameters, U) with U = D_beta R_Theta D_gamma and det(U) = 1
    """
    beta, gamma, theta = _draw_marginals(rng, size)
    params = PolarizationParams(beta=beta, gamma=gamma, theta_rot=theta, common_phase=0.0)
    return params, unitary_from_params(params)


def reflection_matrix(alpha) -> np.ndarray:
    """Reflection operator with polarization transfer coefficient alpha."""
    alpha = _finite(alpha, "alpha")
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise InvalidArgumentError(f"alpha must lie in [0, 1], got {alpha}")
    if np.any(alpha > 0.05):
        logger.warning("Reflection transfer alpha=%s above 0.05", alpha)
    direct, cross = np.sqrt(1 - alpha), np.sqrt(alpha)
    out = np.empty(alpha.shape + (2, 2), dtype=float)
    out[..., 0, 0] = direct
    out[..., 0, 1] = -cross
    out[..., 1, 0] = cross
    out[..., 1, 1] = direct
    return out


def jones_to_stokes(v) -> np.ndarray:
    """
    Project Jones vectors (..., 2) on Stokes vectors (..., 4).

    s3 = -2 Im(x y*), so right-circular (1, j)/sqrt(2) maps to s3 = +1.
    """
    v = np.asarray(v, dtype=complex)
    x, y = v[..., 0], v[..., 1]
    cross = x * np.conj(y)
    px, py = np.abs(x) ** 2, np.abs(y) ** 2
    return np.stack([px + py, px - py, 2 * cross.real, -2 * cross.imag], axis=-1)


def evolve_params(prev: PolarizationParams, ratio: float, rng: np.random.Generator) -> PolarizationParams:
    """
    Beat-length evolution of segment parameters.

    Each parameter moves by ``ratio`` times a fresh draw of its marginal. At
    ``ratio >= 1`` the segments are decorrelated and fresh parameters are returned.
    """
    if ratio < 0:
        raise InvalidArgumentError(f"ratio must be non-negative, got {ratio}")
    if ratio == 0:
        return prev
    size = None if np.ndim(prev.beta) == 0 else np.shape(prev.beta)
    beta_new, gamma_new, theta_new = _draw_marginals(rng, size)
    if ratio >= 1:
        return PolarizationParams(beta=beta_new, gamma=gamma_new, theta_rot=theta_new,
                                  common_phase=prev.common_phase)

    beta = wrap_phase(np.asarray(prev.beta) + ratio * beta_new)
    gamma = wrap_phase(np.asarray(prev.gamma) + ratio * gamma_new)
    theta = np.mod(np.asarray(prev.theta_rot) + ratio * theta_new, np.pi)
    theta = np.where(theta > np.pi / 2, np.pi - theta, theta)
    if size is None:
        beta, gamma, theta = float(beta), float(gamma), float(theta)
    return PolarizationParams(beta=beta, gamma=gamma, theta_rot=theta, common_phase=prev.common_phase)


def is_unitary(h, tol: float = UNITARY_TOL) -> bool:
    """True when max |H H^dagger - I| <= tol for every matrix."""
    h = np.asarray(h)
    gram = h @ np.conj(np.swapaxes(h, -1, -2))
    return bool(np.max(np.abs(gram - np.eye(2))) <= tol)


def great_circle_steps(stokes: np.ndarray) -> np.ndarray:
    """Angular distance in rad between successive points on the Poincare sphere."""
    s = np.asarray(stokes, dtype=float)[..., 1:4]
    s = s / np.linalg.norm(s, axis=-1, keepdims=True)
    cos_step = np.clip(np.sum(s[1:] * s[:-1], axis=-1), -1.0, 1.0)
    return np.arccos(cos_step)
