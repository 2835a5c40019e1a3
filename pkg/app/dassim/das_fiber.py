"""
Static fibre realizations and their dual-pass Jones responses.

A fibre of length L is cut into N segments of length L_s. Segment i carries the
cumulative forward operator U_i, a Rayleigh phasor p_i and the dual-pass amplitude
attenuation A_i; its backscatter response is H_i = A_i p_i U_i^T M_alpha U_i R_theta.
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np

from app.audit.logger import audit_span

from .das_errors import InvalidArgumentError
from .das_jones import evolve_params, jones_to_stokes, reflection_matrix, rotation, sample_haar, unitary_from_params
from .das_models import FiberConfig, FiberRealization, PolarizationParams, StrainEvent
from .das_utils import named_rng

logger = logging.getLogger(__name__)

WAVELENGTH = 1550e-9


def rayleigh_phasors(rng: np.random.Generator, n_segments: int) -> np.ndarray:
    """Circular complex Gaussian phasors with E[|p|^2] = 1."""
    return (rng.normal(0.0, np.sqrt(0.5), n_segments)
            + 1j * rng.normal(0.0, np.sqrt(0.5), n_segments))


def scatterer_phasors(rng: np.random.Generator, n_segments: int, segment_length: float,
                      scatterers_per_segment: int, refr_index: float = 1.468) -> np.ndarray:
    """
    Coherent sum of discrete scatterers placed uniformly inside each segment.

    Each scatterer contributes unit reflectivity with the round-trip phase of its
    position; the sum is normalised so that E[|p|^2] = 1.
    """
    positions = rng.uniform(0.0, segment_length, (n_segments, scatterers_per_segment))
    phases = 4 * np.pi * refr_index * positions / WAVELENGTH
    return np.exp(1j * phases).sum(axis=1) / np.sqrt(scatterers_per_segment)


def attenuation_profile(distance: np.ndarray, attenuation_db_km: float) -> np.ndarray:
    """Dual-pass amplitude factor; round-trip power loss is 2 a L dB with L in km."""
    return 10 ** (-attenuation_db_km * np.asarray(distance) / 10_000)


def _polarization_params(cfg: FiberConfig, rng: np.random.Generator) -> PolarizationParams:
    n = cfg.n_segments
    if cfg.ratio >= 1:
        params, _ = sample_haar(rng, n)
        return params
    beta, gamma, theta = np.empty(n), np.empty(n), np.empty(n)
    current, _ = sample_haar(rng)
    for i in range(n):
        if i > 0:
            current = evolve_params(current, cfg.ratio, rng)
        beta[i], gamma[i], theta[i] = current.beta, current.gamma, current.theta_rot
    return PolarizationParams(beta=beta, gamma=gamma, theta_rot=theta, common_phase=0.0)


def synthesize(cfg: FiberConfig, seed: Optional[int] = None) -> FiberRealization:
    """
    Draw one static fibre.

    Args:
        cfg: Fibre configuration
        seed: overrides ``cfg.seed`` when given

    Returns:
        FiberRealization with N = floor(length / segment_length) segments
    """
    seed = cfg.seed if seed is None else int(seed)
    n = cfg.n_segments
    if n < 1:
        raise InvalidArgumentError(
            f"Fibre of {cfg.length} m has no segment of {cfg.segment_length} m"
        )

    with audit_span(logger, "synthesize_fiber", extra={"segments": n, "seed": seed}):
        fiber_rng = named_rng(seed, "fiber")
        if cfg.phasor_model == "scatterers":
            phasors = scatterer_phasors(fiber_rng, n, cfg.segment_length, cfg.scatterers_per_segment)
        else:
            phasors = rayleigh_phasors(fiber_rng, n)

        distance = cfg.segment_length * np.arange(1, n + 1)
        attenuation = attenuation_profile(distance, cfg.attenuation)

        if cfg.polarization_enabled:
            params = _polarization_params(cfg, named_rng(seed, "polarization"))
            unitaries = unitary_from_params(params)
        else:
            zeros = np.zeros(n)
            params = PolarizationParams(beta=zeros, gamma=zeros, theta_rot=zeros, common_phase=0.0)
            unitaries = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()

    return FiberRealization(
        unitaries=unitaries,
        phasors=phasors,
        attenuation=attenuation,
        distance=distance,
        segment_length=cfg.segment_length,
        seed=seed,
        params=params,
    )


def dual_pass_response(fib: FiberRealization, alpha: float = 0.0, theta_misalign: float = 0.0) -> np.ndarray:
    """
    Per-segment backscatter Jones matrices.

    Returns:
        (N, 2, 2) complex array H_i = A_i p_i U_i^T M_alpha U_i R_theta
    """
    u = fib.unitaries
    h = np.swapaxes(u, -1, -2) @ reflection_matrix(alpha) @ u @ rotation(theta_misalign)
    return (fib.attenuation * fib.phasors)[:, None, None] * h


def strain_phase(event: StrainEvent) -> np.ndarray:
    """Dual-pass phase offset caused by a segment elongation time series."""
    if event.wavelength <= 0:
        raise InvalidArgumentError("wavelength must be positive")
    single = event.refr_index * event.photoelastic * np.asarray(event.displacement, dtype=float) \
        * 2 * np.pi / event.wavelength
    return 2 * single


def strain_phase_profile(events: Iterable[StrainEvent], n_segments: int, n_frames: int) -> np.ndarray:
    """
    Cumulative dual-pass phase offsets for every segment and frame.

    A disturbance at segment i delays light reaching every segment j >= i.

    Returns:
        (n_frames, n_segments) radians
    """
    offsets = np.zeros((n_frames, n_segments))
    for event in events:
        if not 1 <= event.segment_index <= n_segments:
            raise InvalidArgumentError(
                f"segment_index {event.segment_index} outside [1, {n_segments}]"
            )
        delta = strain_phase(event)
        if delta.shape != (n_frames,):
            raise InvalidArgumentError(
                f"displacement has {delta.shape[0] if delta.ndim else 1} samples, expected {n_frames}"
            )
        offsets[:, event.segment_index - 1:] += delta[:, None]
    return offsets


def apply_strain(responses: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Time-varying responses (T, N, 2, 2) from static H (N, 2, 2) and offsets (T, N)."""
    return responses[None, ...] * np.exp(1j * offsets)[..., None, None]


def sinusoidal_displacement(amplitude: float, frequency: float, frame_period: float, n_frames: int) -> np.ndarray:
    t = frame_period * np.arange(n_frames)
    return amplitude * np.sin(2 * np.pi * frequency * t)


def stokes_trajectory(fib: FiberRealization, input_sop: Sequence[complex] = (1.0, 0.0)) -> np.ndarray:
    """Stokes vectors (N, 4) of the forward SOP A_i U_i v at every segment."""
    v = np.asarray(input_sop, dtype=complex)
    forward = fib.attenuation[:, None] * (fib.unitaries @ v)
    return jones_to_stokes(forward)
