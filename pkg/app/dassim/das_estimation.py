"""
Phase estimators, differential phase processing and fading coefficients.

Estimators return NaN for flagged samples, i.e. when the quantity whose angle is
taken has a modulus below ``settings.fade_threshold``.
"""

import logging
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from app.config.settings import settings

from .das_errors import InvalidArgumentError
from .das_jones import reflection_matrix, rotation, unitary_from_params
from .das_models import (
    ChannelEstimate, FadingMap, PhaseTraceSet, PolarizationParams, Scheme, StdvProfile,
)
from .das_utils import wrap_phase

logger = logging.getLogger(__name__)

MAP_PARAMS = ("beta", "gamma", "Theta", "theta")

# Default grid extent of each map parameter
MAP_RANGES = {
    "beta": (-np.pi / 2, np.pi / 2),
    "gamma": (-np.pi, np.pi),
    "Theta": (0.0, np.pi / 2),
    "theta": (0.0, np.pi),
}


def _threshold(min_magnitude: Optional[float]) -> float:
    return settings.fade_threshold if min_magnitude is None else min_magnitude


def _flagged_angle(z, threshold: float):
    z = np.asarray(z, dtype=complex)
    phase = np.where(np.abs(z) < threshold, np.nan, np.angle(z))
    return float(phase) if phase.ndim == 0 else phase


def phase_mimo(h, min_magnitude: Optional[float] = None):
    """0.5 arg det(H) in (-pi/2, pi/2]; flagged when |det H|^(1/2) is below threshold."""
    h = np.asarray(h, dtype=complex)
    det = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
    threshold = _threshold(min_magnitude)
    phase = np.where(np.sqrt(np.abs(det)) < threshold, np.nan, 0.5 * np.angle(det))
    return float(phase) if phase.ndim == 0 else phase


def phase_simo(h_xx, h_yx, min_magnitude: Optional[float] = None):
    return _flagged_angle(np.asarray(h_xx) + np.asarray(h_yx), _threshold(min_magnitude))


def phase_miso(h_xx, h_xy, min_magnitude: Optional[float] = None):
    return _flagged_angle(np.asarray(h_xx) + np.asarray(h_xy), _threshold(min_magnitude))


def phase_siso(h_xx, min_magnitude: Optional[float] = None):
    return _flagged_angle(h_xx, _threshold(min_magnitude))


def estimator_modulus(estimator: Union[Scheme, str]) -> float:
    return np.pi if Scheme(estimator) == Scheme.MIMO else 2 * np.pi


def estimate_phases(est: ChannelEstimate, estimator: Union[Scheme, str],
                    min_magnitude: Optional[float] = None) -> np.ndarray:
    """
    Apply one estimator to every frame and segment of a channel estimate.

    Returns:
        (T, N) radians with NaN where flagged
    """
    estimator = Scheme(estimator)
    if estimator.n_outputs > est.scheme.n_outputs or estimator.n_inputs > est.scheme.n_inputs:
        raise InvalidArgumentError(
            f"{estimator.value} estimator needs entries a {est.scheme.value} estimate does not carry"
        )
    h = est.matrices
    if estimator == Scheme.SISO:
        return phase_siso(h[..., 0, 0], min_magnitude)
    if estimator == Scheme.SIMO:
        return phase_simo(h[..., 0, 0], h[..., 1, 0], min_magnitude)
    if estimator == Scheme.MISO:
        return phase_miso(h[..., 0, 0], h[..., 0, 1], min_magnitude)
    return phase_mimo(h, min_magnitude)


def differential_phase(traces: PhaseTraceSet, gauge_segments: int) -> PhaseTraceSet:
    """
    Phase difference between each segment and the one ``gauge_segments`` before it.

    Segments closer than the gauge to the fibre start are referenced to segment 0.
    """
    values = traces.values
    n_segments = values.shape[1]
    if gauge_segments < 1:
        raise InvalidArgumentError(f"gauge_segments must be >= 1, got {gauge_segments}")
    if gauge_segments >= n_segments:
        raise InvalidArgumentError(f"gauge_segments ({gauge_segments}) must be below segment count {n_segments}")

    reference = np.empty_like(values)
    reference[:, :gauge_segments] = values[:, :1]
    reference[:, gauge_segments:] = values[:, :-gauge_segments]
    diff = wrap_phase(values - reference, traces.modulus)
    return PhaseTraceSet(values=diff, gauge_segments=gauge_segments, frame_period=traces.frame_period,
                         segment_length=traces.segment_length, modulus=traces.modulus,
                         estimator=traces.estimator)


def unwrap_time(series: np.ndarray, modulus: float = 2 * np.pi) -> np.ndarray:
    """
    Remove jumps larger than modulus / 2 along axis 0.

    NaN samples are bridged by the neighbouring valid values and restored afterwards.
    """
    if not (np.isclose(modulus, np.pi) or np.isclose(modulus, 2 * np.pi)):
        raise InvalidArgumentError(f"modulus must be pi or 2 pi, got {modulus}")
    series = np.asarray(series, dtype=float)
    flat = series.reshape(series.shape[0], -1)
    missing = np.isnan(flat)
    if not missing.any():
        return np.unwrap(flat, period=modulus, axis=0).reshape(series.shape)

    filled = pd.DataFrame(flat).ffill().bfill().fillna(0.0).to_numpy()
    out = np.unwrap(filled, period=modulus, axis=0)
    out[missing] = np.nan
    return out.reshape(series.shape)


def phase_traces(est: ChannelEstimate, estimator: Union[Scheme, str], gauge_segments: int = 1,
                 min_magnitude: Optional[float] = None) -> PhaseTraceSet:
    """Estimator, then differential phase over the gauge, then temporal unwrapping."""
    estimator = Scheme(estimator)
    modulus = estimator_modulus(estimator)
    raw = PhaseTraceSet(values=estimate_phases(est, estimator, min_magnitude), gauge_segments=0,
                        frame_period=est.frame_period, segment_length=est.segment_length,
                        modulus=modulus, estimator=estimator.value)
    diff = differential_phase(raw, gauge_segments)
    diff.values = unwrap_time(diff.values, modulus)
    return diff


def highpass(values: np.ndarray, cutoff_hz: float, sample_period: float) -> np.ndarray:
    """First-order recursive high-pass along axis 0: y[n] = a (y[n-1] + x[n] - x[n-1])."""
    rc = 1.0 / (2 * np.pi * cutoff_hz)
    a = rc / (rc + sample_period)
    return lfilter([a, -a], [1.0, -a], values, axis=0)


def stdv_profile(traces: PhaseTraceSet, window: Optional[float] = None,
                 highpass_hz: float = 0.0) -> StdvProfile:
    """
    Temporal standard deviation of the differential phase per segment.

    Args:
        traces: differential phase traces
        window: seconds of trace to use from the start; None uses the full trace
        highpass_hz: first-order high-pass cut-off; 0 disables

    Returns:
        StdvProfile; SNR is capped at ``settings.snr_cap_db`` for StDv below ``settings.stdv_floor``
    """
    values = traces.values
    n_frames = values.shape[0]
    if window is not None:
        if window > traces.duration + 1e-12:
            raise InvalidArgumentError(f"window {window} s exceeds trace duration {traces.duration} s")
        n_frames = max(1, int(round(window / traces.frame_period)))
        values = values[:n_frames]

    missing = np.isnan(values)
    flagged_fraction = missing.mean(axis=0)
    if missing.any():
        logger.debug("%d flagged samples excluded from StDv", int(missing.sum()))
        filled = pd.DataFrame(values).ffill().bfill().to_numpy()
    else:
        filled = values

    first = filled[:1]
    centred = filled - np.where(np.isnan(first), 0.0, first)
    if highpass_hz > 0:
        centred = highpass(np.nan_to_num(centred), highpass_hz, traces.frame_period)
    centred = np.where(missing, np.nan, centred)

    with np.errstate(invalid="ignore"):
        valid = (~missing).sum(axis=0)
        stdv = np.full(values.shape[1], np.nan)
        has_data = valid > 0
        stdv[has_data] = np.nanstd(centred[:, has_data], axis=0)

    capped = stdv < settings.stdv_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = -20 * np.log10(stdv)
    snr = np.where(capped, settings.snr_cap_db, snr)
    return StdvProfile(stdv=stdv, snr_db=snr, flagged_fraction=flagged_fraction, capped=capped,
                       segment_length=traces.segment_length)


def simo_fading_coeff(params: PolarizationParams):
    """Coefficient modulating the Rayleigh phasor under SIMO estimation."""
    beta, gamma, theta = (np.asarray(v, dtype=float) for v in (params.beta, params.gamma, params.theta_rot))
    rot = np.exp(2j * gamma)
    c = rot * np.cos(2 * beta) - 1j * np.sin(2 * beta) * (rot * np.cos(2 * theta) + np.sin(2 * theta))
    return complex(c) if c.ndim == 0 else c


def response_coefficient(estimator: Union[Scheme, str], params: PolarizationParams,
                         alpha: float = 0.0, theta_misalign=0.0) -> np.ndarray:
    """
    Modulus of the estimator argument for a unit phasor and no loss.

    Parameters are mirrored (beta, Theta -> -beta, -Theta) so that the SIMO result
    equals |simo_fading_coeff| when alpha = 0 and theta = 0.
    """
    estimator = Scheme(estimator)
    mirrored = PolarizationParams(beta=-np.asarray(params.beta), gamma=params.gamma,
                                  theta_rot=-np.asarray(params.theta_rot), common_phase=0.0)
    u = unitary_from_params(mirrored)
    h = np.swapaxes(u, -1, -2) @ reflection_matrix(alpha) @ u @ rotation(theta_misalign)
    if estimator == Scheme.SISO:
        return np.abs(h[..., 0, 0])
    if estimator == Scheme.SIMO:
        return np.abs(h[..., 0, 0] + h[..., 1, 0])
    if estimator == Scheme.MISO:
        return np.abs(h[..., 0, 0] + h[..., 0, 1])
    return np.abs(h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0])


def fading_map(x_param: str, x_values: Sequence[float], y_param: str, y_values: Sequence[float],
               fixed: Optional[Dict[str, float]] = None, alpha: float = 0.0,
               estimator: Union[Scheme, str] = Scheme.SIMO) -> FadingMap:
    """
    Grid of fading coefficients over two parameters.

    Args:
        x_param, y_param: two distinct names among beta, gamma, Theta, theta
        x_values, y_values: grid axes, at least two points each
        fixed: values of the remaining parameters (default 0)
        alpha: reflection polarization transfer
        estimator: SISO |h_xx|, SIMO |h_xx + h_yx|, MISO |h_xx + h_xy|, MIMO |det H|

    Returns:
        FadingMap with values of shape (len(y_values), len(x_values))
    """
    estimator = Scheme(estimator)
    for name in (x_param, y_param):
        if name not in MAP_PARAMS:
            raise InvalidArgumentError(f"Unknown map parameter '{name}', expected one of {MAP_PARAMS}")
    if x_param == y_param:
        raise InvalidArgumentError("Map axes must be two different parameters")
    x_values, y_values = np.asarray(x_values, dtype=float), np.asarray(y_values, dtype=float)
    if x_values.size < 2 or y_values.size < 2:
        raise InvalidArgumentError("Map grids need at least two points per axis")

    grid = {name: float((fixed or {}).get(name, 0.0)) for name in MAP_PARAMS}
    xx, yy = np.meshgrid(x_values, y_values)
    values = {name: np.full(xx.shape, grid[name]) for name in MAP_PARAMS}
    values[x_param], values[y_param] = xx, yy
    params = PolarizationParams(beta=values["beta"], gamma=values["gamma"], theta_rot=values["Theta"])

    analytic = estimator == Scheme.SIMO and alpha == 0 and not np.any(values["theta"])
    if analytic:
        coeff = np.abs(simo_fading_coeff(params))
    else:
        coeff = response_coefficient(estimator, params, alpha, values["theta"])
    logger.info("Computed %s fading map %dx%d (%s)", estimator.value, coeff.shape[0], coeff.shape[1],
                "closed form" if analytic else "numeric")
    return FadingMap(x_param=x_param, y_param=y_param, x_values=x_values, y_values=y_values,
                     values=coeff, estimator=estimator.value, alpha=alpha)


def map_minima(fmap: FadingMap, k: int = 5) -> pd.DataFrame:
    """The k smallest cells of a fading map, smallest first."""
    order = np.argsort(fmap.values, axis=None)[:k]
    rows, cols = np.unravel_index(order, fmap.values.shape)
    return pd.DataFrame({
        fmap.x_param: fmap.x_values[cols],
        fmap.y_param: fmap.y_values[rows],
        "value": fmap.values[rows, cols],
    })
