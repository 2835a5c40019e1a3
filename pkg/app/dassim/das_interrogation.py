"""
Code-based interrogation of a fibre realization.

Golay complementary pairs are sent as BPSK symbols on one or both input
polarizations, propagated through the baud-spaced backscatter channel with
self-homodyne laser phase noise and receiver AWGN, and correlated back into
per-segment channel matrices. A fast path skips the waveforms and draws the
post-correlation statistics directly.
"""

import logging
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from app.audit.logger import audit_span
from app.config.settings import settings

from .das_errors import InvalidArgumentError, ResourceBudgetError
from .das_fiber import dual_pass_response
from .das_models import (
    ChannelEstimate, FiberRealization, FrameLayout, GolayPair, ProbeConfig,
    ReceivedWaveform, Scheme,
)
from .das_utils import named_rng

logger = logging.getLogger(__name__)

# Bound on the complex workspace of one block of frame convolutions
CONV_BLOCK_BYTES = 64 * 2**20


def golay_pair(log2_len: int) -> GolayPair:
    """
    Complementary pair of length 2**log2_len by recursive doubling.

    Starting from a = b = [1]: a' = a || b, b' = a || -b.
    """
    if log2_len < 1:
        raise InvalidArgumentError(f"log2_len must be >= 1, got {log2_len}")
    a = np.array([1], dtype=np.int64)
    b = np.array([1], dtype=np.int64)
    for _ in range(log2_len):
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return GolayPair(a=a, b=b)


def frame_layout(n_segments: int, segment_length: float, cfg: ProbeConfig) -> FrameLayout:
    """Map segments onto symbol taps and size the guarded sub-frames."""
    spacing = cfg.tap_spacing
    m = max(1, int(round(segment_length / spacing)))
    if abs(m * spacing - segment_length) > 0.01 * segment_length:
        logger.warning(
            "segment_length %.3f m differs from %d x %.3f m symbol spacing by more than 1%%",
            segment_length, m, spacing,
        )
    n_taps = n_segments * m + 1
    return FrameLayout(
        taps_per_segment=m,
        n_taps=n_taps,
        guard=n_taps - 1,
        code_length=cfg.code_length,
        n_subframes=cfg.scheme.n_subframes,
        symbol_rate=cfg.symbol_rate,
    )


def build_probe(cfg: ProbeConfig, pair: GolayPair, layout: Optional[FrameLayout] = None) -> np.ndarray:
    """
    BPSK symbol streams of one frame.

    SISO/SIMO send (a, b) on X with Y silent; MISO/MIMO send X = (a, b, a, b) and
    Y = (a, b, -a, -b). Each sub-frame is followed by ``layout.guard`` zeros.

    Returns:
        (2, frame_length) complex array, rows X and Y
    """
    if pair.length != cfg.code_length:
        raise InvalidArgumentError(f"Golay pair length {pair.length} != code length {cfg.code_length}")
    guard = 0 if layout is None else layout.guard
    pad = np.zeros(guard)

    def _sub(code):
        return np.concatenate([code.astype(float), pad])

    a, b = _sub(pair.a), _sub(pair.b)
    if cfg.scheme.n_inputs == 1:
        x = np.concatenate([a, b])
        y = np.zeros_like(x)
    else:
        x = np.concatenate([a, b, a, b])
        y = np.concatenate([a, b, -a, -b])
    return np.stack([x, y]).astype(complex)


def wiener_phase(linewidth: float, sample_period: float, n_samples: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Laser phase as the cumulative sum of N(0, 2 pi linewidth T_S) increments."""
    if linewidth < 0:
        raise InvalidArgumentError(f"linewidth must be non-negative, got {linewidth}")
    if linewidth == 0:
        return np.zeros(n_samples)
    variance = 2 * np.pi * linewidth * sample_period
    return np.cumsum(rng.normal(0.0, np.sqrt(variance), n_samples))


def _tap_responses(responses: np.ndarray, layout: FrameLayout) -> np.ndarray:
    """Place H_i at tap delay i m; returns (F, 2, 2, K) with F = 1 for static fibres."""
    if responses.ndim == 3:
        responses = responses[None]
    n_frames, n_segments = responses.shape[:2]
    taps = np.zeros((n_frames, 2, 2, layout.n_taps), dtype=complex)
    delays = layout.taps_per_segment * np.arange(1, n_segments + 1)
    taps[..., delays] = np.moveaxis(responses, 1, -1)
    return taps


def waveform_footprint(fib: FiberRealization, cfg: ProbeConfig) -> int:
    """Estimated bytes held by the waveform path for this fibre and probe."""
    layout = frame_layout(fib.n_segments, fib.segment_length, cfg)
    samples = cfg.frames * layout.frame_length
    received = samples * cfg.scheme.n_outputs * 16
    transmitted = samples * cfg.scheme.n_inputs * 16
    laser = samples * 8
    return received + transmitted + laser + CONV_BLOCK_BYTES


def simulate_backscatter(fib: FiberRealization, cfg: ProbeConfig, seed: Optional[int] = None,
                         alpha: float = 0.0, theta_misalign: float = 0.0,
                         responses: Optional[np.ndarray] = None,
                         pair: Optional[GolayPair] = None) -> ReceivedWaveform:
    """
    Received dual-polarization waveform of ``cfg.frames`` probe frames.

    y(n) = e^{-j phi(n)} sum_d h_d s(n - d) e^{j phi(n - d)} + AWGN, in volts.

    Args:
        fib: Fibre realization
        cfg: Probe configuration
        seed: seeds the ``laser`` and ``rx`` substreams; defaults to ``cfg.seed``
        alpha, theta_misalign: reflection transfer and input misalignment
        responses: precomputed (N, 2, 2) or time-varying (T, N, 2, 2) responses
        pair: Golay pair; generated from ``cfg`` when omitted

    Returns:
        ReceivedWaveform with samples of shape (T, n_outputs, frame_length)
    """
    footprint = waveform_footprint(fib, cfg)
    budget = settings.waveform_memory_budget_mb * 2**20
    if footprint > budget:
        raise ResourceBudgetError(
            f"Waveform simulation needs ~{footprint / 2**20:.0f} MiB, budget is "
            f"{settings.waveform_memory_budget_mb} MiB; reduce frames, code length or fibre length",
            {"required_mib": footprint / 2**20, "budget_mib": settings.waveform_memory_budget_mb},
        )

    seed = cfg.seed if seed is None else int(seed)
    scheme = cfg.scheme
    pair = pair or golay_pair(cfg.code_log2_length)
    layout = frame_layout(fib.n_segments, fib.segment_length, cfg)
    if responses is None:
        responses = dual_pass_response(fib, alpha, theta_misalign)
    if responses.ndim == 4 and responses.shape[0] != cfg.frames:
        raise InvalidArgumentError(f"responses cover {responses.shape[0]} frames, expected {cfg.frames}")

    n_in, n_out = scheme.n_inputs, scheme.n_outputs
    frame_len = layout.frame_length
    scale = cfg.probe_amplitude

    with audit_span(logger, "simulate_backscatter",
                    extra={"scheme": scheme.value, "frames": cfg.frames, "segments": fib.n_segments}):
        symbols = build_probe(cfg, pair, layout)[:n_in]
        taps = _tap_responses(responses, layout)[:, :n_out, :n_in, :]
        phase = wiener_phase(cfg.laser_linewidth, cfg.symbol_period, cfg.frames * frame_len,
                             named_rng(seed, "laser")).reshape(cfg.frames, frame_len)

        samples = np.empty((cfg.frames, n_out, frame_len), dtype=complex)
        per_frame = n_out * n_in * (frame_len + layout.n_taps) * 16 * 3
        block = max(1, CONV_BLOCK_BYTES // per_frame)
        for start in range(0, cfg.frames, block):
            stop = min(start + block, cfg.frames)
            rotor = np.exp(1j * phase[start:stop])
            drive = symbols[None, None, :, :] * rotor[:, None, None, :]
            h = taps if taps.shape[0] == 1 else taps[start:stop]
            out = fftconvolve(drive, h, mode="full", axes=-1)[..., :frame_len].sum(axis=2)
            samples[start:stop] = out * np.conj(rotor)[:, None, :]

        samples *= scale
        sigma = cfg.rx_noise_sigma
        if sigma > 0:
            rx_rng = named_rng(seed, "rx")
            samples += sigma * (rx_rng.standard_normal(samples.shape)
                                + 1j * rx_rng.standard_normal(samples.shape))

    return ReceivedWaveform(scheme=scheme, samples=samples, layout=layout, scale=scale,
                            segment_length=fib.segment_length)


def _correlate_subframes(windows: np.ndarray, codes: np.ndarray, n_taps: int) -> np.ndarray:
    """Lag-domain correlation of every sub-frame window with its code; lags 0..K-1."""
    kernel = codes[..., ::-1].astype(float)
    out = fftconvolve(windows, kernel[None, None], mode="valid", axes=-1)
    if out.shape[-1] != n_taps:
        raise InvalidArgumentError(f"Correlation produced {out.shape[-1]} lags, expected {n_taps}")
    return out


def estimate_channel(received: ReceivedWaveform, pair: GolayPair, cfg: ProbeConfig) -> ChannelEstimate:
    """
    Correlate each frame against its complementary codes and aggregate taps per segment.

    Returns:
        ChannelEstimate with matrices of shape (T, N, n_outputs, n_inputs)
    """
    layout = received.layout
    scheme = received.scheme
    if scheme != cfg.scheme:
        raise InvalidArgumentError(f"Waveform scheme {scheme.value} differs from probe {cfg.scheme.value}")
    samples = received.samples
    if samples.shape[-1] != layout.frame_length:
        raise InvalidArgumentError(
            f"Frame length {samples.shape[-1]} does not match {layout.n_subframes} x {layout.subframe_length}"
        )
    if pair.length != layout.code_length:
        raise InvalidArgumentError("Golay pair length does not match the received frames")

    n_frames, n_out = samples.shape[:2]
    windows = samples.reshape(n_frames, n_out, layout.n_subframes, layout.subframe_length)
    codes = np.stack([pair.a, pair.b] * (layout.n_subframes // 2))
    corr = _correlate_subframes(windows, codes, layout.n_taps)
    lc, scale = layout.code_length, received.scale

    with audit_span(logger, "estimate_channel", extra={"scheme": scheme.value, "frames": n_frames}):
        first = corr[:, :, 0] + corr[:, :, 1]
        if scheme.n_inputs == 1:
            taps = (first / (2 * lc * scale))[..., None, :]
        else:
            second = corr[:, :, 2] + corr[:, :, 3]
            taps = np.stack([first + second, first - second], axis=2) / (4 * lc * scale)

        m = layout.taps_per_segment
        n_segments = (layout.n_taps - 1) // m
        segments = taps[..., 1:].reshape(n_frames, n_out, scheme.n_inputs, n_segments, m).sum(axis=-1)
        matrices = np.moveaxis(segments, -1, 1)

    return ChannelEstimate(scheme=scheme, matrices=matrices, frame_period=layout.frame_period,
                           segment_length=received.segment_length)


def scheme_view(h: np.ndarray, scheme: Scheme) -> np.ndarray:
    """Restrict full 2x2 matrices (..., 2, 2) to the entries a scheme observes."""
    return h[..., :scheme.n_outputs, :scheme.n_inputs]


def _sampled_brownian(times: np.ndarray, linewidth: float, rng: np.random.Generator) -> np.ndarray:
    """Exact Wiener path with variance rate 2 pi linewidth, sampled at arbitrary times."""
    flat = times.ravel()
    grid, inverse = np.unique(flat, return_inverse=True)
    steps = np.diff(grid, prepend=grid[0])
    path = np.cumsum(rng.normal(0.0, 1.0, grid.shape[0]) * np.sqrt(2 * np.pi * linewidth * steps))
    return path[inverse].reshape(times.shape)


def _instant_phasors(layout: FrameLayout, n_frames: int, n_segments: int, linewidth: float,
                     rng: np.random.Generator) -> np.ndarray:
    """e^{j psi} with psi = W(t_f - tau_i) - W(t_f) at the start of every frame."""
    frame_times = layout.frame_period * np.arange(n_frames)
    delays = layout.taps_per_segment * np.arange(1, n_segments + 1) / layout.symbol_rate
    times = np.concatenate([frame_times[:, None], frame_times[:, None] - delays[None, :]], axis=1)
    w = _sampled_brownian(times, linewidth, rng)
    return np.exp(1j * (w[:, 1:] - w[:, :1]))


def _code_average_phasors(layout: FrameLayout, n_frames: int, n_segments: int, linewidth: float,
                          rng: np.random.Generator) -> np.ndarray:
    """
    Phase-noise factors seen by the correlation receiver.

    For every code pair g (sub-frames 2g, 2g+1) the mean over its code symbols n of
    e^{j(phi(n) - phi(n + d_i))}, on the same symbol-rate laser path as
    ``simulate_backscatter``.

    Returns:
        (T, N, n_subframes // 2) complex
    """
    frame_len = layout.frame_length
    n_pairs = layout.n_subframes // 2
    phase = wiener_phase(linewidth, 1.0 / layout.symbol_rate, n_frames * frame_len, rng)
    phase = phase.reshape(n_frames, frame_len)
    masks = np.zeros((n_pairs, frame_len))
    for k in range(layout.n_subframes):
        start = k * layout.subframe_length
        masks[k // 2, start:start + layout.code_length] = 1.0
    delays = layout.taps_per_segment * np.arange(1, n_segments + 1)

    out = np.empty((n_frames, n_segments, n_pairs), dtype=complex)
    block = max(1, CONV_BLOCK_BYTES // (frame_len * 16 * 6 * n_pairs))
    for start in range(0, n_frames, block):
        rotor = np.exp(1j * phase[start:start + block])
        for g in range(n_pairs):
            corr = fftconvolve(np.conj(rotor), (rotor * masks[g])[:, ::-1], mode="full", axes=-1)
            out[start:start + block, :, g] = corr[:, frame_len - 1 + delays]
    return out / (2 * layout.code_length)


def _pair_mixing(h: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """
    Apply per-code-pair phase factors to scheme-restricted responses.

    Single-input schemes scale by the one pair factor. With two inputs the sum and
    difference of the pairs separate the columns, so H_hat = H [[e, d], [d, e]]
    with e = (e1 + e2) / 2 and d = (e1 - e2) / 2.
    """
    if factors.shape[-1] == 1:
        return h * factors[..., 0][..., None, None]
    mean = 0.5 * (factors[..., 0] + factors[..., 1])
    half_diff = 0.5 * (factors[..., 0] - factors[..., 1])
    mixing = np.stack([np.stack([mean, half_diff], axis=-1), np.stack([half_diff, mean], axis=-1)], axis=-2)
    return h @ mixing


def tap_leakage_variance(h: np.ndarray, layout: FrameLayout, linewidth: float) -> np.ndarray:
    """
    Variance of the crosstalk that laser phase drift lets through the code sidelobes.

    Tap d' leaks into every other tap with variance ~ 2 pi dnu T_S min(d', L_c / 3) |h_d'|^2
    / (n_subframes L_c); aggregation sums m taps per segment.

    Args:
        h: (T, N, n_outputs, n_inputs) responses
        layout: frame layout of the probe
        linewidth: laser linewidth in Hz

    Returns:
        (T, N, n_outputs) variance per output
    """
    sigma2 = 2 * np.pi * linewidth / layout.symbol_rate
    delays = layout.taps_per_segment * np.arange(1, h.shape[1] + 1)
    weights = np.minimum(delays, layout.code_length / 3.0)
    power = (np.abs(h) ** 2).sum(axis=-1) * weights[None, :, None]
    others = power.sum(axis=1, keepdims=True) - power
    return layout.taps_per_segment * sigma2 * others / (layout.n_subframes * layout.code_length)


def fast_channel_sim(fib: FiberRealization, cfg: ProbeConfig, seed: Optional[int] = None,
                     alpha: float = 0.0, theta_misalign: float = 0.0,
                     responses: Optional[np.ndarray] = None,
                     phase_sampling: Optional[str] = None) -> ChannelEstimate:
    """
    Post-correlation channel estimates without waveforms.

    H_hat[t, i] = H_i e^{j psi[t, i]} + E[t, i], E at the correlated-AWGN level of the
    waveform path. ``phase_sampling`` (default ``cfg.phase_sampling``) selects the laser
    term: ``instant`` takes psi = W(t_f - tau_i) - W(t_f) once per frame, so frames are
    independent and the laser variance is common to every scheme; ``code_average``
    reproduces the correlation receiver (per-code-pair phase averages plus tap crosstalk)
    and is the mode to compare against simulate_backscatter.
    """
    phase_sampling = phase_sampling or cfg.phase_sampling
    if phase_sampling not in ("code_average", "instant"):
        raise InvalidArgumentError(f"Unknown phase_sampling '{phase_sampling}'")
    seed = cfg.seed if seed is None else int(seed)
    scheme = cfg.scheme
    layout = frame_layout(fib.n_segments, fib.segment_length, cfg)
    if responses is None:
        responses = dual_pass_response(fib, alpha, theta_misalign)
    if responses.ndim == 4 and responses.shape[0] != cfg.frames:
        raise InvalidArgumentError(f"responses cover {responses.shape[0]} frames, expected {cfg.frames}")

    with audit_span(logger, "fast_channel_sim",
                    extra={"scheme": scheme.value, "frames": cfg.frames, "segments": fib.n_segments}):
        h = scheme_view(np.broadcast_to(responses, (cfg.frames,) + responses.shape[-3:]), scheme)
        rx_rng = named_rng(seed, "rx")

        if cfg.laser_linewidth > 0:
            laser_rng = named_rng(seed, "laser")
            if phase_sampling == "instant":
                h = h * _instant_phasors(layout, cfg.frames, fib.n_segments, cfg.laser_linewidth,
                                         laser_rng)[..., None, None]
            else:
                leakage = tap_leakage_variance(h, layout, cfg.laser_linewidth)[..., None]
                factors = _code_average_phasors(layout, cfg.frames, fib.n_segments, cfg.laser_linewidth, laser_rng)
                h = _pair_mixing(h, factors)
                h = h + np.sqrt(leakage / 2) * (rx_rng.standard_normal(h.shape) + 1j * rx_rng.standard_normal(h.shape))
        else:
            h = h.copy()

        sigma = cfg.rx_noise_sigma
        if sigma > 0:
            scale = cfg.probe_amplitude
            variance = 2 * sigma**2 * layout.taps_per_segment / (layout.n_subframes * layout.code_length * scale**2)
            h = h + np.sqrt(variance / 2) * (rx_rng.standard_normal(h.shape) + 1j * rx_rng.standard_normal(h.shape))

    return ChannelEstimate(scheme=scheme, matrices=np.ascontiguousarray(h), frame_period=layout.frame_period,
                           segment_length=fib.segment_length)
