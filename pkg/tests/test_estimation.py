import numpy as np
import pytest

from app.dassim.das_errors import InvalidArgumentError
from app.dassim.das_estimation import (
    differential_phase, estimate_phases, fading_map, highpass, map_minima, phase_mimo, phase_miso, phase_simo,
    phase_siso, phase_traces, simo_fading_coeff, stdv_profile, unwrap_time,
)
from app.dassim.das_fiber import dual_pass_response, synthesize
from app.dassim.das_jones import rotation, sample_haar, unitary_from_params
from app.dassim.das_models import ChannelEstimate, FiberConfig, PhaseTraceSet, PolarizationParams, Scheme
from app.dassim.das_utils import wrap_phase


def _traces(values, frame_period=1e-3, modulus=2 * np.pi):
    return PhaseTraceSet(values=np.asarray(values, dtype=float), gauge_segments=0, frame_period=frame_period,
                         modulus=modulus)


def _random_h(rng, n):
    params, u = sample_haar(rng, n)
    p = rng.normal(size=n) + 1j * rng.normal(size=n)
    h = p[:, None, None] * (np.swapaxes(u, -1, -2) @ u)
    return params, p, h


def test_mimo_reference_values():
    assert phase_mimo(np.exp(1j * np.pi / 3) * np.eye(2)) == pytest.approx(np.pi / 3)
    _, u = sample_haar(np.random.default_rng(1))
    h = 0.8 * np.exp(2.0j) * (u.T @ u)
    assert phase_mimo(h) == pytest.approx(2.0 - np.pi)


def test_mimo_is_polarization_independent(rng):
    _, u = sample_haar(rng, 10_000)
    p = np.exp(1j * rng.uniform(-np.pi, np.pi, 10_000))
    theta = rng.uniform(0, np.pi, 10_000)
    h = p[:, None, None] * (np.swapaxes(u, -1, -2) @ u @ rotation(theta))
    deviation = wrap_phase(phase_mimo(h) - np.angle(p), np.pi)
    assert np.max(np.abs(deviation)) <= 1e-9


def test_mimo_invariant_under_special_unitary_congruence(rng):
    _, _, h = _random_h(rng, 1000)
    _, v = sample_haar(rng, 1000)
    moved = np.swapaxes(v, -1, -2) @ h @ v
    np.testing.assert_allclose(wrap_phase(phase_mimo(moved) - phase_mimo(h), np.pi), 0.0, atol=1e-10)


def test_single_entry_estimators():
    assert phase_simo(0.5 + 0.5j, 0.0) == pytest.approx(np.pi / 4)
    assert phase_simo(1.0, 1j) == pytest.approx(np.pi / 4)
    assert phase_miso(2.0, 0.0) == 0.0
    assert phase_siso(-1j) == pytest.approx(-np.pi / 2)


def test_flagged_samples_are_nan():
    assert np.isnan(phase_siso(1e-9))
    assert np.isnan(phase_simo(1e-3, -1e-3))
    assert np.isnan(phase_mimo(np.zeros((2, 2))))
    assert not np.isnan(phase_siso(1e-9, min_magnitude=1e-12))


def test_siso_fades_on_orthogonal_round_trip():
    # beta = pi/4 and Theta = pi/4 map x onto a state whose round trip has no x component
    params = PolarizationParams(beta=np.pi / 4, gamma=0.3, theta_rot=np.pi / 4)
    u = unitary_from_params(params)
    h = 0.9 * np.exp(0.4j) * (u.T @ u)
    assert abs(h[0, 0]) < 1e-6
    assert np.isnan(phase_siso(h[0, 0]))
    assert not np.isnan(phase_mimo(h))


def test_simo_bias_is_the_fading_coefficient_phase(rng):
    params, _ = sample_haar(rng, 10_000)
    mirrored = PolarizationParams(beta=-params.beta, gamma=params.gamma, theta_rot=-params.theta_rot)
    u = unitary_from_params(mirrored)
    p = rng.normal(size=10_000) + 1j * rng.normal(size=10_000)
    h = p[:, None, None] * (np.swapaxes(u, -1, -2) @ u)
    c = simo_fading_coeff(params)
    keep = (np.abs(c) > 1e-3) & (np.abs(p) > 1e-2)
    bias = phase_simo(h[:, 0, 0], h[:, 1, 0]) - np.angle(p)
    np.testing.assert_allclose(wrap_phase(bias - np.angle(c))[keep], 0.0, atol=1e-9)


def test_fading_coefficient_values():
    assert simo_fading_coeff(PolarizationParams(beta=0.0, gamma=0.7, theta_rot=0.3)) == pytest.approx(np.exp(1.4j))
    zero = simo_fading_coeff(PolarizationParams(beta=np.pi / 4, gamma=np.pi / 2, theta_rot=np.pi / 8))
    assert abs(zero) < 1e-12


def test_flag_rates_follow_diversity_order(rng):
    params, u = sample_haar(rng, 100_000)
    h = np.swapaxes(u, -1, -2) @ u
    threshold = 0.1
    siso = np.isnan(phase_siso(h[:, 0, 0], threshold)).mean()
    simo = np.isnan(phase_simo(h[:, 0, 0], h[:, 1, 0], threshold)).mean()
    mimo = np.isnan(phase_mimo(h, threshold)).mean()
    assert siso > simo > mimo == 0.0


def test_estimator_needs_matching_entries():
    est = ChannelEstimate(scheme=Scheme.SIMO, matrices=np.ones((2, 3, 2, 1), dtype=complex), frame_period=1e-3,
                          segment_length=2.0)
    assert estimate_phases(est, Scheme.SISO).shape == (2, 3)
    with pytest.raises(InvalidArgumentError):
        estimate_phases(est, Scheme.MIMO)


def test_differential_phase_of_constant_phases_is_zero():
    diff = differential_phase(_traces(np.full((4, 6), 1.3)), 2)
    np.testing.assert_allclose(diff.values, 0.0, atol=1e-15)
    assert diff.gauge_segments == 2


def test_differential_phase_references_first_segment():
    values = np.tile(np.arange(5, dtype=float) * 0.1, (3, 1))
    diff = differential_phase(_traces(values), 2).values
    np.testing.assert_allclose(diff[0], [0.0, 0.1, 0.2, 0.2, 0.2], atol=1e-15)


def test_differential_phase_gauge_bounds():
    with pytest.raises(InvalidArgumentError):
        differential_phase(_traces(np.zeros((3, 4))), 4)
    with pytest.raises(InvalidArgumentError):
        differential_phase(_traces(np.zeros((3, 4))), 0)


def test_double_gauge_matches_coarser_segmentation(rng):
    fine = rng.uniform(-np.pi, np.pi, (10, 40))
    wide = differential_phase(_traces(fine), 2).values[:, 3::2]
    coarse = differential_phase(_traces(fine[:, 1::2]), 1).values[:, 1:]
    np.testing.assert_allclose(wide, coarse, atol=1e-12)


def test_unwrap_time_leaves_smooth_series_alone(rng):
    constant = np.full((50, 3), 0.4)
    np.testing.assert_array_equal(unwrap_time(constant), constant)
    noise = 0.05 * rng.standard_normal((200, 4))
    np.testing.assert_allclose(unwrap_time(noise), noise)


def test_unwrap_time_restores_a_ramp():
    ramp = np.linspace(0, 3 * np.pi, 200)
    wrapped = wrap_phase(ramp, np.pi)
    np.testing.assert_allclose(unwrap_time(wrapped, np.pi), ramp - ramp[0] + wrapped[0], atol=1e-12)


def test_unwrap_time_is_idempotent_and_keeps_gaps():
    series = wrap_phase(np.linspace(0, 10, 100))
    series[[10, 11, 50]] = np.nan
    once = unwrap_time(series)
    np.testing.assert_array_equal(np.isnan(once), np.isnan(series))
    np.testing.assert_allclose(unwrap_time(once), once)
    np.testing.assert_allclose(once[~np.isnan(once)], np.linspace(0, 10, 100)[~np.isnan(series)], atol=1e-12)


def test_unwrap_time_rejects_other_moduli():
    with pytest.raises(InvalidArgumentError):
        unwrap_time(np.zeros(5), 1.0)


def test_static_trace_has_capped_snr():
    profile = stdv_profile(_traces(np.full((20, 3), 0.7)))
    np.testing.assert_array_equal(profile.stdv, 0.0)
    np.testing.assert_array_equal(profile.snr_db, 120.0)
    assert profile.capped.all()


def test_snr_of_tenth_radian():
    values = np.tile([0.1, -0.1], 50)[:, None]
    profile = stdv_profile(_traces(values))
    assert profile.stdv[0] == pytest.approx(0.1)
    assert profile.snr_db[0] == pytest.approx(20.0)


def test_stdv_of_white_phase_noise(rng):
    values = 0.2 + 0.05 * rng.standard_normal((10_000, 3))
    np.testing.assert_allclose(stdv_profile(_traces(values)).stdv, 0.05, rtol=0.05)


def test_stdv_window_and_flag_fraction():
    values = np.zeros((100, 2))
    values[50:, 0] = 1.0
    values[::10, 1] = np.nan
    profile = stdv_profile(_traces(values), window=0.05)
    np.testing.assert_allclose(profile.stdv, 0.0)
    assert profile.flagged_fraction[1] == pytest.approx(0.1)
    with pytest.raises(InvalidArgumentError):
        stdv_profile(_traces(values), window=1.0)


def test_highpass_removes_slow_drift():
    t = np.arange(2000) * 1e-3
    drift = np.column_stack([0.5 * t, np.sin(2 * np.pi * 1.0 * t)])
    filtered = highpass(drift, 50.0, 1e-3)
    assert np.all(np.std(filtered[200:], axis=0) < 0.05 * np.std(drift, axis=0))
    profile = stdv_profile(_traces(drift), highpass_hz=50.0)
    assert np.all(profile.stdv < stdv_profile(_traces(drift)).stdv)


def test_noiseless_static_fibre_has_zero_stdv():
    fib = synthesize(FiberConfig(length=60.0, seed=3))
    h = np.broadcast_to(dual_pass_response(fib), (8, fib.n_segments, 2, 2))
    est = ChannelEstimate(scheme=Scheme.MIMO, matrices=h, frame_period=1e-4, segment_length=2.0)
    for scheme in Scheme:
        profile = stdv_profile(phase_traces(est, scheme))
        np.testing.assert_allclose(np.nan_to_num(profile.stdv), 0.0, atol=1e-12)


GRID_THETA = np.linspace(0, np.pi / 2, 181)
GRID_BETA = np.linspace(-np.pi / 2, np.pi / 2, 181)


def test_simo_map_finds_the_analytic_zeros():
    fmap = fading_map("Theta", GRID_THETA, "beta", GRID_BETA, fixed={"gamma": np.pi / 2})
    assert fmap.values.shape == (181, 181)
    minima = map_minima(fmap, k=2)
    found = {(round(b, 6), round(t, 6)) for b, t in zip(minima["beta"], minima["Theta"])}
    assert found == {(round(-np.pi / 4, 6), round(np.pi / 8, 6)), (round(np.pi / 4, 6), round(np.pi / 8, 6))}
    assert minima["value"].max() < 1e-12


def test_numeric_map_agrees_with_closed_form():
    analytic = fading_map("Theta", GRID_THETA[::10], "beta", GRID_BETA[::10], fixed={"gamma": 0.8})
    numeric = fading_map("Theta", GRID_THETA[::10], "beta", GRID_BETA[::10], fixed={"gamma": 0.8, "theta": 1e-300})
    np.testing.assert_allclose(numeric.values, analytic.values, atol=1e-12)


def test_reflection_transfer_reshapes_the_map():
    base = fading_map("Theta", GRID_THETA, "beta", GRID_BETA, fixed={"gamma": np.pi / 2})
    leaky = fading_map("Theta", GRID_THETA, "beta", GRID_BETA, fixed={"gamma": np.pi / 2}, alpha=0.15)
    assert np.max(np.abs(leaky.values - base.values)) > 0.1


def test_mimo_map_is_flat():
    fmap = fading_map("Theta", GRID_THETA, "beta", GRID_BETA, fixed={"gamma": 0.4}, estimator=Scheme.MIMO)
    np.testing.assert_allclose(fmap.values, 1.0, atol=1e-12)


def test_map_arguments_are_validated():
    with pytest.raises(InvalidArgumentError):
        fading_map("Theta", GRID_THETA, "Theta", GRID_BETA)
    with pytest.raises(InvalidArgumentError):
        fading_map("phi", GRID_THETA, "beta", GRID_BETA)
    with pytest.raises(InvalidArgumentError):
        fading_map("Theta", [0.1], "beta", GRID_BETA)
