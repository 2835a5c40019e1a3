import numpy as np
import pytest

from app.config.settings import settings
from app.dassim.das_campaign import CampaignRunner, crossing_fractions, distance_curve, run_campaign, snr_summary
from app.dassim.das_errors import InvalidArgumentError, PartialResultsError, ResourceBudgetError
from app.dassim.das_io import write_campaign_outputs
from app.dassim.das_models import (
    POL_FREE, CampaignConfig, CampaignStats, FiberConfig, ProbeConfig, Scheme, StdvProfile,
)


def _config(**overrides) -> CampaignConfig:
    values = dict(
        lengths=[40.0],
        fibres_per_length=4,
        estimators=[Scheme.SIMO, Scheme.MIMO],
        seed=17,
        threads=1,
        distance_bin_m=10.0,
        fiber=FiberConfig(),
        probe=ProbeConfig(code_log2_length=6, frames=32),
        allow_short_records=True,
    )
    values.update(overrides)
    return CampaignConfig(**values)


@pytest.fixture(scope="module")
def small_stats():
    return run_campaign(_config(include_pol_free_baseline=True))


def test_campaign_is_deterministic(small_stats):
    again = run_campaign(_config(include_pol_free_baseline=True))
    assert small_stats.entries.keys() == again.entries.keys()
    for key, entry in small_stats.entries.items():
        np.testing.assert_array_equal(entry.samples, again.entries[key].samples)
        assert entry.percentiles == again.entries[key].percentiles


def test_results_do_not_depend_on_worker_count(small_stats):
    parallel = run_campaign(_config(include_pol_free_baseline=True, threads=2))
    for key, entry in small_stats.entries.items():
        np.testing.assert_array_equal(entry.samples, parallel.entries[key].samples)


def test_stats_files_are_byte_identical(small_stats, tmp_path):
    cfg = _config(include_pol_free_baseline=True)
    first = write_campaign_outputs(small_stats, cfg, tmp_path / "a")
    second = write_campaign_outputs(run_campaign(cfg), cfg, tmp_path / "b")
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes()


def test_estimators_and_baseline_are_pooled(small_stats):
    assert small_stats.lengths == [40.0]
    assert small_stats.estimators() == ["SIMO", "MIMO", POL_FREE]
    assert small_stats.completed_units == small_stats.total_units == 4


def test_histogram_bookkeeping(small_stats):
    for entry in small_stats.entries.values():
        assert entry.counts.sum() + entry.overflow == entry.n_samples
        assert entry.n_samples + entry.n_flagged == 19 * 4
        assert len(entry.bin_edges) == 101
        assert entry.percentiles["p75"] <= entry.percentiles["p95"]


def test_fixed_histogram_range_counts_overflow():
    stats = run_campaign(_config(histogram_max_rad=1e-9))
    for entry in stats.entries.values():
        assert entry.overflow == entry.n_samples
        assert entry.counts.sum() == 0
        assert entry.percentiles["p75"] > 1e-9


def test_crossing_against_itself_matches_percentile_definition(small_stats):
    fractions = crossing_fractions(small_stats, Scheme.MIMO, Scheme.MIMO)[40.0]
    assert fractions["p75"] == pytest.approx(0.25, abs=0.02)
    assert fractions["p95"] == pytest.approx(0.05, abs=0.02)


def test_crossing_requires_both_estimators(small_stats):
    with pytest.raises(InvalidArgumentError):
        crossing_fractions(small_stats, Scheme.MIMO, Scheme.SISO)


def test_snr_summary_reports_differences(small_stats):
    summary = snr_summary(small_stats)[40.0]
    mimo, simo = summary["estimators"]["MIMO"], summary["estimators"]["SIMO"]
    assert summary["mimo_minus_simo_mean_db"] == pytest.approx(mimo["mean_db"] - simo["mean_db"])
    assert summary["simo_minus_mimo_var_db2"] == pytest.approx(simo["var_db2"] - mimo["var_db2"])


def test_snr_summary_single_estimator():
    stats = run_campaign(_config(estimators=[Scheme.MIMO]))
    summary = snr_summary(stats)[40.0]
    assert summary["mimo_minus_simo_mean_db"] is None
    assert summary["simo_minus_mimo_var_db2"] is None
    with pytest.raises(InvalidArgumentError):
        snr_summary(CampaignStats())


def test_distance_curve_bins(small_stats):
    curve = small_stats.get(40.0, "MIMO").distance_curve
    assert list(curve.columns) == ["bin_start_m", "bin_end_m", "mean_stdv_rad", "n_samples"]
    assert curve["bin_start_m"].tolist() == [0.0, 10.0, 20.0, 30.0]
    assert curve["n_samples"].sum() == 76


def _profile(stdv):
    stdv = np.asarray(stdv, dtype=float)
    zeros = np.zeros_like(stdv)
    return StdvProfile(stdv=stdv, snr_db=zeros, flagged_fraction=zeros, capped=zeros.astype(bool), segment_length=2.0)


def test_distance_curve_pools_fibres_and_skips_the_reference():
    profiles = [_profile([0.0, 1.0, 3.0, 3.0, 7.0]), _profile([0.0, 3.0, 5.0, 5.0, 9.0])]
    curve = distance_curve(profiles, 4.0)
    assert curve["bin_start_m"].tolist() == [0.0, 4.0, 8.0]
    assert curve["mean_stdv_rad"].tolist() == [2.0, 4.0, 8.0]
    assert curve["n_samples"].tolist() == [2, 4, 2]


def test_sample_budget_is_checked(monkeypatch):
    monkeypatch.setattr(settings, "campaign_sample_budget", 10)
    with pytest.raises(ResourceBudgetError):
        run_campaign(_config())


def test_invalid_gauge_is_rejected():
    with pytest.raises(InvalidArgumentError):
        CampaignRunner(_config(gauge_segments=20)).check_budget()


def test_runtime_budget_returns_partial_results():
    cfg = _config(fibres_per_length=8)
    with pytest.raises(PartialResultsError) as info:
        CampaignRunner(cfg, threads=1, max_runtime_s=0.0).run()
    assert info.value.completed == 4
    assert info.value.total == 8
    assert info.value.stats.completed_units == 4


def test_campaign_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(lengths=[])
    with pytest.raises(ValueError):
        CampaignConfig(estimators=[Scheme.MIMO, Scheme.MIMO])
    with pytest.raises(ValueError):
        CampaignConfig(percentiles=[75, 100])
    assert CampaignConfig(percentiles=[95, 75]).percentiles == [75, 95]


@pytest.mark.slow
def test_mimo_matches_polarization_free_baseline_over_two_kilometres():
    cfg = CampaignConfig(lengths=[2000.0], fibres_per_length=50, estimators=[Scheme.SIMO, Scheme.MIMO],
                         include_pol_free_baseline=True, seed=4, distance_bin_m=200.0)
    stats = run_campaign(cfg)
    mimo = stats.get(2000.0, "MIMO").distance_curve["mean_stdv_rad"].to_numpy()
    flat = stats.get(2000.0, POL_FREE).distance_curve["mean_stdv_rad"].to_numpy()
    simo = stats.get(2000.0, "SIMO").distance_curve["mean_stdv_rad"].to_numpy()
    np.testing.assert_allclose(mimo, flat, rtol=0.05)
    assert np.mean(simo > mimo) >= 0.9


@pytest.mark.slow
def test_polarization_diversity_statistics_at_340_m():
    cfg = CampaignConfig(lengths=[340.0], fibres_per_length=200, estimators=[Scheme.SIMO, Scheme.MIMO], seed=9,
                         probe=ProbeConfig(frames=100))
    stats = run_campaign(cfg)
    fractions = crossing_fractions(stats, Scheme.MIMO, Scheme.SIMO)[340.0]
    summary = snr_summary(stats)[340.0]
    assert fractions["p75"] == pytest.approx(0.50, abs=0.10)
    assert fractions["p95"] == pytest.approx(0.15, abs=0.05)
    assert summary["mimo_minus_simo_mean_db"] == pytest.approx(1.0, abs=0.5)
    assert summary["simo_minus_mimo_var_db2"] == pytest.approx(3.0, abs=1.5)


@pytest.mark.slow
def test_estimator_ordering_along_ten_kilometres():
    cfg = CampaignConfig(lengths=[10_000.0], fibres_per_length=5, seed=10_000, distance_bin_m=500.0,
                         estimators=[Scheme.SISO, Scheme.SIMO, Scheme.MISO, Scheme.MIMO])
    stats = run_campaign(cfg)
    curves = {name: stats.get(10_000.0, name).distance_curve["mean_stdv_rad"].to_numpy()
              for name in ("SISO", "SIMO", "MISO", "MIMO")}
    quarter = len(curves["MIMO"]) // 4
    for curve in curves.values():
        assert np.mean(curve[-quarter:]) > np.mean(curve[:quarter])
    assert np.all(curves["SIMO"] > curves["MIMO"])
    assert np.all(curves["SISO"] > curves["MIMO"])
    np.testing.assert_allclose(curves["MISO"], curves["SIMO"], rtol=0.05)
    # one output fades more often but carries half the receiver noise of the summed pair
    np.testing.assert_allclose(curves["SISO"], curves["SIMO"], rtol=0.2)


def test_short_records_need_an_explicit_opt_out():
    with pytest.raises(InvalidArgumentError, match="allow_short_records"):
        CampaignRunner(_config(allow_short_records=False)).check_budget()
    CampaignRunner(_config()).check_budget()
    CampaignRunner(_config(allow_short_records=False, probe=ProbeConfig(code_log2_length=6, frames=100))).check_budget()
