"""
Seeded Monte Carlo comparison of phase estimators.

A work unit is one fibre at one length: it is synthesised once and probed with
every configured scheme (plus the polarization-free baseline when requested), each
run sharing the unit's laser and receiver substreams. Units are spread over a
joblib worker pool and gathered in submission order, so the pooled statistics do
not depend on scheduling.
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.audit.logger import audit_span
from app.config.settings import settings

from .das_errors import InvalidArgumentError, PartialResultsError, ResourceBudgetError
from .das_estimation import phase_traces, stdv_profile
from .das_fiber import dual_pass_response, synthesize
from .das_interrogation import estimate_channel, fast_channel_sim, golay_pair, simulate_backscatter
from .das_models import (
    POL_FREE, CampaignConfig, CampaignStats, ChannelEstimate, EstimatorStats, FiberRealization,
    ProbeConfig, Scheme, StdvProfile,
)
from .das_utils import aggregate_percentiles, unit_seed
from .das_validators import ConfigValidator

logger = logging.getLogger(__name__)

# Segment 0 is the phase reference; its differential phase is identically zero
REFERENCE_SEGMENTS = 1


@dataclass
class UnitResult:
    length_index: int
    fibre_index: int
    profiles: Dict[str, StdvProfile]


def _segments(length: float, segment_length: float) -> int:
    return int(np.floor(length / segment_length + 1e-9))


def _interrogate(fib: FiberRealization, probe: ProbeConfig, sim_path: str, seed: int,
                 responses: np.ndarray) -> ChannelEstimate:
    if sim_path == "fast":
        return fast_channel_sim(fib, probe, seed=seed, responses=responses)
    pair = golay_pair(probe.code_log2_length)
    received = simulate_backscatter(fib, probe, seed=seed, responses=responses, pair=pair)
    return estimate_channel(received, pair, probe)


def _profile(fib: FiberRealization, cfg: CampaignConfig, scheme: Scheme, seed: int,
             responses: np.ndarray) -> StdvProfile:
    probe = cfg.probe.model_copy(update={"scheme": scheme, "seed": seed})
    estimate = _interrogate(fib, probe, cfg.sim_path, seed, responses)
    traces = phase_traces(estimate, scheme, cfg.gauge_segments)
    return stdv_profile(traces, cfg.window_s, cfg.highpass_hz)


def run_unit(cfg: CampaignConfig, length_index: int, fibre_index: int) -> UnitResult:
    """Synthesise one fibre and return the StDv profile of every estimator on it."""
    length = cfg.lengths[length_index]
    seed = unit_seed(cfg.seed, length_index, fibre_index)
    fiber_cfg = cfg.fiber.model_copy(update={"length": length, "seed": seed})
    profiles: Dict[str, StdvProfile] = {}

    with audit_span(logger, "campaign_unit", correlation_id=f"{length:g}:{fibre_index}"):
        fib = synthesize(fiber_cfg)
        responses = dual_pass_response(fib, fiber_cfg.alpha, fiber_cfg.theta_misalign)
        for scheme in cfg.estimators:
            profiles[scheme.value] = _profile(fib, cfg, scheme, seed, responses)

        if cfg.include_pol_free_baseline:
            flat_cfg = fiber_cfg.model_copy(update={"polarization_enabled": False})
            flat = synthesize(flat_cfg)
            flat_responses = dual_pass_response(flat, flat_cfg.alpha, flat_cfg.theta_misalign)
            profiles[POL_FREE] = _profile(flat, cfg, Scheme.MIMO, seed, flat_responses)

    return UnitResult(length_index=length_index, fibre_index=fibre_index, profiles=profiles)


class CampaignRunner:
    """
    Runs a campaign and pools per-fibre StDv profiles into CampaignStats.
    """

    def __init__(self, config: CampaignConfig, threads: Optional[int] = None,
                 max_runtime_s: Optional[float] = None):
        self.config = config
        self.threads = threads or config.threads or settings.default_threads or -1
        self.max_runtime_s = max_runtime_s if max_runtime_s is not None else settings.campaign_max_runtime_s

    @property
    def estimator_names(self) -> List[str]:
        names = [s.value for s in self.config.estimators]
        if self.config.include_pol_free_baseline:
            names.append(POL_FREE)
        return names

    def units(self) -> List[Tuple[int, int]]:
        return [(li, fi) for li in range(len(self.config.lengths))
                for fi in range(self.config.fibres_per_length)]

    def sample_count(self) -> int:
        """Phase samples the campaign will estimate (frames x segments x runs)."""
        cfg = self.config
        segments = sum(_segments(length, cfg.fiber.segment_length) for length in cfg.lengths)
        return segments * cfg.fibres_per_length * cfg.probe.frames * len(self.estimator_names)

    def check_budget(self):
        validation = ConfigValidator.validate_all(self.config.fiber, self.config.probe, self.config)
        if ConfigValidator.has_errors(validation):
            raise InvalidArgumentError("; ".join(e for errors in validation.values() for e in errors))
        samples = self.sample_count()
        if samples > settings.campaign_sample_budget:
            raise ResourceBudgetError(
                f"Campaign needs {samples} phase samples, budget is {settings.campaign_sample_budget}",
                {"samples": samples, "budget": settings.campaign_sample_budget},
            )

    def run(self) -> CampaignStats:
        self.check_budget()
        units = self.units()
        batch = len(units) if self.max_runtime_s is None else max(1, 4 * max(1, self.threads))
        results: List[UnitResult] = []
        start = time.monotonic()

        with audit_span(logger, "run_campaign", extra={"units": len(units), "threads": self.threads}):
            with Parallel(n_jobs=self.threads) as parallel:
                for offset in range(0, len(units), batch):
                    chunk = units[offset:offset + batch]
                    results.extend(parallel(delayed(run_unit)(self.config, li, fi) for li, fi in chunk))
                    elapsed = time.monotonic() - start
                    logger.info("Completed %d/%d campaign units in %.1f s", len(results), len(units), elapsed)
                    if self.max_runtime_s is not None and elapsed > self.max_runtime_s and len(results) < len(units):
                        stats = self.aggregate(results, len(units))
                        raise PartialResultsError(
                            f"Runtime budget of {self.max_runtime_s} s exceeded",
                            completed=len(results), total=len(units), stats=stats,
                        )

        return self.aggregate(results, len(units))

    def aggregate(self, results: Sequence[UnitResult], total_units: int) -> CampaignStats:
        """Pool unit results per (length, estimator) in (length, fibre) order."""
        cfg = self.config
        ordered = sorted(results, key=lambda r: (r.length_index, r.fibre_index))
        stats = CampaignStats(completed_units=len(ordered), total_units=total_units)
        for li, length in enumerate(cfg.lengths):
            unit_results = [r for r in ordered if r.length_index == li]
            if not unit_results:
                continue
            for name in self.estimator_names:
                profiles = [r.profiles[name] for r in unit_results]
                stats.entries[(length, name)] = self._pool(length, name, profiles)
        return stats

    def _pool(self, length: float, name: str, profiles: List[StdvProfile]) -> EstimatorStats:
        cfg = self.config
        stdv = np.concatenate([p.stdv[REFERENCE_SEGMENTS:] for p in profiles])
        snr = np.concatenate([p.snr_db[REFERENCE_SEGMENTS:] for p in profiles])
        defined = np.isfinite(stdv)
        samples, snr = stdv[defined], snr[defined]
        n_flagged = int((~defined).sum())
        if n_flagged:
            logger.warning("%s at %g m: %d segments fully flagged, excluded", name, length, n_flagged)

        upper = cfg.histogram_max_rad
        if upper is None:
            upper = float(samples.max()) if samples.size and samples.max() > 0 else 1.0
        edges = np.linspace(0.0, upper, cfg.histogram_bins + 1)
        counts, _ = np.histogram(samples[samples <= upper], bins=edges)
        overflow = int((samples > upper).sum())

        return EstimatorStats(
            length=length,
            estimator=name,
            samples=samples,
            snr_db=snr,
            bin_edges=edges,
            counts=counts,
            overflow=overflow,
            percentiles=aggregate_percentiles(samples, cfg.percentiles),
            snr_mean=float(np.mean(snr)) if snr.size else float("nan"),
            snr_var=float(np.var(snr)) if snr.size else float("nan"),
            n_flagged=n_flagged,
            distance_curve=distance_curve(profiles, cfg.distance_bin_m),
        )


def distance_curve(profiles: Iterable[StdvProfile], bin_m: float) -> pd.DataFrame:
    """Mean StDv per distance bin, pooled over fibres."""
    profiles = list(profiles)
    table = pd.concat([p.to_frame().iloc[REFERENCE_SEGMENTS:] for p in profiles], ignore_index=True)
    segment_length = profiles[0].segment_length
    table["bin"] = np.floor((table["distance_m"] - segment_length) / bin_m + 1e-9).astype(int)
    grouped = table.groupby("bin")["stdv_rad"].agg(["mean", "count"]).reset_index()
    return pd.DataFrame({
        "bin_start_m": grouped["bin"] * bin_m,
        "bin_end_m": (grouped["bin"] + 1) * bin_m,
        "mean_stdv_rad": grouped["mean"],
        "n_samples": grouped["count"],
    })


def run_campaign(cfg: CampaignConfig, threads: Optional[int] = None,
                 max_runtime_s: Optional[float] = None) -> CampaignStats:
    return CampaignRunner(cfg, threads, max_runtime_s).run()


def _require(stats: CampaignStats, length: float, estimator: str):
    if (length, estimator) not in stats.entries:
        raise InvalidArgumentError(f"Estimator {estimator} missing at {length:g} m")
    return stats.entries[(length, estimator)]


def crossing_fractions(stats: CampaignStats, reference: Union[Scheme, str], probe: Union[Scheme, str],
                       percentiles: Sequence[float] = (75, 95)) -> Dict[float, Dict[str, float]]:
    """
    Per length, fraction of ``probe`` segment StDvs above the ``reference`` percentiles.

    Returns:
        {length: {'p75': fraction, 'p95': fraction}}
    """
    reference, probe = str(getattr(reference, "value", reference)), str(getattr(probe, "value", probe))
    out: Dict[float, Dict[str, float]] = {}
    for length in stats.lengths:
        ref = _require(stats, length, reference)
        sample = _require(stats, length, probe)
        thresholds = aggregate_percentiles(ref.samples, list(percentiles))
        out[length] = {
            key: float(np.mean(sample.samples > value)) if sample.n_samples else float("nan")
            for key, value in thresholds.items()
        }
    return out


def snr_summary(stats: CampaignStats) -> Dict[float, Dict[str, object]]:
    """Mean (dB) and variance (dB rad^2) of SNR_phase per estimator and length."""
    if not stats.entries:
        raise InvalidArgumentError("Campaign statistics are empty")
    summary: Dict[float, Dict[str, object]] = {}
    for length in stats.lengths:
        per_estimator = {
            name: {"mean_db": stats.get(length, name).snr_mean, "var_db2": stats.get(length, name).snr_var}
            for name in stats.estimators(length)
        }
        mimo, simo = per_estimator.get(Scheme.MIMO.value), per_estimator.get(Scheme.SIMO.value)
        summary[length] = {
            "estimators": per_estimator,
            "mimo_minus_simo_mean_db": mimo["mean_db"] - simo["mean_db"] if mimo and simo else None,
            "simo_minus_mimo_var_db2": simo["var_db2"] - mimo["var_db2"] if mimo and simo else None,
        }
    return summary
