"""
Semantic validation of simulator configurations.
"""

import logging
from typing import Dict, List

import numpy as np

from .das_models import CampaignConfig, FiberConfig, ProbeConfig

logger = logging.getLogger(__name__)

MAX_REFLECTION_ALPHA = 0.05
MIN_RECORD_FRAMES = 100


class ConfigValidator:
    """Cross-field checks that pydantic field constraints cannot express."""

    @staticmethod
    def validate_fiber(cfg: FiberConfig) -> List[str]:
        """
        Validate a fibre description.

        Args:
            cfg: Fibre configuration

        Returns:
            List of validation errors
        """
        errors = []
        if cfg.length < cfg.segment_length:
            errors.append(f"length ({cfg.length} m) shorter than segment_length ({cfg.segment_length} m)")
        elif cfg.n_segments < 1:
            errors.append("fibre has no segment")
        if not np.isfinite(cfg.theta_misalign):
            errors.append("theta_misalign must be finite")
        if cfg.alpha > MAX_REFLECTION_ALPHA:
            logger.warning("alpha=%.3f above the %.2f reflection transfer range", cfg.alpha, MAX_REFLECTION_ALPHA)
        return errors

    @staticmethod
    def validate_probe(cfg: ProbeConfig, fiber: FiberConfig) -> List[str]:
        errors = []
        if cfg.code_length < 2:
            errors.append("code length must be at least 2")
        taps = cfg.tap_spacing
        m = max(1, int(round(fiber.segment_length / taps)))
        if abs(m * taps - fiber.segment_length) > 0.01 * fiber.segment_length:
            logger.warning(
                "segment_length %.3f m is not a multiple of the %.3f m symbol spacing; using %d taps per segment",
                fiber.segment_length, taps, m,
            )
        return errors

    @staticmethod
    def validate_campaign(cfg: CampaignConfig) -> List[str]:
        errors = []
        for length in cfg.lengths:
            if length < cfg.fiber.segment_length:
                errors.append(f"length {length} m shorter than segment_length")
                continue
            n_segments = int(np.floor(length / cfg.fiber.segment_length + 1e-9))
            if cfg.gauge_segments >= n_segments:
                errors.append(f"gauge_segments ({cfg.gauge_segments}) must be below segment count {n_segments} at {length} m")
        if cfg.probe.frames < MIN_RECORD_FRAMES:
            if not cfg.allow_short_records:
                errors.append(f"frames ({cfg.probe.frames}) below the {MIN_RECORD_FRAMES}-frame record; "
                              "set allow_short_records to run anyway")
            else:
                logger.warning("frames=%d below the %d-frame record", cfg.probe.frames, MIN_RECORD_FRAMES)
        if cfg.window_s is not None:
            frame_count = cfg.window_s / _frame_period(cfg)
            if frame_count < 2:
                errors.append(f"window_s ({cfg.window_s} s) shorter than two frames")
        return errors

    @staticmethod
    def validate_all(fiber: FiberConfig, probe: ProbeConfig = None,
                     campaign: CampaignConfig = None) -> Dict[str, List[str]]:
        """
        Validate every configuration part that is present.

        Returns:
            Dictionary with validation errors by category
        """
        results = {"fiber": ConfigValidator.validate_fiber(fiber), "probe": [], "campaign": []}
        if probe is not None:
            results["probe"] = ConfigValidator.validate_probe(probe, fiber)
        if campaign is not None:
            results["campaign"] = ConfigValidator.validate_campaign(campaign)

        total_errors = sum(len(errors) for errors in results.values())
        if total_errors > 0:
            logger.warning(f"Found {total_errors} configuration errors")
            for category, errors in results.items():
                for error in errors[:5]:
                    logger.warning(f"  {category}: {error}")
        return results

    @staticmethod
    def has_errors(validation_results: Dict[str, List[str]]) -> bool:
        """Check if validation results contain any errors."""
        return any(len(errors) > 0 for errors in validation_results.values())


def _frame_period(cfg: CampaignConfig) -> float:
    # Guard interval depends on the longest fibre
    probe = cfg.probe
    n_taps = int(np.floor(max(cfg.lengths) / cfg.fiber.segment_length + 1e-9)) * \
        max(1, int(round(cfg.fiber.segment_length / probe.tap_spacing))) + 1
    n_sub = max(s.n_subframes for s in cfg.estimators)
    return n_sub * (probe.code_length + n_taps - 1) / probe.symbol_rate
