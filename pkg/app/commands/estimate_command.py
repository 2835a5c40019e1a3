from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable

import numpy as np

from app.commands.registry import CommandAdapter, out_path
from app.dassim.das_errors import ConfigError
from app.dassim.das_estimation import phase_traces, stdv_profile
from app.dassim.das_io import read_channel_estimate, write_manifest, write_stdv_profile
from app.dassim.das_models import Scheme


class EstimateCommand(CommandAdapter):
    id = "estimate"
    description = "Estimate differential phases and the StDv profile of a stored channel estimate"

    def config_keys(self) -> Iterable[str]:
        return ("channel_file", "estimator", "gauge_segments", "window_s", "highpass_hz", "segment_length")

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        channel_file = Path(args.get("channel_file", out_path(ctx, "channel.fce")))
        segment_length = float(args.get("segment_length", 2.0))
        estimate = read_channel_estimate(channel_file, segment_length)
        try:
            estimator = Scheme(args.get("estimator", estimate.scheme.value))
        except ValueError:
            raise ConfigError(f"Unknown estimator '{args.get('estimator')}'")
        gauge = int(args.get("gauge_segments", 1))
        window = args.get("window_s")
        highpass_hz = float(args.get("highpass_hz", 0.0))

        traces = phase_traces(estimate, estimator, gauge)
        profile = stdv_profile(traces, window, highpass_hz)
        profile_file = out_path(ctx, "stdv_profile.csv")
        write_stdv_profile(profile, profile_file)

        resolved = {"channel_file": str(channel_file), "estimator": estimator.value, "gauge_segments": gauge,
                    "window_s": window, "highpass_hz": highpass_hz, "segment_length": segment_length}
        manifest = write_manifest(ctx["out_dir"], self.id, None, resolved)
        return {"success": True, "files": [str(profile_file), str(manifest)],
                "mean_stdv_rad": float(np.nanmean(profile.stdv))}
