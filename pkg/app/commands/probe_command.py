from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable

from app.commands.registry import CommandAdapter, build_model, out_path
from app.dassim.das_errors import ConfigError
from app.dassim.das_fiber import apply_strain, dual_pass_response, sinusoidal_displacement, strain_phase_profile
from app.dassim.das_interrogation import (
    estimate_channel, fast_channel_sim, frame_layout, golay_pair, simulate_backscatter,
)
from app.dassim.das_io import read_fiber, write_channel_estimate, write_manifest
from app.dassim.das_models import ProbeConfig, StrainEvent

PROBE_KEYS = ("fiber_file", "sim_path", "alpha", "theta_misalign",
              "strain_segment", "strain_amplitude_m", "strain_frequency_hz")


class ProbeCommand(CommandAdapter):
    id = "probe"
    description = "Interrogate a stored fibre and write the channel estimate"

    def config_keys(self) -> Iterable[str]:
        return tuple(ProbeConfig.model_fields) + PROBE_KEYS

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        cfg = build_model(ProbeConfig, args, seed=ctx.get("seed"))
        fiber_file = Path(args.get("fiber_file", out_path(ctx, "fiber.ffr")))
        sim_path = args.get("sim_path", "waveform")
        if sim_path not in ("waveform", "fast"):
            raise ConfigError(f"sim_path must be 'waveform' or 'fast', got '{sim_path}'")
        alpha = float(args.get("alpha", 0.0))
        theta = float(args.get("theta_misalign", 0.0))

        fib = read_fiber(fiber_file)
        responses = dual_pass_response(fib, alpha, theta)
        strain_segment = args.get("strain_segment")
        if strain_segment is not None:
            layout = frame_layout(fib.n_segments, fib.segment_length, cfg)
            displacement = sinusoidal_displacement(float(args.get("strain_amplitude_m", 1e-7)),
                                                   float(args.get("strain_frequency_hz", 100.0)),
                                                   layout.frame_period, cfg.frames)
            event = StrainEvent(segment_index=int(strain_segment), displacement=displacement)
            responses = apply_strain(responses, strain_phase_profile([event], fib.n_segments, cfg.frames))

        if sim_path == "waveform":
            pair = golay_pair(cfg.code_log2_length)
            received = simulate_backscatter(fib, cfg, responses=responses, pair=pair)
            estimate = estimate_channel(received, pair, cfg)
        else:
            estimate = fast_channel_sim(fib, cfg, responses=responses)

        channel_file = out_path(ctx, "channel.fce")
        write_channel_estimate(estimate, channel_file)
        resolved = {**cfg.model_dump(mode="json"), "fiber_file": str(fiber_file), "sim_path": sim_path,
                    "alpha": alpha, "theta_misalign": theta}
        resolved.update({k: args[k] for k in PROBE_KEYS[4:] if k in args})
        manifest = write_manifest(ctx["out_dir"], self.id, cfg.seed, resolved)
        return {"success": True, "files": [str(channel_file), str(manifest)],
                "frames": estimate.n_frames, "frame_period": estimate.frame_period}
