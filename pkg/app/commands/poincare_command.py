from __future__ import annotations

import logging
from typing import Any, Dict, Iterable

import numpy as np

from app.commands.registry import CommandAdapter, build_model, out_path
from app.dassim.das_fiber import stokes_trajectory, synthesize
from app.dassim.das_io import stokes_frame, write_csv, write_manifest
from app.dassim.das_jones import great_circle_steps
from app.dassim.das_models import FiberConfig

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = [0.014, 0.068, 0.34]


class PoincareCommand(CommandAdapter):
    id = "poincare"
    description = "Export Stokes trajectories of the forward SOP for several L_s/L_pb ratios"

    def config_keys(self) -> Iterable[str]:
        return ("poincare_ratios", "length", "segment_length", "attenuation", "seed")

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        base = build_model(FiberConfig, args, seed=ctx.get("seed"))
        ratios = [float(r) for r in args.get("poincare_ratios", DEFAULT_RATIOS)]
        files, steps = [], {}
        for ratio in ratios:
            cfg = base.model_copy(update={"beat_length": base.segment_length / ratio})
            stokes = stokes_trajectory(synthesize(cfg))
            steps[f"{ratio:g}"] = float(np.mean(great_circle_steps(stokes))) if len(stokes) > 1 else 0.0
            logger.info("L_s/L_pb=%g: mean great-circle step %.4f rad", ratio, steps[f"{ratio:g}"])
            files.append(out_path(ctx, f"poincare_ratio_{ratio:g}.csv"))
            write_csv(stokes_frame(stokes), files[-1])

        resolved = {"poincare_ratios": ratios, "length": base.length, "segment_length": base.segment_length,
                    "attenuation": base.attenuation, "seed": base.seed}
        files.append(write_manifest(ctx["out_dir"], self.id, base.seed, resolved))
        return {"success": True, "files": [str(f) for f in files], "mean_steps_rad": steps}
