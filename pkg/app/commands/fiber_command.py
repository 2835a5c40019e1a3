from __future__ import annotations

from typing import Any, Dict, Iterable

from app.commands.registry import CommandAdapter, build_model, out_path
from app.dassim.das_errors import ConfigError
from app.dassim.das_fiber import synthesize
from app.dassim.das_io import fiber_summary, write_csv, write_fiber, write_manifest
from app.dassim.das_models import FiberConfig
from app.dassim.das_validators import ConfigValidator


class FiberCommand(CommandAdapter):
    id = "fiber"
    description = "Synthesize a fibre realization and export its segments"

    def config_keys(self) -> Iterable[str]:
        return FiberConfig.model_fields

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        cfg = build_model(FiberConfig, args, seed=ctx.get("seed"))
        errors = ConfigValidator.validate_fiber(cfg)
        if errors:
            raise ConfigError("; ".join(errors), {"errors": errors})

        fib = synthesize(cfg)
        files = [out_path(ctx, "fiber.ffr"), out_path(ctx, "fiber.csv")]
        write_fiber(fib, files[0])
        write_csv(fiber_summary(fib), files[1])
        files.append(write_manifest(ctx["out_dir"], self.id, cfg.seed, cfg.model_dump(mode="json")))
        return {"success": True, "files": [str(f) for f in files], "segments": fib.n_segments}
