from __future__ import annotations

from typing import Any, Dict, Iterable

from app.commands.registry import CommandAdapter, build_model
from app.dassim.das_campaign import CampaignRunner
from app.dassim.das_errors import PartialResultsError
from app.dassim.das_io import write_campaign_outputs, write_manifest
from app.dassim.das_models import CampaignConfig, FiberConfig, ProbeConfig

FIBER_EXCLUDED = ("length", "seed")
PROBE_EXCLUDED = ("scheme", "seed")
CAMPAIGN_EXCLUDED = ("fiber", "probe")


def campaign_keys() -> Iterable[str]:
    keys = [k for k in CampaignConfig.model_fields if k not in CAMPAIGN_EXCLUDED]
    keys += [k for k in FiberConfig.model_fields if k not in FIBER_EXCLUDED]
    keys += [k for k in ProbeConfig.model_fields if k not in PROBE_EXCLUDED]
    return keys


def flatten_campaign(cfg: CampaignConfig) -> Dict[str, Any]:
    """Flat key-value document equivalent to a campaign configuration."""
    return {
        **cfg.model_dump(mode="json", exclude=set(CAMPAIGN_EXCLUDED)),
        **cfg.fiber.model_dump(mode="json", exclude=set(FIBER_EXCLUDED)),
        **cfg.probe.model_dump(mode="json", exclude=set(PROBE_EXCLUDED)),
    }


class CampaignCommand(CommandAdapter):
    id = "campaign"
    description = "Run a Monte Carlo comparison of phase estimators"

    def config_keys(self) -> Iterable[str]:
        return campaign_keys()

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        fiber = build_model(FiberConfig, args, exclude=FIBER_EXCLUDED)
        probe = build_model(ProbeConfig, args, exclude=PROBE_EXCLUDED)
        cfg = build_model(CampaignConfig, args, exclude=CAMPAIGN_EXCLUDED,
                          seed=ctx.get("seed"), threads=ctx.get("threads"), fiber=fiber, probe=probe)
        manifest = write_manifest(ctx["out_dir"], self.id, cfg.seed, flatten_campaign(cfg))

        try:
            stats = CampaignRunner(cfg).run()
        except PartialResultsError as e:
            if e.stats is not None:
                write_campaign_outputs(e.stats, cfg, ctx["out_dir"])
            raise

        files = write_campaign_outputs(stats, cfg, ctx["out_dir"])
        return {"success": True, "files": [str(p) for p in files.values()] + [str(manifest)],
                "completed_units": stats.completed_units}
