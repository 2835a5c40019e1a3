"""
Offline script running the full-scale 25 km and 50 km waveform campaigns.

These runs take hours and exceed the default sample budget, so they are kept out of
the test suite. Outputs land in one directory per config under ``out/long_haul``.
"""

import argparse
import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from app.audit.logger import setup_logging
from app.commands import registry
from app.commands.campaign_command import CAMPAIGN_EXCLUDED, FIBER_EXCLUDED, PROBE_EXCLUDED
from app.commands.registry import build_model
from app.config.settings import settings
from app.dassim.das_campaign import CampaignRunner
from app.dassim.das_models import CampaignConfig, FiberConfig, ProbeConfig
from app.dassim.das_utils import load_config_document

CONFIG_DIR = Path(__file__).parent / "configs"
FULL_SCALE = ("campaign_25km_full.toml", "campaign_50km_full.toml")


def required_budget(args: Dict[str, Any]) -> int:
    """Phase samples a campaign document asks for."""
    fiber = build_model(FiberConfig, args, exclude=FIBER_EXCLUDED)
    probe = build_model(ProbeConfig, args, exclude=PROBE_EXCLUDED)
    cfg = build_model(CampaignConfig, args, exclude=CAMPAIGN_EXCLUDED, fiber=fiber, probe=probe)
    return CampaignRunner(cfg).sample_count()


def run_full_scale_campaign(name: str, out_root: Path, threads: Optional[int] = None) -> Dict[str, Any]:
    args = load_config_document(CONFIG_DIR / name)
    needed = required_budget(args)
    if needed > settings.campaign_sample_budget:
        print(f"Raising sample budget to {needed} for {name}")
        settings.campaign_sample_budget = needed

    out_dir = out_root / Path(name).stem
    print(f"Running {name} into {out_dir} ...")
    result = registry.invoke("campaign", {"out_dir": out_dir, "seed": None, "threads": threads}, args)
    if not result.get("success"):
        return {"status": "error", "config": name, "error": result.get("error")}

    stats = json.loads((out_dir / "stats.json").read_text(encoding="utf-8"))
    return {
        "status": "success",
        "config": name,
        "completed_units": stats["completed_units"],
        "crossing_fractions": stats["crossing_fractions"],
        "snr_summary": stats["snr_summary"],
    }


def reproduce_long_haul(names: Sequence[str] = FULL_SCALE, out_root: Path = Path("out/long_haul"),
                        threads: Optional[int] = None) -> Dict[str, Any]:
    """
    Run each full-scale campaign and collect the headline numbers.

    Args:
        names: config file names under ``configs/``
        out_root: parent output directory
        threads: campaign worker count (None: all cores)

    Returns:
        dict: per-config summary
    """
    summaries = {}
    for name in names:
        summary = run_full_scale_campaign(name, out_root, threads)
        summaries[name] = summary
        if summary["status"] != "success":
            print(f"{name} failed: {summary['error']}")
            continue
        for key, per_length in summary["crossing_fractions"].items():
            for length, fractions in per_length.items():
                rendered = [f"{p}={v:.3f}" if v is not None else f"{p}=n/a" for p, v in fractions.items()]
                print(f"  {key} at {length} m: {', '.join(rendered)}")
    return summaries


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Full-scale long-haul campaigns")
    parser.add_argument("--out", type=Path, default=Path("out/long_haul"))
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("configs", nargs="*", default=list(FULL_SCALE))
    cli_args = parser.parse_args()

    setup_logging()
    result = reproduce_long_haul(cli_args.configs, cli_args.out, cli_args.threads)
    failed = [name for name, summary in result.items() if summary["status"] != "success"]
    print("\nAll long-haul campaigns completed." if not failed else f"\nFailed: {failed}")
