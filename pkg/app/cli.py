"""
Command-line front end.

    python -m app.cli <subcommand> [--config PATH] [--out DIR] [--seed N] [--threads N] [-v]
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.audit.logger import audit_span, setup_logging
from app.commands import registry
from app.config.settings import settings
from app.dassim.das_errors import SimulationError
from app.dassim.das_utils import load_config_document

logger = logging.getLogger(__name__)

EXIT_CODES = {
    "CONFIG_ERROR": 2,
    "RESOURCE_BUDGET": 3,
    "PARTIAL_RESULTS": 3,
    "IO_ERROR": 4,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="flat TOML/JSON document or manifest.json")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed override")
    common.add_argument("--threads", type=int, default=None, help="campaign worker count")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog=settings.app_name,
                                     description="Dual-polarization phi-OTDR channel simulator")
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in registry.names():
        sub.add_parser(name, parents=[common], help=registry.describe(name))
    return parser


def load_arguments(path: Optional[Path]) -> Dict[str, Any]:
    """Config keys from a flat document; a manifest.json yields the configuration it recorded."""
    if path is not None and Path(path).suffix.lower() == ".json" and Path(path).exists():
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            raw = None
        if isinstance(raw, dict) and "subcommand" in raw and isinstance(raw.get("config"), dict):
            return {k: v for k, v in raw["config"].items() if v is not None}
    return load_config_document(path)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    ctx = {"out_dir": args.out, "seed": args.seed, "threads": args.threads}
    try:
        config = load_arguments(args.config)
    except SimulationError as e:
        logger.error(e.message)
        return EXIT_CODES.get(e.code, 1)

    with audit_span(logger, f"cli_{args.command}", extra={"out": str(args.out)}):
        result = registry.invoke(args.command, ctx, config)

    if result.get("success"):
        for path in result.get("files", []):
            logger.info("wrote %s", path)
        return 0
    error = result.get("error", {})
    logger.error("%s: %s", error.get("code"), error.get("message"))
    return EXIT_CODES.get(error.get("code"), 1)


if __name__ == "__main__":
    sys.exit(main())
