"""
Utility functions shared by the simulator engine.
"""

import hashlib
import json
import logging
import zlib
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import toml

from .das_errors import ConfigError, InvalidArgumentError

logger = logging.getLogger(__name__)

STREAM_NAMES = ("fiber", "polarization", "laser", "rx")


def named_rng(seed: int, name: str) -> np.random.Generator:
    """
    Independent generator for one named random substream.

    Args:
        seed: 64-bit run or unit seed
        name: substream name (fiber, polarization, laser, rx)

    Returns:
        numpy Generator seeded from (seed, crc32(name))
    """
    if name not in STREAM_NAMES:
        raise InvalidArgumentError(f"Unknown random substream '{name}'")
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))


def unit_seed(seed: int, *keys: int) -> int:
    """Derive a reproducible 64-bit seed for one campaign work unit."""
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def wrap_phase(phase, modulus: float = 2 * np.pi):
    """Wrap phases into (-modulus/2, modulus/2]."""
    half = modulus / 2
    wrapped = half - np.mod(half - np.asarray(phase, dtype=float), modulus)
    return wrapped


def aggregate_percentiles(samples: np.ndarray,
                          percentiles: List[float] = [75, 95]) -> Dict[str, float]:
    """
    Calculate percentiles from pooled simulation samples.

    Args:
        samples: Array of StDv samples
        percentiles: List of percentiles to calculate

    Returns:
        Dictionary keyed 'p<percentile>'
    """
    result = {}
    for p in percentiles:
        key = f"p{p:g}"
        result[key] = float(np.percentile(samples, p)) if len(samples) else float("nan")
    return result


def canonical_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"), default=_json_default)


def config_hash(document: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON rendering of a resolved configuration."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def load_config_document(path: Optional[Path]) -> Dict[str, Any]:
    """
    Read a flat TOML or JSON key-value configuration document.

    Args:
        path: file path; None yields an empty document

    Returns:
        Dictionary of keys to values
    """
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Configuration file not found: {path}", {"path": str(path)})
    try:
        text = path.read_text(encoding="utf-8")
        if path.suffix.lower() == ".json":
            document = json.loads(text)
        else:
            document = toml.loads(text)
    except (json.JSONDecodeError, toml.TomlDecodeError) as e:
        raise ConfigError(f"Cannot parse configuration {path}: {e}", {"path": str(path)})
    if not isinstance(document, dict):
        raise ConfigError("Configuration document must be a key-value mapping", {"path": str(path)})
    nested = [k for k, v in document.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError("Configuration keys must be flat", {"nested_keys": nested})
    logger.debug("Loaded %d configuration keys from %s", len(document), path)
    return document
