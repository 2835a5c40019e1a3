"""
File formats of the simulator.

Binary fibre (FFR1) and channel-estimate (FCE1) files are little-endian numpy
structured records. Tables are CSV with header row, ',' separator and LF endings.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from app.audit.logger import audit_span
from app.config.settings import settings

from .das_campaign import crossing_fractions, snr_summary
from .das_errors import PersistenceError
from .das_models import (
    POL_FREE, CampaignConfig, CampaignStats, ChannelEstimate, FadingMap, FiberRealization, Scheme,
    StdvProfile,
)
from .das_utils import config_hash

logger = logging.getLogger(__name__)

FIBER_MAGIC = b"FFR1"
CHANNEL_MAGIC = b"FCE1"

FIBER_HEADER = np.dtype([("magic", "S4"), ("n_segments", "<u4"), ("segment_length", "<f8"), ("seed", "<u8")])
FIBER_SEGMENT = np.dtype([("unitary", "<c16", (4,)), ("phasor", "<c16"), ("attenuation", "<f8")])
CHANNEL_HEADER = np.dtype([("magic", "S4"), ("scheme", "u1"), ("frames", "<u4"), ("segments", "<u4"),
                           ("frame_period", "<f8")])


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise PersistenceError(f"Cannot create output directory {path.parent}: {e}", {"path": str(path)})
    return path


def _write_bytes(path: Path, payload: bytes):
    path = _ensure_parent(path)
    try:
        path.write_bytes(payload)
    except OSError as e:
        raise PersistenceError(f"Cannot write {path}: {e}", {"path": str(path)})


def _read_bytes(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise PersistenceError(f"Cannot read {path}: {e}", {"path": str(path)})


def _header(raw: bytes, dtype: np.dtype, magic: bytes, path: Path) -> np.void:
    if len(raw) < dtype.itemsize:
        raise PersistenceError(f"{path} is truncated", {"path": str(path)})
    header = np.frombuffer(raw, dtype=dtype, count=1)[0]
    if header["magic"] != magic:
        raise PersistenceError(f"{path} is not a {magic.decode()} file", {"path": str(path)})
    return header


def write_fiber(fib: FiberRealization, path: Path):
    header = np.array([(FIBER_MAGIC, fib.n_segments, fib.segment_length, fib.seed)], dtype=FIBER_HEADER)
    body = np.empty(fib.n_segments, dtype=FIBER_SEGMENT)
    body["unitary"] = fib.unitaries.reshape(fib.n_segments, 4)
    body["phasor"] = fib.phasors
    body["attenuation"] = fib.attenuation
    _write_bytes(path, header.tobytes() + body.tobytes())
    logger.info("Wrote fibre with %d segments to %s", fib.n_segments, path)


def read_fiber(path: Path) -> FiberRealization:
    raw = _read_bytes(path)
    header = _header(raw, FIBER_HEADER, FIBER_MAGIC, path)
    n = int(header["n_segments"])
    expected = FIBER_HEADER.itemsize + n * FIBER_SEGMENT.itemsize
    if len(raw) != expected:
        raise PersistenceError(f"{path} has {len(raw)} bytes, expected {expected}", {"path": str(path)})
    body = np.frombuffer(raw, dtype=FIBER_SEGMENT, count=n, offset=FIBER_HEADER.itemsize)
    segment_length = float(header["segment_length"])
    return FiberRealization(
        unitaries=body["unitary"].reshape(n, 2, 2).copy(),
        phasors=body["phasor"].copy(),
        attenuation=body["attenuation"].copy(),
        distance=segment_length * np.arange(1, n + 1),
        segment_length=segment_length,
        seed=int(header["seed"]),
    )


def fiber_summary(fib: FiberRealization) -> pd.DataFrame:
    return pd.DataFrame({
        "segment_index": np.arange(1, fib.n_segments + 1),
        "distance_m": fib.distance,
        "phasor_abs": np.abs(fib.phasors),
        "phasor_angle_rad": np.angle(fib.phasors),
        "attenuation": fib.attenuation,
    })


def write_channel_estimate(est: ChannelEstimate, path: Path):
    header = np.array([(CHANNEL_MAGIC, est.scheme.code, est.n_frames, est.n_segments, est.frame_period)],
                      dtype=CHANNEL_HEADER)
    body = np.ascontiguousarray(est.matrices, dtype="<c8")
    _write_bytes(path, header.tobytes() + body.tobytes())
    logger.info("Wrote %s channel estimate (%d frames x %d segments) to %s",
                est.scheme.value, est.n_frames, est.n_segments, path)


def read_channel_estimate(path: Path, segment_length: float = 1.0) -> ChannelEstimate:
    raw = _read_bytes(path)
    header = _header(raw, CHANNEL_HEADER, CHANNEL_MAGIC, path)
    if int(header["scheme"]) >= len(Scheme):
        raise PersistenceError(f"{path} has unknown scheme code {int(header['scheme'])}", {"path": str(path)})
    scheme = Scheme.from_code(int(header["scheme"]))
    shape = (int(header["frames"]), int(header["segments"]), scheme.n_outputs, scheme.n_inputs)
    count = int(np.prod(shape))
    expected = CHANNEL_HEADER.itemsize + count * 8
    if len(raw) != expected:
        raise PersistenceError(f"{path} has {len(raw)} bytes, expected {expected}", {"path": str(path)})
    body = np.frombuffer(raw, dtype="<c8", count=count, offset=CHANNEL_HEADER.itemsize)
    return ChannelEstimate(scheme=scheme, matrices=body.reshape(shape).astype(complex),
                           frame_period=float(header["frame_period"]), segment_length=segment_length)


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False):
    path = _ensure_parent(path)
    try:
        frame.to_csv(path, index=index, sep=",", decimal=".", lineterminator="\n")
    except OSError as e:
        raise PersistenceError(f"Cannot write {path}: {e}", {"path": str(path)})


def write_stdv_profile(profile: StdvProfile, path: Path):
    write_csv(profile.to_frame(), path)


def write_fading_map(fmap: FadingMap, path: Path):
    write_csv(fmap.to_frame(), path, index=True)


def stokes_frame(stokes: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame({
        "segment_index": np.arange(1, stokes.shape[0] + 1),
        "s0": stokes[:, 0], "s1": stokes[:, 1], "s2": stokes[:, 2], "s3": stokes[:, 3],
    })


def _clean(value: Any) -> Any:
    """JSON-safe copy with NaN/inf mapped to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(document: Dict[str, Any], path: Path):
    _write_bytes(path, (json.dumps(_clean(document), indent=2, sort_keys=True) + "\n").encode("utf-8"))


def stats_document(stats: CampaignStats, cfg: CampaignConfig) -> Dict[str, Any]:
    crossings: Dict[str, Any] = {}
    names = stats.estimators()
    if Scheme.MIMO.value in names:
        for name in names:
            if name in (Scheme.MIMO.value, POL_FREE):
                continue
            fractions = crossing_fractions(stats, Scheme.MIMO, name, cfg.percentiles)
            crossings[f"{name}_vs_MIMO"] = {f"{length:g}": v for length, v in fractions.items()}

    return {
        "completed_units": stats.completed_units,
        "total_units": stats.total_units,
        "entries": [entry.to_dict() for entry in stats.entries.values()],
        "crossing_fractions": crossings,
        "snr_summary": {f"{length:g}": v for length, v in snr_summary(stats).items()} if stats.entries else {},
    }


def write_campaign_outputs(stats: CampaignStats, cfg: CampaignConfig, out_dir: Path) -> Dict[str, Path]:
    """
    Write stats.json, one histogram CSV per (length, estimator) and stdv_vs_distance.csv.
    """
    out_dir = Path(out_dir)
    written: Dict[str, Path] = {}
    with audit_span(logger, "write_campaign_outputs", extra={"out": str(out_dir)}):
        written["stats"] = out_dir / "stats.json"
        write_json(stats_document(stats, cfg), written["stats"])

        curves = []
        for (length, name), entry in stats.entries.items():
            edges = entry.bin_edges
            hist = pd.DataFrame({
                "bin_start_rad": np.append(edges[:-1], edges[-1]),
                "bin_end_rad": np.append(edges[1:], np.inf),
                "count": np.append(entry.counts, entry.overflow),
            })
            path = out_dir / f"hist_{length:g}_{name}.csv"
            write_csv(hist, path)
            written[path.stem] = path

            curve = entry.distance_curve.copy()
            curve.insert(0, "estimator", name)
            curve.insert(0, "length_m", length)
            curves.append(curve)

        written["stdv_vs_distance"] = out_dir / "stdv_vs_distance.csv"
        write_csv(pd.concat(curves, ignore_index=True) if curves else pd.DataFrame(), written["stdv_vs_distance"])
    return written


def write_manifest(out_dir: Path, subcommand: str, seed: Optional[int], config: Dict[str, Any]) -> Path:
    """Record what is needed to re-run a subcommand bit-for-bit."""
    document = {
        "subcommand": subcommand,
        "seed": seed,
        "version": settings.app_version,
        "config_hash": config_hash(config),
        "config": config,
    }
    path = Path(out_dir) / "manifest.json"
    write_json(document, path)
    return path
