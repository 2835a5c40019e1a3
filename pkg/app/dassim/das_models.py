"""
Pydantic configuration models and numeric containers for the fibre simulator.

Configurations are validated pydantic models populated from flat key-value
documents; simulation products are plain dataclasses holding numpy arrays.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

SPEED_OF_LIGHT = 299_792_458.0


class Scheme(str, Enum):
    """Polarization channels used at transmitter / receiver."""

    SISO = "SISO"
    SIMO = "SIMO"
    MISO = "MISO"
    MIMO = "MIMO"

    @property
    def n_inputs(self) -> int:
        return 2 if self in (Scheme.MISO, Scheme.MIMO) else 1

    @property
    def n_outputs(self) -> int:
        return 2 if self in (Scheme.SIMO, Scheme.MIMO) else 1

    @property
    def n_subframes(self) -> int:
        return 2 * self.n_inputs

    @property
    def code(self) -> int:
        return list(Scheme).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Scheme":
        return list(cls)[code]


# Segment-level baseline: MIMO estimation on the same fibre with polarization disabled
POL_FREE = "POLFREE"


class FiberConfig(BaseModel):
    """Static fibre description."""

    model_config = ConfigDict(extra="forbid")

    length: float = Field(default=340.0, gt=0, description="Fibre length in m")
    segment_length: float = Field(default=2.0, gt=0, description="L_s in m")
    beat_length: float = Field(default=10.0, gt=0, description="L_pb in m")
    attenuation: float = Field(default=0.2, ge=0, description="dB/km, one way")
    alpha: float = Field(default=0.0, ge=0, le=1, description="Reflection polarization transfer")
    theta_misalign: float = Field(default=0.0, description="TX/RX misalignment rotation in rad")
    polarization_enabled: bool = True
    seed: int = Field(default=0, ge=0, lt=2**64)
    phasor_model: Literal["rayleigh", "scatterers"] = "rayleigh"
    scatterers_per_segment: int = Field(default=16, ge=1)

    @property
    def n_segments(self) -> int:
        return int(np.floor(self.length / self.segment_length + 1e-9))

    @property
    def ratio(self) -> float:
        return self.segment_length / self.beat_length


class ProbeConfig(BaseModel):
    """Code-based interrogation settings."""

    model_config = ConfigDict(extra="forbid")

    scheme: Scheme = Scheme.MIMO
    code_log2_length: int = Field(default=13, ge=1, le=20)
    symbol_rate: float = Field(default=50e6, gt=0, description="Baud")
    launch_power: float = Field(default=7.0, description="dBm at fibre input")
    laser_linewidth: float = Field(default=75.0, ge=0, description="Hz")
    rx_noise_sigma: float = Field(default=1.7e-3, ge=0, description="V RMS per quadrature")
    frames: int = Field(default=128, ge=1)
    group_index: float = Field(default=1.5, gt=0)
    field_to_volts: float = Field(default=1650.0, gt=0, description="Detector gain in V per sqrt(W)")
    rayleigh_reflectivity_db: float = Field(default=-70.0, le=0)
    # instant: laser phase sampled at the frame epoch; code_average: averaged over the code span
    phase_sampling: Literal["instant", "code_average"] = "instant"
    seed: int = Field(default=0, ge=0, lt=2**64)

    @property
    def code_length(self) -> int:
        return 2 ** self.code_log2_length

    @property
    def launch_power_w(self) -> float:
        return 1e-3 * 10 ** (self.launch_power / 10)

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def tap_spacing(self) -> float:
        """Fibre length covered by one symbol of round-trip delay."""
        return SPEED_OF_LIGHT / (2 * self.group_index * self.symbol_rate)

    @property
    def probe_amplitude(self) -> float:
        """Detected volts per unit of normalised channel response, per active polarization."""
        reflectivity = 10 ** (self.rayleigh_reflectivity_db / 20)
        return self.field_to_volts * reflectivity * np.sqrt(self.launch_power_w / self.scheme.n_inputs)


class CampaignConfig(BaseModel):
    """Monte Carlo comparison of phase estimators."""

    model_config = ConfigDict(extra="forbid")

    lengths: List[float] = Field(default_factory=lambda: [340.0])
    fibres_per_length: int = Field(default=20, ge=1)
    estimators: List[Scheme] = Field(default_factory=lambda: [Scheme.SIMO, Scheme.MIMO])
    include_pol_free_baseline: bool = False
    seed: int = Field(default=0, ge=0, lt=2**64)
    sim_path: Literal["waveform", "fast"] = "fast"
    gauge_segments: int = Field(default=1, ge=1)
    window_s: Optional[float] = Field(default=None, gt=0)
    highpass_hz: float = Field(default=0.0, ge=0)
    distance_bin_m: float = Field(default=200.0, gt=0)
    histogram_bins: int = Field(default=100, ge=1)
    histogram_max_rad: Optional[float] = Field(default=None, gt=0)
    percentiles: List[float] = Field(default_factory=lambda: [75.0, 95.0])
    threads: Optional[int] = Field(default=None, ge=1)
    allow_short_records: bool = Field(default=False, description="Permit fewer than 100 frames per record")
    fiber: FiberConfig = Field(default_factory=FiberConfig)
    probe: ProbeConfig = Field(default_factory=ProbeConfig)

    @field_validator("lengths")
    @classmethod
    def validate_lengths(cls, v):
        if not v:
            raise ValueError("lengths must not be empty")
        if any(x <= 0 for x in v):
            raise ValueError("lengths must be positive")
        return v

    @field_validator("estimators")
    @classmethod
    def validate_estimators(cls, v):
        if not v:
            raise ValueError("estimators must not be empty")
        if len(set(v)) != len(v):
            raise ValueError("estimators must be unique")
        return v

    @field_validator("percentiles")
    @classmethod
    def validate_percentiles(cls, v):
        if any(not 0 < p < 100 for p in v):
            raise ValueError("percentiles must lie in (0, 100)")
        return sorted(v)


@dataclass(frozen=True)
class PolarizationParams:
    """Birefringence parameters of one segment (floats) or of many (arrays)."""

    beta: Any
    gamma: Any
    theta_rot: Any
    common_phase: Any = 0.0

    def take(self, index) -> "PolarizationParams":
        return PolarizationParams(
            beta=np.asarray(self.beta)[index],
            gamma=np.asarray(self.gamma)[index],
            theta_rot=np.asarray(self.theta_rot)[index],
            common_phase=np.broadcast_to(self.common_phase, np.shape(self.beta))[index],
        )


@dataclass
class FiberRealization:
    unitaries: np.ndarray      # (N, 2, 2) cumulative forward Jones matrices U_i
    phasors: np.ndarray        # (N,) complex p_i
    attenuation: np.ndarray    # (N,) dual-pass amplitude factor A_i
    distance: np.ndarray       # (N,) L_i in m
    segment_length: float
    seed: int
    params: Optional[PolarizationParams] = None

    @property
    def n_segments(self) -> int:
        return int(self.phasors.shape[0])


@dataclass
class StrainEvent:
    segment_index: int              # 1-based
    displacement: np.ndarray        # delta l(t) in m, one sample per frame
    refr_index: float = 1.468
    photoelastic: float = 0.79
    wavelength: float = 1550e-9


@dataclass(frozen=True)
class GolayPair:
    a: np.ndarray
    b: np.ndarray

    @property
    def length(self) -> int:
        return int(self.a.shape[0])


@dataclass(frozen=True)
class FrameLayout:
    """Symbol-level timing of one probe frame on a given fibre."""

    taps_per_segment: int       # m
    n_taps: int                 # K = N m + 1
    guard: int                  # G = K - 1 zero symbols after each sub-frame
    code_length: int            # L_c
    n_subframes: int
    symbol_rate: float

    @property
    def subframe_length(self) -> int:
        return self.code_length + self.guard

    @property
    def frame_length(self) -> int:
        return self.n_subframes * self.subframe_length

    @property
    def frame_period(self) -> float:
        return self.frame_length / self.symbol_rate


@dataclass
class ReceivedWaveform:
    scheme: Scheme
    samples: np.ndarray         # (T, n_outputs, frame_length) volts
    layout: FrameLayout
    scale: float                # volts per unit of normalised response
    segment_length: float

    @property
    def n_frames(self) -> int:
        return int(self.samples.shape[0])


@dataclass
class ChannelEstimate:
    scheme: Scheme
    matrices: np.ndarray        # (T, N, n_outputs, n_inputs)
    frame_period: float
    segment_length: float

    @property
    def n_frames(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def n_segments(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def distances(self) -> np.ndarray:
        return self.segment_length * np.arange(1, self.n_segments + 1)


@dataclass
class PhaseTraceSet:
    values: np.ndarray          # (T, N) radians, NaN where flagged
    gauge_segments: int
    frame_period: float
    segment_length: float = 1.0
    modulus: float = 2 * np.pi
    estimator: Optional[str] = None

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_segments(self) -> int:
        return int(self.values.shape[1])

    @property
    def duration(self) -> float:
        return self.n_frames * self.frame_period


@dataclass
class StdvProfile:
    stdv: np.ndarray
    snr_db: np.ndarray
    flagged_fraction: np.ndarray
    capped: np.ndarray
    segment_length: float = 1.0

    def to_frame(self) -> pd.DataFrame:
        n = self.stdv.shape[0]
        return pd.DataFrame({
            "segment_index": np.arange(1, n + 1),
            "distance_m": self.segment_length * np.arange(1, n + 1),
            "stdv_rad": self.stdv,
            "snr_db": self.snr_db,
            "flagged_fraction": self.flagged_fraction,
        })


@dataclass
class FadingMap:
    x_param: str
    y_param: str
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray          # (len(y_values), len(x_values))
    estimator: str
    alpha: float

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, index=self.y_values, columns=self.x_values)
        frame.index.name = f"{self.y_param}\\{self.x_param}"
        return frame


@dataclass
class EstimatorStats:
    """Pooled statistics of one estimator at one fibre length."""

    length: float
    estimator: str
    samples: np.ndarray         # per-segment StDv, flagged-free, fibre-major order
    snr_db: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    overflow: int
    percentiles: Dict[str, float]
    snr_mean: float
    snr_var: float
    n_flagged: int
    distance_curve: pd.DataFrame

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "length_m": self.length,
            "estimator": self.estimator,
            "n_samples": self.n_samples,
            "n_flagged": self.n_flagged,
            "percentiles": self.percentiles,
            "mean_stdv_rad": float(np.mean(self.samples)) if self.n_samples else None,
            "snr_mean_db": self.snr_mean,
            "snr_var_db2": self.snr_var,
            "histogram": {
                "bin_edges": self.bin_edges.tolist(),
                "counts": self.counts.tolist(),
                "overflow": self.overflow,
            },
        }


@dataclass
class CampaignStats:
    entries: Dict[Tuple[float, str], EstimatorStats] = field(default_factory=dict)
    completed_units: int = 0
    total_units: int = 0

    @property
    def lengths(self) -> List[float]:
        return sorted({k[0] for k in self.entries})

    def estimators(self, length: Optional[float] = None) -> List[str]:
        names = [k[1] for k in self.entries if length is None or k[0] == length]
        return list(dict.fromkeys(names))

    def get(self, length: float, estimator: str) -> EstimatorStats:
        return self.entries[(length, str(estimator))]
