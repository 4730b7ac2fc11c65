"""Single-photon detector and time-tagger model.

Click pipeline: efficiency thinning -> dark-count superposition -> timing
jitter -> re-sort -> non-paralyzable dead time -> quantization to tagger
ticks.  Dark counts run through jitter/dead time/digitization like photon
clicks (they originate in the diode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .field import PhotonStream
from .rng import rng_for
from .units import S

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class GaussianJitter:
    fwhm_fs: float

    def __post_init__(self):
        if self.fwhm_fs < 0:
            raise ValueError("jitter FWHM must be >= 0")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.fwhm_fs == 0.0:
            return np.zeros(n)
        return rng.normal(0.0, self.fwhm_fs * FWHM_TO_SIGMA, n)


@dataclass(frozen=True)
class EmpiricalJitter:
    """Jitter drawn from a measured histogram (bin centers + weights)."""

    offsets_fs: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.offsets_fs) != len(w) or len(w) == 0:
            raise ValueError("offsets and weights must be equal-length and non-empty")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative and normalizable")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        offs = np.asarray(self.offsets_fs, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        w = w / w.sum()
        idx = rng.choice(len(offs), size=n, p=w)
        pitch = offs[1] - offs[0] if len(offs) > 1 else 0.0
        return offs[idx] + (rng.random(n) - 0.5) * pitch


JitterModel = Union[GaussianJitter, EmpiricalJitter]


@dataclass(frozen=True)
class DetectorConfig:
    quantum_efficiency: float = 0.5
    dark_rate_hz: float = 500.0
    jitter: JitterModel = GaussianJitter(fwhm_fs=640.0e3 / math.sqrt(2.0))
    dead_time_fs: float = 50.0e6
    saturation_rate_hz: float = 1.0e6
    tag_resolution_fs: int = 82200

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError("quantum_efficiency must be in [0, 1]")
        if self.dark_rate_hz < 0:
            raise ValueError("dark_rate_hz must be >= 0")
        if self.dead_time_fs < 0:
            raise ValueError("dead_time_fs must be >= 0")
        if self.tag_resolution_fs <= 0:
            raise ValueError("tag_resolution_fs must be positive")


@dataclass
class DetectionDiagnostics:
    dropped_out_of_range: int = 0
    saturated: bool = False
    post_deadtime_rate_hz: float = 0.0


@dataclass
class TagStream:
    """Detector clicks quantized to tagger units; the on-disk interchange unit."""

    resolution_fs: int
    duration_ticks: int
    channels: np.ndarray
    ticks: np.ndarray
    diagnostics: Optional[DetectionDiagnostics] = field(default=None, compare=False)

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.uint8)
        self.ticks = np.asarray(self.ticks, dtype=np.uint64)
        if len(self.channels) != len(self.ticks):
            raise ValueError("channels and ticks must have equal length")
        if len(self.ticks):
            t = self.ticks.astype(np.int64)
            same = np.diff(t) == 0
            if np.any(np.diff(t) < 0) or np.any(np.diff(self.channels.astype(np.int16))[same] < 0):
                raise ValueError("records must be sorted by (tick, channel)")
            if int(t[-1]) >= self.duration_ticks:
                raise ValueError("ticks must be < duration_ticks")

    def __len__(self) -> int:
        return len(self.ticks)

    @property
    def duration_fs(self) -> int:
        return self.duration_ticks * self.resolution_fs

    def rate_hz(self) -> float:
        return len(self) / self.duration_fs * S

    def select_channel(self, channel: int) -> "TagStream":
        keep = self.channels == channel
        return TagStream(
            resolution_fs=self.resolution_fs,
            duration_ticks=self.duration_ticks,
            channels=self.channels[keep],
            ticks=self.ticks[keep],
        )


def merge_tag_streams(streams) -> TagStream:
    """Merge channel streams sharing resolution into one (tick, channel)-sorted stream."""
    res = {s.resolution_fs for s in streams}
    if len(res) != 1:
        raise ValueError("streams must share tag resolution")
    ticks = np.concatenate([s.ticks for s in streams]).astype(np.int64)
    chans = np.concatenate([s.channels for s in streams])
    order = np.lexsort((chans, ticks))
    return TagStream(
        resolution_fs=res.pop(),
        duration_ticks=max(s.duration_ticks for s in streams),
        channels=chans[order],
        ticks=ticks[order].astype(np.uint64),
    )


@njit(cache=True)
def _deadtime_pass(times: np.ndarray, dead_fs: float) -> np.ndarray:
    """Non-paralyzable dead time: keep a click iff the detector has recovered."""
    out = np.empty_like(times)
    k = 0
    next_ok = -1.0e300
    for t in times:
        if t >= next_ok:
            out[k] = t
            k += 1
            next_ok = t + dead_fs
    return out[:k]


def detect(
    stream: PhotonStream,
    det: DetectorConfig,
    duration_fs: float,
    seed: int,
    channel: int = 0,
) -> TagStream:
    """Run the detector pipeline on a photon stream and emit time tags.

    Events jittered outside [0, duration) are dropped and counted in the
    diagnostics record; a saturation flag is raised when the post-dead-time
    rate exceeds the configured saturation level.
    """
    duration = int(round(duration_fs))
    rng = rng_for(seed)

    t = stream.arrivals.astype(np.float64)
    t = t[rng.random(len(t)) < det.quantum_efficiency]

    n_dark = rng.poisson(det.dark_rate_hz / S * duration)
    t = np.concatenate([t, rng.random(n_dark) * duration])

    t = t + det.jitter.sample(rng, len(t))
    in_range = (t >= 0) & (t < duration)
    dropped = int(len(t) - in_range.sum())
    t = np.sort(t[in_range])

    if det.dead_time_fs > 0 and len(t):
        t = _deadtime_pass(t, float(det.dead_time_fs))

    rate = len(t) / duration * S if duration else 0.0
    ticks = (t // det.tag_resolution_fs).astype(np.uint64)
    duration_ticks = -(-duration // det.tag_resolution_fs)  # ceil

    return TagStream(
        resolution_fs=det.tag_resolution_fs,
        duration_ticks=int(duration_ticks),
        channels=np.full(len(ticks), channel, dtype=np.uint8),
        ticks=ticks,
        diagnostics=DetectionDiagnostics(
            dropped_out_of_range=dropped,
            saturated=rate > det.saturation_rate_hz,
            post_deadtime_rate_hz=rate,
        ),
    )


@dataclass
class InterArrivalHistogram:
    bin_width_fs: float
    counts: np.ndarray

    def edges_fs(self) -> np.ndarray:
        return np.arange(len(self.counts) + 1) * self.bin_width_fs


def autocorrelation_deadtime_check(tags: TagStream, window_fs: float) -> InterArrivalHistogram:
    """Histogram of consecutive inter-arrival gaps of a single-channel stream.

    With non-paralyzable dead time D all bins below D must be empty.
    """
    if len(np.unique(tags.channels)) > 1:
        raise ValueError("expected a single-channel stream")
    n_bins = int(round(window_fs / tags.resolution_fs))
    if len(tags) < 2 or n_bins < 1:
        return InterArrivalHistogram(bin_width_fs=float(tags.resolution_fs), counts=np.zeros(max(n_bins, 0), dtype=np.int64))
    gaps = np.diff(tags.ticks.astype(np.int64))
    counts = np.bincount(gaps[gaps < n_bins], minlength=n_bins)
    return InterArrivalHistogram(bin_width_fs=float(tags.resolution_fs), counts=counts.astype(np.int64))
