"""Passive optics: beam splitter, delay line, loss, pair source, Michelson scan."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import PhotonStream, SpectrumModel, analytic_g1, _strictly_increasing_int64
from .rng import rng_for
from .units import C_MM_PER_FS, INT64_MAX, S


@dataclass(frozen=True)
class ScanConfig:
    """Michelson scan parameters (mirror displacement domain)."""

    mirror_speed_mm_s: float
    scan_range_mm: float
    window_s: float
    base_rate_hz: float
    background_rate_hz: float = 0.0
    max_visibility: float = 1.0

    def __post_init__(self):
        if min(self.mirror_speed_mm_s, self.scan_range_mm, self.window_s, self.base_rate_hz) <= 0:
            raise ValueError("scan parameters must be positive")
        if self.background_rate_hz < 0:
            raise ValueError("background rate must be >= 0")
        if not 0.0 <= self.max_visibility <= 1.0:
            raise ValueError("max_visibility must be in [0, 1]")


@dataclass
class Interferogram:
    """Windowed counts versus mirror displacement.

    window_s and wavelength_nm are carried along because visibility
    extraction needs the per-window integration time (for background
    subtraction) and the fringe period.
    """

    positions_mm: np.ndarray
    counts: np.ndarray
    window_s: float
    wavelength_nm: float

    def __post_init__(self):
        if len(self.positions_mm) != len(self.counts):
            raise ValueError("positions and counts must have equal length")
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("counts must be >= 0")


def beam_split(stream: PhotonStream, transmittance: float, seed: int):
    """Route each photon independently: output A with prob transmittance, else B."""
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError("transmittance must be in [0, 1]")
    rng = rng_for(seed)
    to_a = rng.random(len(stream)) < transmittance
    a = PhotonStream(arrivals=stream.arrivals[to_a], duration_fs=stream.duration_fs)
    b = PhotonStream(arrivals=stream.arrivals[~to_a], duration_fs=stream.duration_fs)
    return a, b


def delay_stream(stream: PhotonStream, delta_fs: int) -> PhotonStream:
    """Shift all timestamps by delta_fs (order preserving, exactly invertible)."""
    delta = int(delta_fs)
    if len(stream):
        lo = int(stream.arrivals[0]) + delta
        hi = int(stream.arrivals[-1]) + delta
        if lo < -INT64_MAX or hi > INT64_MAX:
            raise OverflowError("delay would overflow the 64-bit time range")
    # Bypass range validation: a delayed stream may transiently run past the
    # nominal observation window (detection clips it again).
    out = PhotonStream.__new__(PhotonStream)
    out.arrivals = stream.arrivals + delta
    out.duration_fs = stream.duration_fs
    return out


def attenuate(stream: PhotonStream, efficiency: float, seed: int) -> PhotonStream:
    """Bernoulli thinning at the given survival probability."""
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("efficiency must be in [0, 1]")
    rng = rng_for(seed)
    keep = rng.random(len(stream)) < efficiency
    return PhotonStream(arrivals=stream.arrivals[keep], duration_fs=stream.duration_fs)


def simulate_pair_source(
    rate_hz: float, pair_spread_fs: float, duration_fs: float, seed: int
):
    """Degenerate photon-pair source used for jitter calibration.

    Pair creations are Poissonian (cw pump); each pair puts one photon in
    each output, jittered by +-pair_spread/2 uniformly around the creation
    time.
    """
    if pair_spread_fs < 0:
        raise ValueError("pair_spread must be >= 0")
    if duration_fs <= 0:
        raise ValueError("duration must be positive")
    rng = rng_for(seed)
    duration = int(round(duration_fs))
    n = rng.poisson(rate_hz / S * duration)
    creation = np.sort(rng.random(n) * duration)
    outs = []
    for _ in range(2):
        t = creation + (rng.random(n) - 0.5) * pair_spread_fs
        t = t[(t >= 0) & (t < duration)].astype(np.int64)
        outs.append(PhotonStream(arrivals=_strictly_increasing_int64(t), duration_fs=duration))
    return outs[0], outs[1]


def michelson_expected_rate_hz(
    spectrum: SpectrumModel, scan: ScanConfig, x_mm: np.ndarray
) -> np.ndarray:
    """Expected detector rate at mirror displacement x (path difference 2x)."""
    tau_fs = 2.0 * np.asarray(x_mm, dtype=float) / C_MM_PER_FS
    envelope = np.abs(analytic_g1(spectrum, tau_fs))
    wavelength_mm = spectrum.center_wavelength_nm * 1e-6
    fringe = np.cos(4.0 * np.pi * np.asarray(x_mm) / wavelength_mm)
    return (
        scan.base_rate_hz * (1.0 + scan.max_visibility * envelope * fringe)
        + scan.background_rate_hz
    )


def michelson_scan(spectrum: SpectrumModel, scan: ScanConfig, seed: int) -> Interferogram:
    """Simulated interferogram: Poisson counts per integration window.

    The interferometer is simulated at the rate level (analytic |g1| plus
    carrier); the mirror position is sampled at window centers.
    """
    rng = rng_for(seed)
    n_windows = int(math.floor(scan.scan_range_mm / (scan.mirror_speed_mm_s * scan.window_s)))
    if n_windows < 1:
        raise ValueError("scan covers no full integration window")
    step = scan.mirror_speed_mm_s * scan.window_s
    x = (np.arange(n_windows) - (n_windows - 1) / 2.0) * step
    mean_counts = michelson_expected_rate_hz(spectrum, scan, x) * scan.window_s
    counts = rng.poisson(mean_counts)
    return Interferogram(
        positions_mm=x,
        counts=counts,
        window_s=scan.window_s,
        wavelength_nm=spectrum.center_wavelength_nm,
    )
