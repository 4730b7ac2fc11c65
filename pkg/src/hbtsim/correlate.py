"""Streaming cross-correlation of tag channels into signed-delay histograms.

Every ordered pair (t_a, t_b) with |t_b - t_a| within the lag window
increments the bin containing dt = t_b - t_a (multi-pair counting, no
pairing exclusivity).  Delays from stream B to stream A are negative by
convention; simultaneous ticks land in the center bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detector import TagStream
from .units import S

_CHUNK = 2_000_000


@dataclass
class CorrelationHistogram:
    bin_width_fs: float
    max_lag_fs: float
    counts: np.ndarray
    total_time_fs: float
    rate_a_hz: float
    rate_b_hz: float

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.counts) % 2 != 1:
            raise ValueError("number of bins must be odd (center bin straddles zero delay)")
        if np.any(self.counts < 0):
            raise ValueError("counts must be >= 0")

    @property
    def n_side(self) -> int:
        return len(self.counts) // 2

    def delays_fs(self) -> np.ndarray:
        return (np.arange(len(self.counts)) - self.n_side) * self.bin_width_fs

    def expected_plateau_per_bin(self) -> float:
        """Accidental level for uncorrelated streams: rate_a * rate_b * bin * T."""
        return self.rate_a_hz * self.rate_b_hz * (self.bin_width_fs / S) * (self.total_time_fs / S)


def cross_correlate(
    a: TagStream, b: TagStream, bin_width_fs: float, max_lag_fs: float
) -> CorrelationHistogram:
    """Histogram of delays t_b - t_a over all pairs within +-max_lag.

    Single linear-merge pass over sorted ticks, O(N * k) with k the mean
    occupancy of the lag window.  bin_width must be an integer multiple of
    the shared tag resolution.
    """
    if a.resolution_fs != b.resolution_fs:
        raise ValueError("streams must share tag resolution")
    res = a.resolution_fs
    m = int(round(bin_width_fs / res))
    if m < 1 or abs(m * res - bin_width_fs) > 1e-9 * bin_width_fs:
        raise ValueError("bin_width must be an integer multiple of the tag resolution")
    n_side = int(max_lag_fs // (m * res))
    if n_side < 1:
        raise ValueError("max_lag must cover at least one bin on each side")

    ta = a.ticks.astype(np.int64)
    tb = b.ticks.astype(np.int64)
    half = (m * (2 * n_side + 1)) // 2  # ticks; slight over-gather, filtered below
    counts = np.zeros(2 * n_side + 1, dtype=np.int64)

    for start in range(0, len(ta), _CHUNK):
        tc = ta[start : start + _CHUNK]
        lo = np.searchsorted(tb, tc - half, side="left")
        hi = np.searchsorted(tb, tc + half, side="right")
        span = hi - lo
        total = int(span.sum())
        if total == 0:
            continue
        cum = np.cumsum(span)
        flat = np.arange(total, dtype=np.int64) + np.repeat(lo - (cum - span), span)
        delta = tb[flat] - np.repeat(tc, span)
        # symmetric rounding: bin k covers delays of magnitude ((2k-1)m/2, (2k+1)m/2]
        mag = (2 * np.abs(delta) + m) // (2 * m)
        keep = mag <= n_side
        idx = n_side + np.sign(delta[keep]) * mag[keep]
        counts += np.bincount(idx, minlength=len(counts))

    duration_fs = min(a.duration_fs, b.duration_fs)
    return CorrelationHistogram(
        bin_width_fs=float(m * res),
        max_lag_fs=float(max_lag_fs),
        counts=counts,
        total_time_fs=float(duration_fs),
        rate_a_hz=len(ta) / duration_fs * S,
        rate_b_hz=len(tb) / duration_fs * S,
    )


def merge_histograms(hists) -> CorrelationHistogram:
    """Elementwise sum of shard histograms (associative and commutative)."""
    hists = list(hists)
    first = hists[0]
    for h in hists[1:]:
        if len(h.counts) != len(first.counts) or h.bin_width_fs != first.bin_width_fs:
            raise ValueError("histograms must share binning")
    total_time = sum(h.total_time_fs for h in hists)
    return CorrelationHistogram(
        bin_width_fs=first.bin_width_fs,
        max_lag_fs=first.max_lag_fs,
        counts=np.sum([h.counts for h in hists], axis=0),
        total_time_fs=total_time,
        rate_a_hz=sum(h.rate_a_hz * h.total_time_fs for h in hists) / total_time,
        rate_b_hz=sum(h.rate_b_hz * h.total_time_fs for h in hists) / total_time,
    )


@dataclass
class G2Estimate:
    delays_fs: np.ndarray
    g2: np.ndarray
    sigma: np.ndarray
    plateau_mean: float
    bin_width_fs: float


def normalize(
    hist: CorrelationHistogram, plateau_lo_fs: float, plateau_hi_fs: float
) -> G2Estimate:
    """Normalize by the mean accidental level over the plateau region.

    The plateau is taken on both signs of the delay axis; per-bin errors
    follow the Poisson sqrt(N) convention.
    """
    delays = hist.delays_fs()
    plateau = (np.abs(delays) >= plateau_lo_fs) & (np.abs(delays) <= plateau_hi_fs)
    if plateau.sum() < 100:
        raise ValueError("plateau region must contain at least 100 bins")
    nbar = hist.counts[plateau].mean()
    if nbar <= 0:
        raise ValueError("empty plateau region")
    g2 = hist.counts / nbar
    sigma = np.sqrt(np.maximum(hist.counts, 1)) / nbar
    return G2Estimate(
        delays_fs=delays, g2=g2, sigma=sigma, plateau_mean=float(nbar),
        bin_width_fs=hist.bin_width_fs,
    )


@dataclass
class PeakReport:
    height_excess: float
    area_excess_fs: float
    centroid_fs: float
    significance: float


def peak_stats(g2est: G2Estimate, peak_lo_fs: float, peak_hi_fs: float) -> PeakReport:
    """Excess-over-plateau statistics inside a signed delay window.

    significance is the excess area over its propagated Poisson error; a
    negative total excess gives a signed value, not a clamp.
    """
    window = (g2est.delays_fs >= peak_lo_fs) & (g2est.delays_fs <= peak_hi_fs)
    if not np.any(window):
        raise ValueError("peak window outside measured lags")
    excess = g2est.g2[window] - 1.0
    b = g2est.bin_width_fs
    area = float(excess.sum() * b)
    sigma_area = float(np.sqrt(np.sum(g2est.sigma[window] ** 2)) * b)
    total = excess.sum()
    centroid = float((excess * g2est.delays_fs[window]).sum() / total) if total != 0 else 0.0
    return PeakReport(
        height_excess=float(excess.max()),
        area_excess_fs=area,
        centroid_fs=centroid,
        significance=area / sigma_area if sigma_area > 0 else 0.0,
    )


def write_histogram_csv(hist: CorrelationHistogram, path) -> None:
    with open(path, "w") as f:
        f.write("delay_ps,counts\n")
        for d, c in zip(hist.delays_fs() / 1e3, hist.counts):
            f.write(f"{d:.6f},{c}\n")


def write_g2_csv(g2est: G2Estimate, path) -> None:
    with open(path, "w") as f:
        f.write("delay_ps,g2,sigma\n")
        for d, g, s in zip(g2est.delays_fs / 1e3, g2est.g2, g2est.sigma):
            f.write(f"{d:.6f},{g:.9g},{s:.9g}\n")
