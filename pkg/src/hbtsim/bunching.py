"""Assumption-free prediction of the smeared bunching peak.

The coincidence excess is predicted by rescaling the measured (peak
normalized) jitter curve so its area equals the area of the squared
first-order coherence envelope: no shape assumption enters, only the two
areas.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .correlate import CorrelationHistogram
from .optics import Interferogram
from .units import C_MM_PER_FS


@dataclass
class EnvelopeCurve:
    """|g1| versus delay, rescaled so the raw peak visibility maps to 1."""

    delays_fs: np.ndarray
    values: np.ndarray
    vmax_raw: float


@dataclass
class JitterCurve:
    """Unit-peak coincidence profile of the detection unit and its area."""

    delays_fs: np.ndarray
    values: np.ndarray
    area_fs: float

    def __post_init__(self):
        if self.area_fs <= 0:
            raise ValueError("jitter area must be positive")


def extract_envelope(
    ifg: Interferogram, background_rate_hz: float, window_fringes: int = 2
) -> EnvelopeCurve:
    """Fringe visibility of the interferogram, window by window.

    Counts are background-subtracted, grouped into windows spanning the
    requested number of fringes, and each window is fit with a sinusoid at
    the carrier period (least squares); V = fringe amplitude / mean level.
    The mirror displacement axis is converted to delay via tau = 2x / c.
    """
    if window_fringes < 2:
        raise ValueError("visibility window must span at least 2 fringes")
    y = ifg.counts.astype(float) - background_rate_hz * ifg.window_s
    neg = y < 0
    if np.any(neg):
        warnings.warn(f"{int(neg.sum())} windows negative after background subtraction, clipped")
        y = np.maximum(y, 0.0)

    x = np.asarray(ifg.positions_mm, dtype=float)
    fringe_mm = ifg.wavelength_nm * 1e-6 / 2.0
    dx = x[1] - x[0] if len(x) > 1 else fringe_mm
    pts = max(3, int(round(window_fringes * fringe_mm / dx)))
    n_win = len(x) // pts
    if n_win < 3:
        raise ValueError("interferogram too short for visibility extraction")

    xw = x[: n_win * pts].reshape(n_win, pts)
    yw = y[: n_win * pts].reshape(n_win, pts)
    phase = 4.0 * np.pi * xw / (ifg.wavelength_nm * 1e-6)
    design = np.stack([np.ones_like(phase), np.cos(phase), np.sin(phase)], axis=-1)

    mtm = np.einsum("wpi,wpj->wij", design, design)
    mty = np.einsum("wpi,wp->wi", design, yw)
    p = np.linalg.solve(mtm, mty[..., None])[..., 0]
    mean_level = p[:, 0]
    amp = np.hypot(p[:, 1], p[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        vis = np.where(mean_level > 0, amp / mean_level, 0.0)

    # peak from a locally averaged curve: the raw max of a noisy visibility
    # series is biased high, which would deflate the normalized envelope
    w = min(5, len(vis))
    smooth = np.convolve(vis, np.ones(w) / w, mode="same") if w > 1 else vis
    vmax = float(smooth.max())
    if vmax < 1e-9:
        raise ValueError("no fringes found (zero visibility everywhere)")
    delays = 2.0 * xw.mean(axis=1) / C_MM_PER_FS
    return EnvelopeCurve(delays_fs=delays, values=vis / vmax, vmax_raw=vmax)


def squared_envelope_area_fs(env: EnvelopeCurve) -> float:
    """Trapezoidal integral of the squared, rescaled envelope, in fs."""
    if len(env.values) < 3:
        raise ValueError("need at least 3 envelope points")
    return float(np.trapezoid(env.values**2, env.delays_fs))


def normalize_jitter(hist: CorrelationHistogram, plateau_fraction: float = 0.2) -> JitterCurve:
    """Peak-normalized jitter curve from a pair-source calibration histogram.

    The accidental plateau (mean of the outermost bins on each side) is
    subtracted before normalization; the area is the sum of normalized bin
    values times the bin width.
    """
    counts = hist.counts.astype(float)
    n_edge = max(1, int(len(counts) * plateau_fraction / 2))
    plateau = np.concatenate([counts[:n_edge], counts[-n_edge:]]).mean()
    values = counts - plateau
    peak = values.max()
    if peak <= 0:
        raise ValueError("jitter histogram has no peak above the plateau")
    values /= peak
    return JitterCurve(
        delays_fs=hist.delays_fs(),
        values=values,
        area_fs=float(values.sum() * hist.bin_width_fs),
    )


@dataclass
class PredictedPeak:
    delays_fs: np.ndarray
    excess: np.ndarray
    peak_height: float
    area_fs: float

    def g2(self) -> np.ndarray:
        return 1.0 + self.excess


def predict_smeared_peak(
    jitter: JitterCurve, g1sq_area_fs: float, shift_fs: float = 0.0
) -> PredictedPeak:
    """Predicted coincidence excess: jitter profile rescaled to the |g1|^2 area.

    peak height = g1sq_area / jitter area; the optional lateral shift is
    meant for sub-tag-resolution alignment only and never enters
    significance estimates.
    """
    if g1sq_area_fs <= 0:
        raise ValueError("g1^2 area must be positive")
    pitch = abs(jitter.delays_fs[1] - jitter.delays_fs[0]) if len(jitter.delays_fs) > 1 else 0.0
    if pitch and abs(shift_fs) > pitch:
        warnings.warn("lateral shift exceeds one histogram bin; intended for sub-bin alignment")
    scale = g1sq_area_fs / jitter.area_fs
    if shift_fs == 0.0:
        excess = scale * jitter.values
    else:
        excess = scale * np.interp(
            jitter.delays_fs - shift_fs, jitter.delays_fs, jitter.values, left=0.0, right=0.0
        )
    return PredictedPeak(
        delays_fs=jitter.delays_fs.copy(),
        excess=excess,
        peak_height=scale,
        area_fs=float(excess.sum() * (pitch or 1.0)),
    )


def write_envelope_csv(env: EnvelopeCurve, path) -> None:
    with open(path, "w") as f:
        f.write("delay_ps,envelope\n")
        for d, v in zip(env.delays_fs / 1e3, env.values):
            f.write(f"{d:.6f},{v:.9g}\n")


def write_jitter_csv(curve: JitterCurve, path) -> None:
    with open(path, "w") as f:
        f.write("delay_ps,value\n")
        for d, v in zip(curve.delays_fs / 1e3, curve.values):
            f.write(f"{d:.6f},{v:.9g}\n")


def write_prediction_csv(pred: PredictedPeak, path) -> None:
    with open(path, "w") as f:
        f.write("delay_ps,excess,g2\n")
        for d, e in zip(pred.delays_fs / 1e3, pred.excess):
            f.write(f"{d:.6f},{e:.9g},{1.0 + e:.9g}\n")
