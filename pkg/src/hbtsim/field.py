"""Stochastic optical field synthesis and photon emission.

The marginal SPDC field is modelled as a classical circular complex
Gaussian process with unit mean intensity; photon arrivals are a Cox
(doubly stochastic Poisson) process driven by the instantaneous intensity.
This reproduces thermal counting statistics and the bunching relation
g2 = 1 + |g1|^2 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .rng import rng_for
from .units import S

LN2 = math.log(2.0)


class SpectrumShape(str, Enum):
    GAUSSIAN = "gaussian"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class SpectrumModel:
    """Spectral model of one SPDC arm.

    coherence_fwhm_fs is the FWHM of |g1(tau)|; center_wavelength_nm only
    matters for interferometer fringes.
    """

    shape: SpectrumShape
    coherence_fwhm_fs: float
    center_wavelength_nm: float = 810.0

    def __post_init__(self):
        if self.coherence_fwhm_fs <= 0:
            raise ValueError("coherence_fwhm_fs must be positive")
        if self.center_wavelength_nm <= 0:
            raise ValueError("center_wavelength_nm must be positive")


@dataclass
class FieldTrace:
    """Sampled complex field envelope E(t) with unit mean intensity."""

    dt_fs: float
    samples: np.ndarray
    seed: int

    @property
    def duration_fs(self) -> float:
        return self.dt_fs * len(self.samples)

    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2


@dataclass
class PhotonStream:
    """Strictly increasing photon arrival times on one optical path, int64 fs."""

    arrivals: np.ndarray
    duration_fs: int

    def __post_init__(self):
        self.arrivals = np.asarray(self.arrivals, dtype=np.int64)
        self.duration_fs = int(self.duration_fs)
        if len(self.arrivals):
            if np.any(np.diff(self.arrivals) <= 0):
                raise ValueError("arrivals must be strictly increasing")
            if self.arrivals[0] < 0 or self.arrivals[-1] > self.duration_fs:
                raise ValueError("arrivals outside [0, duration]")

    def __len__(self) -> int:
        return len(self.arrivals)

    def rate_hz(self) -> float:
        return len(self.arrivals) / self.duration_fs * S


@dataclass(frozen=True)
class ThermalDistribution:
    """Bose-Einstein photon-number distribution with mean nu."""

    nu: float

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")


def thermal_pn(dist: ThermalDistribution, n) -> float:
    """P_n = nu^n / (nu+1)^(n+1)."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("photon number must be >= 0")
    nu = dist.nu
    if nu == 0.0:
        out = np.where(n == 0, 1.0, 0.0)
        return out if out.ndim else float(out)
    out = np.exp(n * math.log(nu) - (n + 1) * math.log(nu + 1.0))
    return out if out.ndim else float(out)


def analytic_g1(spectrum: SpectrumModel, tau_fs):
    """Envelope of the first-order coherence (carrier removed).

    Parameterized so the FWHM of the returned modulus equals the
    coherence time of the spectrum.
    """
    tau = np.asarray(tau_fs, dtype=float)
    tc = spectrum.coherence_fwhm_fs
    if spectrum.shape is SpectrumShape.GAUSSIAN:
        out = np.exp(-4.0 * LN2 * (tau / tc) ** 2)
    else:
        out = np.exp(-2.0 * LN2 * np.abs(tau) / tc)
    out = out.astype(complex)
    return out if out.ndim else complex(out)


def analytic_g2(spectrum: SpectrumModel, tau_fs):
    """Siegert relation for chaotic light: g2 = 1 + |g1|^2."""
    out = 1.0 + np.abs(analytic_g1(spectrum, tau_fs)) ** 2
    return out if np.ndim(out) else float(out)


def g1_squared_area_fs(spectrum: SpectrumModel) -> float:
    """Closed-form integral of |g1(tau)|^2 over all delays, in fs."""
    tc = spectrum.coherence_fwhm_fs
    if spectrum.shape is SpectrumShape.GAUSSIAN:
        return tc * math.sqrt(math.pi / (8.0 * LN2))
    return tc / (2.0 * LN2)


def _strictly_increasing_int64(times: np.ndarray) -> np.ndarray:
    """Sort and bump femtosecond ties so the sequence strictly increases."""
    t = np.sort(times).astype(np.int64)
    while len(t) > 1 and np.any(np.diff(t) <= 0):
        bad = np.flatnonzero(np.diff(t) <= 0)
        t[bad + 1] = t[bad] + 1
        t = np.sort(t)
    return t


def synthesize_thermal_field(
    spectrum: SpectrumModel, duration_fs: float, dt_fs: float, seed: int
) -> FieldTrace:
    """Circular complex Gaussian trace whose |g1| follows the spectrum shape.

    White Gaussian noise filtered with a moving-average kernel (Gaussian
    shape) or an AR(1) recursion (Lorentzian shape); the kernel is
    normalized analytically so the mean intensity is 1.
    """
    if duration_fs <= 0 or dt_fs <= 0:
        raise ValueError("duration and dt must be positive")
    tc = spectrum.coherence_fwhm_fs
    if dt_fs > tc / 10.0:
        raise ValueError(
            f"dt={dt_fs} fs undersamples the field; need dt <= coherence_fwhm/10 = {tc / 10.0} fs"
        )
    if duration_fs < 100.0 * tc:
        raise ValueError("duration must cover at least 100 coherence times")
    n = int(round(duration_fs / dt_fs))
    rng = rng_for(seed)

    if spectrum.shape is SpectrumShape.GAUSSIAN:
        sigma_h = tc / (4.0 * math.sqrt(LN2)) / dt_fs  # in samples
        half = int(math.ceil(6.0 * sigma_h))
        k = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma_h) ** 2)
        k /= math.sqrt(np.sum(k**2))
        white = (
            rng.standard_normal(n + 2 * half) + 1j * rng.standard_normal(n + 2 * half)
        ) / math.sqrt(2.0)
        samples = fftconvolve(white, k, mode="valid")
    else:
        tau0 = tc / (2.0 * LN2)
        rho = math.exp(-dt_fs / tau0)
        burn = int(math.ceil(20.0 * tau0 / dt_fs))
        white = (
            rng.standard_normal(n + burn) + 1j * rng.standard_normal(n + burn)
        ) / math.sqrt(2.0)
        samples = lfilter([math.sqrt(1.0 - rho**2)], [1.0, -rho], white)[burn:]

    return FieldTrace(dt_fs=dt_fs, samples=samples, seed=seed)


def synthesize_coherent_field(duration_fs: float, dt_fs: float) -> FieldTrace:
    """Ideal mono-mode laser surrogate: constant amplitude E(t) = 1."""
    if duration_fs <= 0 or dt_fs <= 0:
        raise ValueError("duration and dt must be positive")
    n = int(round(duration_fs / dt_fs))
    return FieldTrace(dt_fs=dt_fs, samples=np.ones(n, dtype=complex), seed=0)


def emit_photons(trace: FieldTrace, mean_rate_hz: float, seed: int) -> PhotonStream:
    """Inhomogeneous Poisson arrivals with rate mean_rate * |E(t)|^2.

    Per-sample Poisson thinning; requires mean_rate * dt < 0.1 so the
    uniform placement within a sample is accurate.
    """
    rate_per_fs = mean_rate_hz / S
    if rate_per_fs * trace.dt_fs >= 0.1:
        raise ValueError("mean_rate * dt must be < 0.1 (thinning approximation)")
    duration = int(round(trace.duration_fs))
    if len(trace.samples) == 0:
        return PhotonStream(arrivals=np.empty(0, dtype=np.int64), duration_fs=duration)
    rng = rng_for(seed)
    counts = rng.poisson(rate_per_fs * trace.dt_fs * trace.intensity())
    idx = np.repeat(np.arange(len(counts)), counts)
    times = (idx + rng.random(len(idx))) * trace.dt_fs
    times = times[times < duration].astype(np.int64)
    return PhotonStream(arrivals=_strictly_increasing_int64(times), duration_fs=duration)


def sample_thermal_arrivals(
    spectrum: SpectrumModel, mean_rate_hz: float, duration_fs: float, seed: int
) -> PhotonStream:
    """Thermal photon arrivals without synthesizing the field trace.

    Exact in the low-occupancy regime (mean_rate * integral of |g1|^2 << 1):
    the photon stream of a circular Gaussian field is a permanental point
    process, which at low occupancy reduces to independent singles plus a
    Poisson process of correlated pairs whose separation has density
    |g1|^2 / area.  Cluster orders >= 3 are dropped; their relative weight
    is O(mean_rate * area) per extra photon.

    This is what makes long campaigns (hours of simulated time at
    MHz rates with picosecond coherence) tractable; at high occupancy use
    synthesize_thermal_field + emit_photons instead.
    """
    if duration_fs <= 0:
        raise ValueError("duration must be positive")
    lam = mean_rate_hz / S
    area = g1_squared_area_fs(spectrum)
    occupancy = lam * area
    if occupancy >= 0.05:
        raise ValueError(
            "sample_thermal_arrivals requires mean_rate * g1^2-area < 0.05; "
            "use emit_photons on a synthesized trace instead"
        )
    rng = rng_for(seed)
    duration = int(round(duration_fs))

    n_single = rng.poisson((lam - lam**2 * area) * duration)
    singles = rng.random(n_single) * duration

    n_pairs = rng.poisson(0.5 * lam**2 * area * duration)
    centers = rng.random(n_pairs) * duration
    tc = spectrum.coherence_fwhm_fs
    if spectrum.shape is SpectrumShape.GAUSSIAN:
        sep = rng.normal(0.0, tc / (4.0 * math.sqrt(LN2)), n_pairs)
    else:
        sep = rng.laplace(0.0, tc / (4.0 * LN2), n_pairs)
    paired = np.concatenate([centers - sep / 2.0, centers + sep / 2.0])

    times = np.concatenate([singles, paired])
    times = times[(times >= 0) & (times < duration)].astype(np.int64)
    return PhotonStream(arrivals=_strictly_increasing_int64(times), duration_fs=duration)


def sample_poisson_arrivals(rate_hz: float, duration_fs: float, seed: int) -> PhotonStream:
    """Homogeneous Poisson arrivals (ideal mono-mode laser statistics)."""
    if duration_fs <= 0:
        raise ValueError("duration must be positive")
    rng = rng_for(seed)
    duration = int(round(duration_fs))
    n = rng.poisson(rate_hz / S * duration)
    times = (rng.random(n) * duration).astype(np.int64)
    return PhotonStream(arrivals=_strictly_increasing_int64(times), duration_fs=duration)


def empirical_g1(trace: FieldTrace, n_lags: int) -> np.ndarray:
    """|g1| estimated from the trace autocorrelation, lags 0..n_lags-1 (in dt units)."""
    e = trace.samples - 0.0
    n = len(e)
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    spec = np.fft.fft(e, nfft)
    acf = np.fft.ifft(spec * np.conj(spec))[:n_lags].real
    acf /= np.arange(n, n - n_lags, -1)  # unbiased
    return np.abs(acf / acf[0])


def fwhm_of_curve(x: np.ndarray, y: np.ndarray) -> float:
    """FWHM of a peaked curve via linear interpolation of half-max crossings."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    imax = int(np.argmax(y))
    half = y[imax] / 2.0

    def _cross(idx_range):
        for i in idx_range:
            lo, hi = (i, i + 1)
            if (y[lo] - half) * (y[hi] - half) <= 0 and y[lo] != y[hi]:
                f = (half - y[lo]) / (y[hi] - y[lo])
                return x[lo] + f * (x[hi] - x[lo])
        return None

    left = _cross(range(imax - 1, -1, -1))
    right = _cross(range(imax, len(y) - 1))
    if left is None or right is None:
        raise ValueError("curve does not cross half maximum on both sides")
    return right - left
