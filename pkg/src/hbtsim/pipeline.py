"""End-to-end experiment orchestration.

Runs the three measurements of the experiment (jitter calibration with a
degenerate pair source, Michelson interferogram, HBT cross-correlation)
and compares the measured bunching excess against the area-rescaled
jitter-curve prediction.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import bunching, correlate, tagfile
from .config import ExperimentConfig
from .detector import TagStream, detect
from .field import (
    PhotonStream,
    SpectrumModel,
    emit_photons,
    g1_squared_area_fs,
    sample_poisson_arrivals,
    sample_thermal_arrivals,
    synthesize_thermal_field,
)
from .optics import attenuate, beam_split, delay_stream, michelson_scan, simulate_pair_source
from .rng import rng_for
from .units import NS, PS, S


class PipelineError(RuntimeError):
    def __init__(self, stage: str, original: Exception):
        super().__init__(f"pipeline stage '{stage}' failed: {original}")
        self.stage = stage
        self.original = original


def child_seed(master_seed: int, *key: int) -> int:
    """Integer seed derived from (master seed, key path); scheduling-independent."""
    return int(rng_for(master_seed, *key).integers(2**62))


# seed key namespaces
_K_CAL, _K_SCAN, _K_SEGMENT = 1, 2, 3


def calibrate_jitter(cfg: ExperimentConfig):
    """Pair-source calibration run; returns (jitter curve, raw histogram)."""
    cal = cfg.calibration
    duration_fs = cal.duration_s * S
    sa, sb = simulate_pair_source(
        cal.pair_rate_hz, cal.pair_spread_ps * PS, duration_fs,
        child_seed(cfg.run.master_seed, _K_CAL, 0),
    )
    ta = detect(sa, cfg.detector("a"), duration_fs, child_seed(cfg.run.master_seed, _K_CAL, 1), channel=0)
    tb = detect(sb, cfg.detector("b"), duration_fs, child_seed(cfg.run.master_seed, _K_CAL, 2), channel=1)
    hist = correlate.cross_correlate(
        ta, tb, cfg.correlation.bin_width_ps * PS, cfg.correlation.max_lag_ns * NS
    )
    return bunching.normalize_jitter(hist), hist


def measure_envelope(cfg: ExperimentConfig):
    """Michelson loop; returns (g1^2 area in fs, envelope or None, interferogram or None)."""
    spectrum = cfg.spectrum()
    if cfg.prediction.use_analytic_envelope:
        return g1_squared_area_fs(spectrum), None, None
    ifg = michelson_scan(spectrum, cfg.scan_config(), child_seed(cfg.run.master_seed, _K_SCAN))
    env = bunching.extract_envelope(ifg, cfg.scan.background_rate_hz, cfg.scan.window_fringes)
    return bunching.squared_envelope_area_fs(env), env, ifg


def _source_segment(cfg: ExperimentConfig, spectrum: SpectrumModel, duration_fs: float, seed: int) -> PhotonStream:
    src = cfg.source
    if src.kind == "coherent":
        return sample_poisson_arrivals(src.rate_hz, duration_fs, seed)
    if src.kind != "thermal":
        raise ValueError(f"unknown source kind {src.kind!r}")
    generator = src.generator
    if generator == "auto":
        occupancy = src.rate_hz / S * g1_squared_area_fs(spectrum)
        generator = "sparse" if occupancy < 0.01 else "field"
    if generator == "sparse":
        return sample_thermal_arrivals(spectrum, src.rate_hz, duration_fs, seed)
    if generator == "field":
        trace = synthesize_thermal_field(spectrum, duration_fs, src.dt_fs, seed)
        return emit_photons(trace, src.rate_hz, seed)
    raise ValueError(f"unknown generator {src.generator!r}")


def _undelay(tags: TagStream, delay_fs: float, duration_ticks: int) -> TagStream:
    """Remove the software delay from a detected channel (models the hardware delay line)."""
    shift = int(round(delay_fs / tags.resolution_fs))
    t = tags.ticks.astype(np.int64) - shift
    keep = (t >= 0) & (t < duration_ticks)
    return TagStream(
        resolution_fs=tags.resolution_fs,
        duration_ticks=duration_ticks,
        channels=tags.channels[keep],
        ticks=t[keep].astype(np.uint64),
    )


@dataclass
class HbtMeasurement:
    histogram: correlate.CorrelationHistogram
    g2: correlate.G2Estimate
    tags_a: Optional[TagStream] = None
    tags_b: Optional[TagStream] = None


def run_hbt_measurement(cfg: ExperimentConfig, collect_tags: bool = False) -> HbtMeasurement:
    """Source -> beam splitter -> losses/delay -> detectors -> correlator.

    The run is split into independent segments (seeded from the master seed
    and the segment index); per-segment histograms are merged, which is
    bin-exact because segments are separated in time.
    """
    spectrum = cfg.spectrum()
    seg_fs = cfg.run.duration_s * S / cfg.run.segments
    delay_fs = cfg.optics.delay_ns * NS
    hists: List[correlate.CorrelationHistogram] = []
    parts_a, parts_b = [], []
    gap_ticks = 0

    for k in range(cfg.run.segments):
        seed = lambda sub: child_seed(cfg.run.master_seed, _K_SEGMENT, k, sub)
        source = _source_segment(cfg, spectrum, seg_fs, seed(0))
        arm_a, arm_b = beam_split(source, cfg.optics.transmittance, seed(1))
        if cfg.optics.loss_a < 1.0:
            arm_a = attenuate(arm_a, cfg.optics.loss_a, seed(2))
        if cfg.optics.loss_b < 1.0:
            arm_b = attenuate(arm_b, cfg.optics.loss_b, seed(3))
        if delay_fs:
            arm_b = delay_stream(arm_b, int(round(delay_fs)))

        ta = detect(arm_a, cfg.detector("a"), seg_fs, seed(4), channel=0)
        tb = detect(arm_b, cfg.detector("b"), seg_fs + delay_fs, seed(5), channel=1)
        if delay_fs:
            tb = _undelay(tb, delay_fs, ta.duration_ticks)

        hists.append(
            correlate.cross_correlate(
                ta, tb, cfg.correlation.bin_width_ps * PS, cfg.correlation.max_lag_ns * NS
            )
        )
        if collect_tags:
            gap_ticks = int(cfg.correlation.max_lag_ns * NS // ta.resolution_fs) + 1
            offset = k * (ta.duration_ticks + gap_ticks)
            for tags, parts in ((ta, parts_a), (tb, parts_b)):
                parts.append((tags.ticks.astype(np.int64) + offset, tags.channels))

    hist = correlate.merge_histograms(hists)
    g2 = correlate.normalize(
        hist, cfg.correlation.plateau_lo_ns * NS, cfg.correlation.plateau_hi_ns * NS
    )

    tags_a = tags_b = None
    if collect_tags:
        res = cfg.detector("a").tag_resolution_fs
        seg_ticks = -(-int(round(seg_fs)) // res)
        total_ticks = cfg.run.segments * (seg_ticks + gap_ticks)
        mk = lambda parts, ch: TagStream(
            resolution_fs=res,
            duration_ticks=total_ticks,
            channels=np.concatenate([p[1] for p in parts]) if parts else np.empty(0, np.uint8),
            ticks=np.concatenate([p[0] for p in parts]).astype(np.uint64)
            if parts
            else np.empty(0, np.uint64),
        )
        tags_a, tags_b = mk(parts_a, 0), mk(parts_b, 1)

    return HbtMeasurement(histogram=hist, g2=g2, tags_a=tags_a, tags_b=tags_b)


@dataclass
class PipelineResult:
    g2: correlate.G2Estimate
    peak: correlate.PeakReport
    predicted: bunching.PredictedPeak
    jitter: bunching.JitterCurve
    g1sq_area_fs: float
    report_text: str
    files: List[str] = field(default_factory=list)


def _comparison_report(cfg, result_g2, peak, predicted, jitter, g1sq_area_fs) -> str:
    c = cfg.correlation
    window = (result_g2.delays_fs >= c.peak_lo_ps * PS) & (result_g2.delays_fs <= c.peak_hi_ps * PS)
    residuals = (result_g2.g2[window] - (1.0 + predicted.excess[window])) / result_g2.sigma[window]
    lines = [
        "== hbtsim pipeline report ==",
        f"source: {cfg.source.kind} ({cfg.source.shape}), coherence FWHM {cfg.source.coherence_fwhm_ps} ps, rate {cfg.source.rate_hz:g} /s",
        f"run: {cfg.run.duration_s} s in {cfg.run.segments} segments, master seed {cfg.run.master_seed}",
        f"plateau counts per bin: {result_g2.plateau_mean:.1f}",
        f"g1sq area: {g1sq_area_fs / PS:.4f} ps",
        f"jitter curve area: {jitter.area_fs / PS:.4f} ps",
        f"predicted peak height: {predicted.peak_height:.6g}",
        f"measured peak height: {peak.height_excess:.6g}",
        f"measured excess area: {peak.area_excess_fs / PS:.4f} ps",
        f"measured centroid: {peak.centroid_fs / PS:.2f} ps",
        f"significance: {peak.significance:.2f} sigma",
        f"height ratio measured/predicted: {peak.height_excess / predicted.peak_height:.4f}",
        f"area ratio measured/g1sq: {peak.area_excess_fs / g1sq_area_fs:.4f}",
        f"residuals in peak window (sigma units): mean {residuals.mean():.3f}, rms {np.sqrt((residuals**2).mean()):.3f}",
    ]
    return "\n".join(lines)


def run_pipeline(cfg: ExperimentConfig, out_dir: str) -> PipelineResult:
    """Full experiment; writes the artifact set into out_dir.

    Any stage error is surfaced with the stage name and partially written
    artifacts are removed.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: List[str] = []

    def _write(name, writer):
        path = os.path.join(out_dir, name)
        writer(path)
        written.append(path)
        return path

    try:
        try:
            jitter, jitter_hist = calibrate_jitter(cfg)
        except Exception as exc:
            raise PipelineError("jitter-calibration", exc) from exc
        try:
            g1sq_area_fs, env, ifg = measure_envelope(cfg)
        except Exception as exc:
            raise PipelineError("interferometry", exc) from exc
        try:
            hbt = run_hbt_measurement(cfg, collect_tags=cfg.run.save_tags)
        except Exception as exc:
            raise PipelineError("hbt-measurement", exc) from exc
        try:
            predicted = bunching.predict_smeared_peak(
                jitter, g1sq_area_fs, cfg.prediction.shift_ps * PS
            )
            peak = correlate.peak_stats(
                hbt.g2, cfg.correlation.peak_lo_ps * PS, cfg.correlation.peak_hi_ps * PS
            )
            report = _comparison_report(cfg, hbt.g2, peak, predicted, jitter, g1sq_area_fs)
        except Exception as exc:
            raise PipelineError("prediction", exc) from exc

        _write("jitter.csv", lambda p: bunching.write_jitter_csv(jitter, p))
        if env is not None:
            _write("envelope.csv", lambda p: bunching.write_envelope_csv(env, p))
        if ifg is not None:
            _write("interferogram.csv", lambda p: _write_interferogram_csv(ifg, p))
        _write("histogram.csv", lambda p: correlate.write_histogram_csv(hbt.histogram, p))
        _write("g2.csv", lambda p: correlate.write_g2_csv(hbt.g2, p))
        _write("prediction.csv", lambda p: bunching.write_prediction_csv(predicted, p))
        def _report_writer(p):
            with open(p, "w") as f:
                f.write(report + "\n")

        _write("report.txt", _report_writer)
        if cfg.run.save_tags:
            _write("tags_a.bin", lambda p: tagfile.write_tags(hbt.tags_a, p))
            _write("tags_b.bin", lambda p: tagfile.write_tags(hbt.tags_b, p))
    except Exception:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise

    return PipelineResult(
        g2=hbt.g2,
        peak=peak,
        predicted=predicted,
        jitter=jitter,
        g1sq_area_fs=g1sq_area_fs,
        report_text=report,
        files=written,
    )


def _write_interferogram_csv(ifg, path) -> None:
    with open(path, "w") as f:
        f.write("position_mm,counts\n")
        for x, c in zip(ifg.positions_mm, ifg.counts):
            f.write(f"{x:.9f},{c}\n")


def reference_prediction_report(
    g1sq_area_ps: float = 2.17,
    jitter_area_ps: float = 611.0,
    jitter_fwhm_ps: float = 640.0,
    plateau_counts: float = 4.4e6,
    bin_width_ps: float = 82.2,
) -> str:
    """Analytic prediction path at the reference experiment parameters.

    Uses a Gaussian stand-in for the jitter shape (only the area enters the
    height); significance is evaluated against sqrt(N) plateau fluctuations.
    """
    b = bin_width_ps * PS
    n_side = int(round(2000.0 * PS / b))
    delays = (np.arange(2 * n_side + 1) - n_side) * b
    shape = np.exp(-4.0 * math.log(2.0) * (delays / (jitter_fwhm_ps * PS)) ** 2)
    jitter = bunching.JitterCurve(delays_fs=delays, values=shape, area_fs=jitter_area_ps * PS)
    predicted = bunching.predict_smeared_peak(jitter, g1sq_area_ps * PS)

    sigma = np.full_like(delays, 1.0 / math.sqrt(plateau_counts), dtype=float)
    synthetic = correlate.G2Estimate(
        delays_fs=delays, g2=1.0 + predicted.excess, sigma=sigma,
        plateau_mean=plateau_counts, bin_width_fs=b,
    )
    stats = correlate.peak_stats(synthetic, -jitter_fwhm_ps * PS, jitter_fwhm_ps * PS)
    return "\n".join(
        [
            "== prediction at reference parameters ==",
            f"g1sq area: {g1sq_area_ps} ps, jitter area: {jitter_area_ps} ps",
            f"predicted peak height: {predicted.peak_height:.4g}",
            f"plateau counts per bin: {plateau_counts:g} (per-bin sigma {1.0 / math.sqrt(plateau_counts):.3g})",
            f"predicted significance over +-{jitter_fwhm_ps:g} ps: {stats.significance:.1f} sigma",
        ]
    )
