"""Quick self-verification of module invariants (seconds, not minutes)."""

from __future__ import annotations

import math
import os
import tempfile
from fractions import Fraction

import numpy as np

from . import bunching, correlate, tagfile
from .detector import DetectorConfig, GaussianJitter, TagStream
from .field import (
    SpectrumModel,
    SpectrumShape,
    ThermalDistribution,
    analytic_g1,
    analytic_g2,
    empirical_g1,
    fwhm_of_curve,
    synthesize_thermal_field,
    thermal_pn,
)
from .multiphoton import (
    fock_amplitudes,
    same_polarization_probability,
    sister_state,
    twin_state,
)
from .optics import delay_stream
from .field import PhotonStream
from .units import NS, PS


def _checks():
    spectrum = SpectrumModel(SpectrumShape.GAUSSIAN, coherence_fwhm_fs=2.8 * PS)

    def fwhm_definition():
        v = abs(analytic_g1(spectrum, spectrum.coherence_fwhm_fs / 2))
        return abs(v - 0.5) < 1e-12, f"|g1(tau_c/2)| = {v}"

    def siegert_limits():
        g0 = analytic_g2(spectrum, 0.0)
        ginf = analytic_g2(spectrum, 1e9)
        return abs(g0 - 2.0) < 1e-12 and abs(ginf - 1.0) < 1e-12, f"g2(0)={g0}, g2(inf)={ginf}"

    def thermal_pn_values():
        d = ThermalDistribution(nu=1.0)
        vals = [thermal_pn(d, n) for n in (0, 1, 2)]
        ok = np.allclose(vals, [0.5, 0.25, 0.125], atol=1e-12)
        return ok, f"P0..P2 = {vals}"

    def fock_thermal_identity():
        worst = 0.0
        for mag in (0.1, 0.5, 1.0):
            probs = fock_amplitudes(mag, 20).probabilities()
            d = ThermalDistribution(nu=math.sinh(mag) ** 2)
            ref = np.array([thermal_pn(d, n) for n in range(21)])
            worst = max(worst, float(np.max(np.abs(probs - ref))))
        return worst < 1e-12, f"max |c_n|^2 deviation {worst:.2e}"

    def polarization_payload():
        tw = same_polarization_probability(twin_state())
        si = same_polarization_probability(sister_state())
        return tw == Fraction(2, 3) and si == Fraction(1, 2), f"twin={tw}, sister={si}"

    def trace_statistics():
        trace = synthesize_thermal_field(spectrum, 500 * spectrum.coherence_fwhm_fs,
                                         spectrum.coherence_fwhm_fs / 10, seed=7)
        i = trace.intensity()
        circ = abs(np.var(trace.samples.real) - np.var(trace.samples.imag)) / np.var(trace.samples)
        return abs(i.mean() - 1.0) < 0.1 and circ < 0.1, f"<I>={i.mean():.3f}, circ dev {circ:.3f}"

    def trace_g1_fwhm():
        trace = synthesize_thermal_field(spectrum, 2000 * spectrum.coherence_fwhm_fs,
                                         spectrum.coherence_fwhm_fs / 10, seed=11)
        g1 = empirical_g1(trace, 60)
        lags = np.arange(60) * trace.dt_fs
        w = fwhm_of_curve(np.concatenate([-lags[::-1], lags]), np.concatenate([g1[::-1], g1]))
        rel = abs(w - spectrum.coherence_fwhm_fs) / spectrum.coherence_fwhm_fs
        return rel < 0.1, f"empirical |g1| FWHM {w / PS:.2f} ps"

    def tag_round_trip():
        ticks = np.sort(np.array([5, 17, 17, 400], dtype=np.uint64))
        tags = TagStream(resolution_fs=82200, duration_ticks=1000,
                         channels=np.array([0, 0, 1, 1], dtype=np.uint8), ticks=ticks)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "t.bin")
            tagfile.write_tags(tags, path)
            back = tagfile.read_tags(path)
        ok = (
            np.array_equal(back.ticks, tags.ticks)
            and np.array_equal(back.channels, tags.channels)
            and back.resolution_fs == tags.resolution_fs
        )
        return ok, "bit-exact round trip"

    def correlator_single_pair():
        mk = lambda t, ch: TagStream(resolution_fs=1000, duration_ticks=10**6,
                                     channels=np.full(len(t), ch, np.uint8),
                                     ticks=np.array(t, dtype=np.uint64))
        hist = correlate.cross_correlate(mk([1000], 0), mk([1500], 1), 100 * PS, 10 * NS)
        idx = np.flatnonzero(hist.counts)
        ok = len(idx) == 1 and hist.delays_fs()[idx[0]] == 500 * PS and hist.counts[idx[0]] == 1
        return ok, "single pair lands in the +500 ps bin"

    def delay_inverse():
        s = PhotonStream(arrivals=np.array([10, 500, 900], dtype=np.int64), duration_fs=1000)
        back = delay_stream(delay_stream(s, 500 * NS), -500 * NS)
        return np.array_equal(back.arrivals, s.arrivals), "delay +500 ns then -500 ns"

    def prediction_height():
        delays = (np.arange(201) - 100) * 82.2 * PS
        shape = np.exp(-4 * math.log(2.0) * (delays / (640 * PS)) ** 2)
        jitter = bunching.JitterCurve(delays_fs=delays, values=shape, area_fs=611 * PS)
        pred = bunching.predict_smeared_peak(jitter, 2.17 * PS)
        return abs(pred.peak_height - 3.55e-3) < 1e-4, f"height {pred.peak_height:.4g}"

    def jitter_gaussian_area():
        delays = (np.arange(4001) - 2000) * PS
        shape = np.exp(-4 * math.log(2.0) * (delays / (640 * PS)) ** 2)
        area = shape.sum() * PS
        expected = 640 * PS * math.sqrt(math.pi / (4 * math.log(2.0)))
        return abs(area - expected) / expected < 1e-3, f"area {area / PS:.1f} ps"

    def deadtime_tick_gap():
        det = DetectorConfig(quantum_efficiency=1.0, dark_rate_hz=0.0,
                             jitter=GaussianJitter(0.0), dead_time_fs=50 * NS,
                             saturation_rate_hz=2e6, tag_resolution_fs=82200)
        return math.floor(det.dead_time_fs / det.tag_resolution_fs) == 608, "floor(50 ns / 82.2 ps) = 608"

    return [
        ("analytic-g1-fwhm-definition", fwhm_definition),
        ("siegert-limits", siegert_limits),
        ("thermal-pn-values", thermal_pn_values),
        ("fock-thermal-identity", fock_thermal_identity),
        ("polarization-payload", polarization_payload),
        ("trace-statistics", trace_statistics),
        ("trace-g1-fwhm", trace_g1_fwhm),
        ("tag-file-round-trip", tag_round_trip),
        ("correlator-single-pair", correlator_single_pair),
        ("delay-inverse", delay_inverse),
        ("prediction-reference-height", prediction_height),
        ("jitter-gaussian-area", jitter_gaussian_area),
        ("deadtime-quantized-gap", deadtime_tick_gap),
    ]


def selftest(verbose: bool = True):
    """Run all checks; returns list of (name, ok, detail)."""
    results = []
    for name, fn in _checks():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return results
