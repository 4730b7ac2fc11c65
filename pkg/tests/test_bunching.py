import math

import numpy as np
import pytest

from hbtsim.bunching import (
    EnvelopeCurve,
    JitterCurve,
    extract_envelope,
    normalize_jitter,
    predict_smeared_peak,
    squared_envelope_area_fs,
)
from hbtsim.correlate import CorrelationHistogram
from hbtsim.field import SpectrumModel, SpectrumShape, fwhm_of_curve, g1_squared_area_fs
from hbtsim.optics import Interferogram, ScanConfig, michelson_expected_rate_hz, michelson_scan
from hbtsim.units import PS

LN2 = math.log(2.0)


def _noiseless_interferogram(spectrum, scan):
    step = scan.mirror_speed_mm_s * scan.window_s
    n = int(round(scan.scan_range_mm / step))
    x = (np.arange(n) - (n - 1) / 2.0) * step
    counts = michelson_expected_rate_hz(spectrum, scan, x) * scan.window_s
    return Interferogram(positions_mm=x, counts=counts, window_s=scan.window_s,
                         wavelength_nm=spectrum.center_wavelength_nm)


def _scan(**kw):
    base = dict(mirror_speed_mm_s=0.002, scan_range_mm=3.0, window_s=2e-3,
                base_rate_hz=2.0e5, background_rate_hz=5.0e3, max_visibility=0.9)
    base.update(kw)
    return ScanConfig(**base)


def test_pure_sinusoid_envelope():
    # huge coherence time: |g1| is 1 over the whole scan, so the envelope is
    # flat and the raw visibility equals max_visibility
    spec = SpectrumModel(SpectrumShape.GAUSSIAN, coherence_fwhm_fs=1e12)
    ifg = _noiseless_interferogram(spec, _scan(background_rate_hz=0.0, scan_range_mm=0.04))
    env = extract_envelope(ifg, 0.0)
    assert env.vmax_raw == pytest.approx(0.9, abs=0.01)
    assert np.all(np.abs(env.values - 1.0) < 0.02)


def test_constant_intensity_is_an_error():
    x = np.linspace(-0.1, 0.1, 5000)
    ifg = Interferogram(positions_mm=x, counts=np.full(len(x), 400.0),
                        window_s=2e-3, wavelength_nm=810.0)
    with pytest.raises(ValueError):
        extract_envelope(ifg, 0.0)


def test_envelope_closed_loop_noiseless():
    spec = SpectrumModel(SpectrumShape.GAUSSIAN, coherence_fwhm_fs=2.8 * PS)
    ifg = _noiseless_interferogram(spec, _scan())
    env = extract_envelope(ifg, 5.0e3)
    assert fwhm_of_curve(env.delays_fs, env.values) == pytest.approx(2.8 * PS, rel=0.05)
    assert squared_envelope_area_fs(env) == pytest.approx(g1_squared_area_fs(spec), rel=0.05)


def test_envelope_closed_loop_poisson_noise():
    spec = SpectrumModel(SpectrumShape.GAUSSIAN, coherence_fwhm_fs=2.8 * PS)
    ifg = michelson_scan(spec, _scan(scan_range_mm=1.0), seed=4)
    env = extract_envelope(ifg, 5.0e3)
    assert fwhm_of_curve(env.delays_fs, env.values) == pytest.approx(2.8 * PS, rel=0.10)


def test_background_clipping_warns():
    x = np.linspace(-0.01, 0.01, 3000)
    counts = 100.0 * (1 + 0.9 * np.cos(4 * np.pi * x / 810e-6))
    ifg = Interferogram(positions_mm=x, counts=counts, window_s=2e-3, wavelength_nm=810.0)
    with pytest.warns(UserWarning):
        extract_envelope(ifg, background_rate_hz=40.0 / 2e-3)


def test_squared_area_shapes():
    delays = np.linspace(-20 * PS, 20 * PS, 8001)
    gauss = np.exp(-4 * LN2 * (delays / (2.8 * PS)) ** 2)
    env = EnvelopeCurve(delays_fs=delays, values=gauss, vmax_raw=0.9)
    assert squared_envelope_area_fs(env) / PS == pytest.approx(2.107, abs=0.02)
    rect = EnvelopeCurve(delays_fs=delays, values=(np.abs(delays) <= 5 * PS).astype(float),
                         vmax_raw=1.0)
    assert squared_envelope_area_fs(rect) == pytest.approx(10 * PS, rel=0.01)
    with pytest.raises(ValueError):
        squared_envelope_area_fs(EnvelopeCurve(delays_fs=delays[:2], values=gauss[:2],
                                               vmax_raw=1.0))


def _hist_from_profile(values, bin_fs=82.2 * PS):
    n = len(values)
    return CorrelationHistogram(bin_width_fs=bin_fs, max_lag_fs=(n // 2 + 0.5) * bin_fs,
                                counts=np.round(values).astype(np.int64),
                                total_time_fs=1e15, rate_a_hz=1e5, rate_b_hz=1e5)


def test_normalize_jitter_gaussian_area():
    bin_fs = 82.2 * PS
    delays = (np.arange(2001) - 1000) * bin_fs
    profile = 1e6 * np.exp(-4 * LN2 * (delays / (640 * PS)) ** 2) + 500.0
    jitter = normalize_jitter(_hist_from_profile(profile))
    assert jitter.values.max() == 1.0
    expected = 640 * PS * math.sqrt(math.pi / (4 * LN2))
    assert jitter.area_fs == pytest.approx(expected, rel=0.01)
    assert jitter.area_fs / PS == pytest.approx(681, abs=8)


def test_normalize_jitter_rectangle():
    bin_fs = 10 * PS
    values = np.zeros(501)
    values[245:255] = 1e6  # 10 bins of 10 ps
    jitter = normalize_jitter(_hist_from_profile(values, bin_fs))
    assert jitter.area_fs == pytest.approx(100 * PS, rel=1e-6)


def test_normalize_jitter_no_peak():
    with pytest.raises(ValueError):
        normalize_jitter(_hist_from_profile(np.full(501, 1000.0)))


def _gaussian_jitter_curve(fwhm_fs=640 * PS, bin_fs=82.2 * PS, n_side=100, area=None):
    delays = (np.arange(2 * n_side + 1) - n_side) * bin_fs
    values = np.exp(-4 * LN2 * (delays / fwhm_fs) ** 2)
    if area is None:
        area = float(values.sum() * bin_fs)
    return JitterCurve(delays_fs=delays, values=values, area_fs=area)


def test_predicted_height_reference_numbers():
    jitter = _gaussian_jitter_curve(area=611 * PS)
    pred = predict_smeared_peak(jitter, 2.17 * PS)
    assert pred.peak_height == pytest.approx(3.55e-3, abs=1e-5)


def test_predicted_height_unity_when_areas_match():
    jitter = _gaussian_jitter_curve()
    pred = predict_smeared_peak(jitter, jitter.area_fs)
    assert pred.peak_height == 1.0


def test_predicted_height_desk_scale():
    # tc = 50 ps Gaussian vs 200 ps FWHM Gaussian jitter
    g1sq = g1_squared_area_fs(SpectrumModel(SpectrumShape.GAUSSIAN, coherence_fwhm_fs=50 * PS))
    jitter_area = 200 * PS * math.sqrt(math.pi / (4 * LN2))
    jitter = _gaussian_jitter_curve(fwhm_fs=200 * PS, bin_fs=10 * PS, area=jitter_area)
    pred = predict_smeared_peak(jitter, g1sq)
    assert pred.peak_height == pytest.approx(0.177, abs=0.001)


def test_prediction_conserves_area():
    jitter = _gaussian_jitter_curve()
    for g1sq in (2.17 * PS, 37.6 * PS):
        pred = predict_smeared_peak(jitter, g1sq)
        discrete = pred.excess.sum() * 82.2 * PS
        assert discrete / (g1sq / jitter.area_fs * jitter.values.sum() * 82.2 * PS) == \
            pytest.approx(1.0, rel=1e-12)
        assert pred.area_fs == pytest.approx(discrete, rel=1e-12)


def test_prediction_is_shape_agnostic():
    # same shape and area at a different raw scale gives the identical curve
    j1 = _gaussian_jitter_curve()
    j2 = JitterCurve(delays_fs=j1.delays_fs.copy(), values=j1.values.copy(),
                     area_fs=j1.area_fs)
    p1 = predict_smeared_peak(j1, 2.17 * PS)
    p2 = predict_smeared_peak(j2, 2.17 * PS)
    assert np.array_equal(p1.excess, p2.excess)


def test_prediction_shift_and_warnings():
    jitter = _gaussian_jitter_curve()
    shifted = predict_smeared_peak(jitter, 2.17 * PS, shift_fs=40 * PS)
    center = len(shifted.excess) // 2
    assert shifted.delays_fs[np.argmax(shifted.excess)] >= jitter.delays_fs[center]
    with pytest.warns(UserWarning):
        predict_smeared_peak(jitter, 2.17 * PS, shift_fs=200 * PS)
    with pytest.raises(ValueError):
        predict_smeared_peak(jitter, -1.0)
    with pytest.raises(ValueError):
        JitterCurve(delays_fs=jitter.delays_fs, values=jitter.values, area_fs=0.0)
