import math

import numpy as np
import pytest

from hbtsim.correlate import cross_correlate
from hbtsim.detector import (
    DetectorConfig,
    EmpiricalJitter,
    GaussianJitter,
    TagStream,
    autocorrelation_deadtime_check,
    detect,
    merge_tag_streams,
)
from hbtsim.field import PhotonStream, fwhm_of_curve, sample_poisson_arrivals
from hbtsim.optics import simulate_pair_source
from hbtsim.units import NS, PS, S


def _det(**kw):
    base = dict(
        quantum_efficiency=1.0, dark_rate_hz=0.0, jitter=GaussianJitter(0.0),
        dead_time_fs=0.0, saturation_rate_hz=1e12, tag_resolution_fs=82200,
    )
    base.update(kw)
    return DetectorConfig(**base)


EMPTY = PhotonStream(arrivals=np.empty(0, dtype=np.int64), duration_fs=int(10 * S))


def test_dark_counts_only():
    tags = detect(EMPTY, _det(dark_rate_hz=500.0), 10 * S, seed=1)
    assert abs(len(tags) - 5000) < 3 * math.sqrt(5000)


def test_deadtime_min_tick_gap():
    stream = sample_poisson_arrivals(5.0e5, 1.0 * S, seed=2)
    tags = detect(stream, _det(dead_time_fs=50 * NS), 1.0 * S, seed=3)
    gap = int(50 * NS // 82200)
    assert gap == 608
    assert np.diff(tags.ticks.astype(np.int64)).min() >= gap


def test_ideal_config_identity():
    stream = sample_poisson_arrivals(1.0e6, 0.001 * S, seed=4)
    tags = detect(stream, _det(tag_resolution_fs=1), 0.001 * S, seed=5)
    assert np.array_equal(tags.ticks.astype(np.int64), stream.arrivals)


def test_efficiency_thinning():
    stream = sample_poisson_arrivals(1.0e6, 1.0 * S, seed=6)
    tags = detect(stream, _det(quantum_efficiency=0.5), 1.0 * S, seed=7)
    assert abs(len(tags) - 0.5 * len(stream)) < 5 * math.sqrt(0.25 * len(stream))


def test_out_of_range_drops_counted():
    arr = np.arange(100, dtype=np.int64) * 1000 + 500
    stream = PhotonStream(arrivals=arr, duration_fs=100000)
    tags = detect(stream, _det(jitter=GaussianJitter(fwhm_fs=1.0e6), tag_resolution_fs=100),
                  100000, seed=8)
    d = tags.diagnostics
    assert d.dropped_out_of_range > 0
    assert len(tags) + d.dropped_out_of_range == len(stream)


def test_saturation_flag():
    stream = sample_poisson_arrivals(2.0e6, 0.01 * S, seed=9)
    assert detect(stream, _det(saturation_rate_hz=1.0e6), 0.01 * S, seed=10).diagnostics.saturated
    assert not detect(stream, _det(saturation_rate_hz=3.0e6), 0.01 * S, seed=10).diagnostics.saturated


def test_nonparalyzable_rate_formula():
    # output rate = r / (1 + r * dead) for Poisson input
    r, dead = 5.0e5, 1000 * NS
    stream = sample_poisson_arrivals(r, 4.0 * S, seed=11)
    tags = detect(stream, _det(dead_time_fs=dead), 4.0 * S, seed=12)
    expected = r / (1.0 + r * dead / S)
    assert tags.diagnostics.post_deadtime_rate_hz == pytest.approx(expected, rel=0.02)


def test_jitter_combines_in_quadrature():
    # per-detector Gaussian jitter f gives a cross-correlation of FWHM f*sqrt(2)
    f = 1000 * PS
    a, b = simulate_pair_source(1.0e5, 0.0, 5.0 * S, seed=13)
    ta = detect(a, _det(jitter=GaussianJitter(f)), 5.0 * S, seed=14, channel=0)
    tb = detect(b, _det(jitter=GaussianJitter(f)), 5.0 * S, seed=15, channel=1)
    hist = cross_correlate(ta, tb, 82.2 * PS, 10 * NS)
    fwhm = fwhm_of_curve(hist.delays_fs(), hist.counts.astype(float))
    assert fwhm == pytest.approx(f * math.sqrt(2.0), rel=0.05)


def test_deadtime_autocorrelation_check():
    stream = sample_poisson_arrivals(2.0e5, 1.0 * S, seed=16)
    dead = 50 * NS
    tags = detect(stream, _det(dead_time_fs=dead), 1.0 * S, seed=17)
    hist = autocorrelation_deadtime_check(tags, 500 * NS)
    below = hist.edges_fs()[1:] <= dead
    assert hist.counts[below].sum() == 0
    assert hist.counts[~below].sum() > 0


def test_interarrival_mean_without_deadtime():
    rate = 2.0e5
    stream = sample_poisson_arrivals(rate, 2.0 * S, seed=18)
    tags = detect(stream, _det(), 2.0 * S, seed=19)
    gaps = np.diff(tags.ticks.astype(np.int64)) * tags.resolution_fs
    assert gaps.mean() == pytest.approx(S / rate, rel=0.02)


def test_interarrival_check_edge_cases():
    empty = TagStream(resolution_fs=82200, duration_ticks=100,
                      channels=np.empty(0, np.uint8), ticks=np.empty(0, np.uint64))
    assert autocorrelation_deadtime_check(empty, 82200 * 10).counts.sum() == 0
    two_chan = TagStream(resolution_fs=82200, duration_ticks=100,
                         channels=np.array([0, 1], np.uint8),
                         ticks=np.array([1, 2], np.uint64))
    with pytest.raises(ValueError):
        autocorrelation_deadtime_check(two_chan, 82200 * 10)


def test_empirical_jitter():
    with pytest.raises(ValueError):
        EmpiricalJitter(offsets_fs=(0.0, 1.0), weights=(1.0,))
    with pytest.raises(ValueError):
        EmpiricalJitter(offsets_fs=(0.0, 1.0), weights=(-1.0, 2.0))
    jit = EmpiricalJitter(offsets_fs=(-100.0, 0.0, 100.0), weights=(1.0, 2.0, 1.0))
    samples = jit.sample(np.random.default_rng(0), 100000)
    assert abs(samples.mean()) < 2.0
    assert np.std(samples) == pytest.approx(math.sqrt(0.5 * 100.0**2 + 100.0**2 / 12), rel=0.05)


def test_tagstream_validation_and_merge():
    with pytest.raises(ValueError):
        TagStream(resolution_fs=82200, duration_ticks=10,
                  channels=np.array([0, 0], np.uint8), ticks=np.array([5, 3], np.uint64))
    with pytest.raises(ValueError):
        TagStream(resolution_fs=82200, duration_ticks=10,
                  channels=np.array([0], np.uint8), ticks=np.array([10], np.uint64))
    a = TagStream(resolution_fs=10, duration_ticks=100,
                  channels=np.zeros(3, np.uint8), ticks=np.array([1, 5, 9], np.uint64))
    b = TagStream(resolution_fs=10, duration_ticks=100,
                  channels=np.ones(2, np.uint8), ticks=np.array([5, 7], np.uint64))
    m = merge_tag_streams([a, b])
    assert np.array_equal(m.ticks, [1, 5, 5, 7, 9])
    assert np.array_equal(m.channels, [0, 0, 1, 1, 0])
    assert np.array_equal(m.select_channel(1).ticks, b.ticks)


def test_detection_determinism():
    stream = sample_poisson_arrivals(1.0e5, 1.0 * S, seed=20)
    det = _det(quantum_efficiency=0.5, dark_rate_hz=100.0,
               jitter=GaussianJitter(640 * PS), dead_time_fs=50 * NS)
    t1 = detect(stream, det, 1.0 * S, seed=21)
    t2 = detect(stream, det, 1.0 * S, seed=21)
    assert np.array_equal(t1.ticks, t2.ticks)
