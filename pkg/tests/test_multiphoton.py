import math
from fractions import Fraction

import numpy as np
import pytest

from hbtsim.field import ThermalDistribution, thermal_pn
from hbtsim.multiphoton import (
    FourPhotonState,
    adaptive_n_max,
    fock_amplitudes,
    marginal_distribution,
    multiphoton_report,
    same_polarization_probability,
    sister_state,
    twin_state,
)


def test_zero_pump_is_vacuum():
    exp = fock_amplitudes(0.0, 10)
    probs = exp.probabilities()
    assert probs[0] == 1.0 and probs[1:].sum() == 0.0
    assert adaptive_n_max(0.0) == 0


def test_normalization_converges():
    exp = fock_amplitudes(0.5, 40)
    assert abs(exp.norm_deficit()) < 1e-9
    with pytest.raises(ValueError):
        fock_amplitudes(0.5, -1)


def test_small_eta_expansion():
    # c_n ~ eta^n to leading order: P_1/P_0 -> |eta|^2
    eta = 1e-4
    probs = fock_amplitudes(eta, 3).probabilities()
    assert probs[1] / probs[0] == pytest.approx(eta**2, rel=1e-6)
    assert probs[2] / probs[0] == pytest.approx(eta**4, rel=1e-6)


@pytest.mark.parametrize("mag", [0.1, 0.5, 1.0])
def test_marginal_matches_thermal_distribution(mag):
    eta = mag * complex(math.cos(0.7), math.sin(0.7))
    probs, dist = marginal_distribution(eta, 20)
    assert dist.nu == pytest.approx(math.sinh(mag) ** 2, rel=1e-12)
    for n in range(21):
        assert probs[n] == pytest.approx(thermal_pn(dist, n), abs=1e-12)


def test_unit_mean_occupancy_point():
    # sinh^2|eta| = 1 at |eta| = arcsinh(1) ~ 0.8814: P_0 = 1/2, P_1 = 1/4
    mag = math.asinh(1.0)
    assert mag == pytest.approx(0.8814, abs=1e-4)
    probs, dist = marginal_distribution(mag, 20)
    assert dist.nu == pytest.approx(1.0, rel=1e-12)
    assert probs[0] == pytest.approx(0.5, rel=1e-12)
    assert probs[1] == pytest.approx(0.25, rel=1e-12)


def test_thermal_moments_from_fock_probs():
    # <n> = nu and <n(n-1)> = 2 nu^2 for the thermal marginal
    mag = 0.6
    n_max = adaptive_n_max(mag, tail=1e-15)
    probs, dist = marginal_distribution(mag, n_max)
    n = np.arange(n_max + 1)
    assert float((n * probs).sum()) == pytest.approx(dist.nu, rel=1e-9)
    assert float((n * (n - 1) * probs).sum()) == pytest.approx(2 * dist.nu**2, rel=1e-9)


def test_adaptive_n_max_tail_bound():
    for mag in (0.2, 0.8, 1.5):
        n_max = adaptive_n_max(mag, tail=1e-12)
        r = math.tanh(mag) ** 2
        assert r ** (n_max + 1) <= 1e-12 < r**n_max


def test_phase_moves_to_amplitudes_not_probs():
    p1 = fock_amplitudes(0.5, 15).probabilities()
    p2 = fock_amplitudes(0.5j, 15).probabilities()
    assert np.allclose(p1, p2, atol=1e-15)
    amps = fock_amplitudes(0.5j, 3).amplitudes
    assert amps[1].real == pytest.approx(0.0, abs=1e-15)


def test_twin_and_sister_probabilities_exact():
    assert same_polarization_probability(twin_state()) == Fraction(2, 3)
    assert same_polarization_probability(sister_state()) == Fraction(1, 2)
    assert twin_state().is_normalized() and sister_state().is_normalized()


def test_unnormalized_state_rejected():
    bad = FourPhotonState(signs=(1, 1, -1),
                          probs=(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(ValueError):
        same_polarization_probability(bad)


def test_report_contents():
    text = multiphoton_report(complex(math.asinh(1.0)))
    assert "nu (mean photons" in text
    assert "P(same polarization | twin)   = 2/3" in text
    assert "P(same polarization | sister) = 1/2" in text
    assert "P_0 = 0.5" in text
