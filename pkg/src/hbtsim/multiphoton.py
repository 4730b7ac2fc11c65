"""Exact amplitude-level computations for the two-mode SPDC state.

Fock expansion of the squeezed-vacuum pair state, its thermal marginal,
and the twin/sister four-photon polarization states whose same-polarization
probability is the QKD-relevant payload.  The polarization states use
exact rational arithmetic (amplitudes stored as signed squared moduli).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

from .field import ThermalDistribution, thermal_pn


@dataclass(frozen=True)
class FockExpansion:
    """Pair-number amplitudes c_n of the two-mode squeezed vacuum."""

    eta: complex
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_deficit(self) -> float:
        return 1.0 - float(self.probabilities().sum())


def adaptive_n_max(eta: complex, tail: float = 1e-12) -> int:
    """Smallest truncation whose geometric probability tail is below `tail`."""
    r = math.tanh(abs(eta)) ** 2
    if r == 0.0:
        return 0
    # remaining mass after n_max is r^(n_max+1)
    return max(0, math.ceil(math.log(tail) / math.log(r)) - 1)


def fock_amplitudes(eta: complex, n_max: int) -> FockExpansion:
    """c_n = sech|eta| * (eta/|eta| * tanh|eta|)^n; vacuum for eta = 0."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    eta = complex(eta)
    amps = np.zeros(n_max + 1, dtype=complex)
    mag = abs(eta)
    if mag == 0.0:
        amps[0] = 1.0
    else:
        ratio = eta / mag * math.tanh(mag)
        amps[:] = (1.0 / math.cosh(mag)) * ratio ** np.arange(n_max + 1)
    return FockExpansion(eta=eta, amplitudes=amps)


def marginal_distribution(eta: complex, n_max: int) -> Tuple[np.ndarray, ThermalDistribution]:
    """Photon-number distribution of one arm: P_n = |c_n|^2, thermal with
    mean sinh^2|eta|."""
    probs = fock_amplitudes(eta, n_max).probabilities()
    return probs, ThermalDistribution(nu=math.sinh(abs(eta)) ** 2)


# signal x idler polarization outcomes of the two-pair expansion
FOUR_PHOTON_BASIS = ("2H,2V", "2V,2H", "HV,VH")


@dataclass(frozen=True)
class FourPhotonState:
    """Two-pair polarization state; amplitude k is sign * sqrt(prob)."""

    signs: Tuple[int, int, int]
    probs: Tuple[Fraction, Fraction, Fraction]

    def is_normalized(self) -> bool:
        return sum(self.probs, Fraction(0)) == 1


def twin_state() -> FourPhotonState:
    """Both pairs in the same temporal mode: (|2H,2V> + |2V,2H> - |HV,VH>)/sqrt(3)."""
    third = Fraction(1, 3)
    return FourPhotonState(signs=(1, 1, -1), probs=(third, third, third))


def sister_state() -> FourPhotonState:
    """Pairs in distinguishable temporal modes:
    (|2H,2V> + |2V,2H> - sqrt(2)|HV,VH>)/2."""
    return FourPhotonState(
        signs=(1, 1, -1), probs=(Fraction(1, 4), Fraction(1, 4), Fraction(1, 2))
    )


def same_polarization_probability(state: FourPhotonState) -> Fraction:
    """Probability that the two signal photons share a polarization, exact.

    Brute force over the basis: the signal part is 2H, 2V or HV; the first
    two outcomes are 'same'.
    """
    if not state.is_normalized():
        raise ValueError("state is not normalized")
    total = Fraction(0)
    for label, prob in zip(FOUR_PHOTON_BASIS, state.probs):
        signal = label.split(",")[0]
        if signal in ("2H", "2V"):
            total += prob
    return total


def multiphoton_report(eta: complex) -> str:
    """Structured text report: eta, nu, P_0..P_5, twin/sister probabilities."""
    n_max = max(5, adaptive_n_max(eta))
    probs, dist = marginal_distribution(eta, n_max)
    lines = [
        f"eta = {eta.real:.6g}{eta.imag:+.6g}j  |eta| = {abs(eta):.6g}",
        f"nu (mean photons, sinh^2|eta|) = {dist.nu:.9g}",
    ]
    for n in range(6):
        ref = thermal_pn(dist, n)
        lines.append(f"P_{n} = {probs[n]:.9g}   (thermal: {ref:.9g})")
    lines.append(f"P(same polarization | twin)   = {same_polarization_probability(twin_state())}")
    lines.append(f"P(same polarization | sister) = {same_polarization_probability(sister_state())}")
    return "\n".join(lines)
