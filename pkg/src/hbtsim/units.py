"""Time/length unit conventions.

All times inside the package are femtoseconds (photon arrivals as signed
64-bit integers, analytic quantities as floats).  Rates are events per
second at the API surface and converted once on entry.
"""

FS = 1.0
PS = 1.0e3
NS = 1.0e6
US = 1.0e9
MS = 1.0e12
S = 1.0e15

# speed of light: 299792458 m/s = 2.99792458e-4 mm/fs
C_MM_PER_FS = 2.99792458e-4

INT64_MAX = 2**63 - 1


def hz_to_per_fs(rate_hz: float) -> float:
    return rate_hz / S
