"""Time units and conversions.

All times in this package are signed integer picoseconds (Python int), so
arithmetic on time points and durations is exact.  Floats appear only at
the edges: noise draws, correlation math and human-readable output.
"""

from __future__ import annotations

from fractions import Fraction

# Durations in picoseconds.
PS = 1
NS = 1_000
US = 1_000_000
MS = 1_000_000_000
SEC = 1_000_000_000_000

FRAME = 10 * MS          # radio frame duration
SFN_PERIOD = 1024        # system frame numbers cycle 0..1023
SFN_CYCLE = SFN_PERIOD * FRAME   # 10.24 s

SPEED_OF_LIGHT = 299_792_458.0   # m/s


def to_seconds(ps: int) -> float:
    return ps / SEC


def from_seconds(s: float) -> int:
    return round(s * SEC)


def from_ns(ns: float) -> int:
    return round(ns * NS)


def to_ns(ps: int) -> float:
    return ps / NS


def round_div(num: int, den: int) -> int:
    """Round num/den to the nearest integer, ties away from zero.

    Exact for arbitrary magnitude, unlike float division.
    """
    if den < 0:
        num, den = -num, -den
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((-2 * num + den) // (2 * den))


def round_frac(value: Fraction) -> int:
    """Round an exact rational to the nearest integer, ties away from zero."""
    return round_div(value.numerator, value.denominator)


def distance_to_delay(distance_m: float) -> int:
    """One-way free-space propagation delay in picoseconds."""
    return round(distance_m / SPEED_OF_LIGHT * SEC)
