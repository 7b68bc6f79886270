"""Air-interface model: numerology, reference signals, channel, delay estimation.

Signals are complex baseband sample vectors at rate 1/Ts; there is no OFDM
modulation chain.  Delay estimation accuracy lives on the sample/Tc grid,
which this abstraction preserves.  Channel path delays are quantized to the
sample interval, which is exactly the receiver's sampling ambiguity.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._kernels import gold_bits, xcorr_mag
from .errors import NoDetection, ParamError, RangeError
from .units import round_div, round_frac

# 5G minimum time unit 1/(480 kHz * 4096), exact picoseconds.
TC_PS = Fraction(10**12, 480_000 * 4096)

# Earliest-peak window: peaks within 3 dB (factor sqrt(2) in magnitude) of
# the maximum are first-arrival candidates.
_FIRST_ARRIVAL_WINDOW = math.sqrt(2.0)

# Correlation peak must exceed this multiple of the median magnitude,
# otherwise the reference is declared undetected.
_PEAK_DETECTION_FACTOR = 6.0


class Method(enum.Enum):
    TA = "TA"
    SRS = "SRS"
    PRS = "PRS"


@dataclass(frozen=True)
class Numerology:
    """Sampling grid constants for one subcarrier-spacing configuration.

    For mu=1 (30 kHz SCS, 4096-point FFT) the sample interval is
    Ts = 390625/48 ps (~8.14 ns, 16 Tc) and the cyclic prefix is
    2343750 ps (~2.34 us).
    """

    mu: int = 1
    scs: float = 30_000.0
    n_fft: int = 4096

    def __post_init__(self):
        if self.ts_frac % TC_PS != 0:
            raise ParamError("sample interval must be an integer multiple of Tc")

    @property
    def ts_frac(self) -> Fraction:
        return Fraction(10**12, round(self.scs) * self.n_fft)

    @property
    def ts(self) -> float:
        """Sample interval in ps (float view of the exact grid)."""
        return float(self.ts_frac)

    @property
    def tc(self) -> float:
        return float(TC_PS)

    @property
    def ts_per_tc(self) -> int:
        return int(self.ts_frac / TC_PS)

    @property
    def cp(self) -> int:
        """Normal cyclic prefix in ps (144/2048 of the FFT span)."""
        return round_frac(self.ts_frac * self.n_fft * Fraction(144, 2048))

    def ps_to_samples(self, ps: int) -> int:
        """Nearest sample index for a delay in ps (sampling ambiguity)."""
        f = self.ts_frac
        return round_div(ps * f.denominator, f.numerator)

    def samples_to_ps(self, samples: int) -> int:
        f = self.ts_frac
        return round_div(samples * f.numerator, f.denominator)

    def tc_units_to_ps(self, units: int) -> int:
        return round_div(units * TC_PS.numerator, TC_PS.denominator)

    def ps_to_tc_units(self, ps: int) -> int:
        return round_div(ps * TC_PS.denominator, TC_PS.numerator)

    def ta_step_ps(self) -> Fraction:
        """Timing-advance grid: 16 Ts, exact."""
        return 16 * self.ts_frac


DEFAULT_NUMEROLOGY = Numerology()


@dataclass(frozen=True)
class ChannelRealization:
    """Static multipath + AWGN.

    paths are (delay_ps, linear amplitude), ascending in delay, first path
    is the line of sight.  snr_db None means noiseless.  Doppler is out of
    scope and must stay zero.
    """

    paths: tuple[tuple[int, float], ...] = ((0, 1.0),)
    snr_db: float | None = None
    doppler: float = 0.0

    def __post_init__(self):
        if self.doppler != 0.0:
            raise ParamError("doppler modeling is out of scope; must be zero")
        if not self.paths:
            raise ParamError("channel needs at least one path")
        delays = [d for d, _ in self.paths]
        if delays != sorted(delays):
            raise ParamError("path delays must be ascending")
        if not any(g > 0 for _, g in self.paths):
            raise ParamError("channel needs at least one path with positive gain")


@dataclass(frozen=True)
class DelayEstimate:
    method: Method
    value: int        # one-way delay, ps
    resolution: int   # grid step, ps (16 Ts for TA, Tc for SRS/PRS)


def gen_zc(u: int, n_len: int) -> np.ndarray:
    """Zadoff-Chu root sequence exp(-j*pi*u*n*(n+1)/N), unit modulus.

    Prime n_len gives the ideal flat cyclic autocorrelation; u must be a
    nonzero unit modulo n_len.
    """
    if not 0 < u < n_len:
        raise ParamError("root index must satisfy 0 < u < n_len")
    if math.gcd(u, n_len) != 1:
        raise ParamError("root index must be coprime with the sequence length")
    n = np.arange(n_len, dtype=np.float64)
    return np.exp(-1j * np.pi * u * n * (n + 1.0) / n_len)


def gen_prs(c_init: int, n_len: int) -> np.ndarray:
    """QPSK-modulated length-31 Gold sequence, |S(m)| = 1 for all m."""
    if n_len < 1:
        raise ParamError("n_len must be >= 1")
    c = gold_bits(c_init & ((1 << 31) - 1), 2 * n_len).astype(np.float64)
    re = (1.0 - 2.0 * c[0::2]) / math.sqrt(2.0)
    im = (1.0 - 2.0 * c[1::2]) / math.sqrt(2.0)
    return re + 1j * im


def apply_channel(
    signal: np.ndarray,
    channel: ChannelRealization,
    true_delay: int,
    seed: int,
    numerology: Numerology = DEFAULT_NUMEROLOGY,
) -> np.ndarray:
    """Propagate through the multipath channel with a given one-way delay.

    Each path contributes gain * signal shifted by (true_delay + path delay)
    quantized to the sample grid; complex white noise is added to meet
    snr_db.  Deterministic per seed.
    """
    if len(signal) == 0:
        raise ParamError("signal must be non-empty")
    shifts = [numerology.ps_to_samples(true_delay + d) for d, _ in channel.paths]
    if min(shifts) < 0:
        raise ParamError("negative total path delay")
    out_len = len(signal) + max(shifts)
    out = np.zeros(out_len, dtype=np.complex128)
    for shift, (_, gain) in zip(shifts, channel.paths):
        out[shift:shift + len(signal)] += gain * signal
    if channel.snr_db is not None and math.isfinite(channel.snr_db):
        rng = np.random.default_rng(seed)
        sig_power = float(np.mean(np.abs(out) ** 2))
        noise_power = sig_power / 10.0 ** (channel.snr_db / 10.0)
        sigma = math.sqrt(noise_power / 2.0)
        out = out + rng.normal(0.0, sigma, out_len) + 1j * rng.normal(0.0, sigma, out_len)
    return out


def _first_arrival_peak(mags: np.ndarray) -> int:
    """Earliest local maximum within 3 dB of the global maximum."""
    peak = float(mags.max())
    floor = peak / _FIRST_ARRIVAL_WINDOW
    for i in range(len(mags)):
        left = mags[i - 1] if i > 0 else -1.0
        right = mags[i + 1] if i < len(mags) - 1 else -1.0
        if mags[i] >= floor and mags[i] >= left and mags[i] >= right:
            return i
    return int(mags.argmax())


def _parabolic_offset(mags: np.ndarray, i: int) -> float:
    if i <= 0 or i >= len(mags) - 1:
        return 0.0
    a, b, c = float(mags[i - 1]), float(mags[i]), float(mags[i + 1])
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return 0.0
    delta = 0.5 * (a - c) / denom
    return min(0.5, max(-0.5, delta))


def estimate_delay(
    received: np.ndarray,
    reference: np.ndarray,
    numerology: Numerology = DEFAULT_NUMEROLOGY,
    method: Method = Method.SRS,
) -> DelayEstimate:
    """Correlation-based first-arrival delay estimate on the Tc grid.

    Cross-correlates the received vector with the transmitted reference,
    picks the earliest peak within 3 dB of the maximum (line-of-sight
    tracking rather than strongest path), refines it by parabolic
    interpolation of the peak and its neighbors, rounds to Tc and clamps to
    [0, CP].  Raises NoDetection when the peak does not rise above the
    correlation floor.
    """
    if method is Method.TA:
        raise ParamError("TA estimates come from quantize_ta, not correlation")
    if len(received) < len(reference):
        raise NoDetection("received vector shorter than the reference")
    mags = xcorr_mag(
        np.ascontiguousarray(received, dtype=np.complex128),
        np.ascontiguousarray(reference, dtype=np.complex128),
    )
    peak = float(mags.max())
    if peak <= 0.0:
        raise NoDetection("correlation profile is empty")
    # the median approximates the correlation floor; it needs a profile
    # long enough that the main lobe does not dominate it
    if len(mags) >= 16 and peak < _PEAK_DETECTION_FACTOR * float(np.median(mags)):
        raise NoDetection("correlation peak below detection threshold")
    i = _first_arrival_peak(mags)
    lag = i + _parabolic_offset(mags, i)
    units = round(lag * numerology.ts_per_tc)
    value = numerology.tc_units_to_ps(units)
    value = min(max(value, 0), numerology.cp)
    return DelayEstimate(method=method, value=value, resolution=numerology.tc_units_to_ps(1))


def quantize_ta(
    round_trip: int, numerology: Numerology = DEFAULT_NUMEROLOGY
) -> DelayEstimate:
    """Timing-advance quantization: TA = round(rt / 16Ts) * 16Ts, one way TA/2.

    The returned one-way estimate sits on the 8 Ts half-grid; the error of
    2*estimate against the true round trip is bounded by 8 Ts.
    """
    if not 0 <= round_trip <= 2 * numerology.cp:
        raise RangeError("round trip outside [0, 2*CP]")
    step = numerology.ta_step_ps()
    k = round_div(round_trip * step.denominator, step.numerator)
    value = round_frac(Fraction(k, 2) * step)
    return DelayEstimate(method=Method.TA, value=value, resolution=round_frac(step))


def dump_correlation_csv(path, received, reference,
                         numerology: Numerology = DEFAULT_NUMEROLOGY) -> None:
    """Debug export of the correlation profile as (lag_tc, magnitude) rows."""
    mags = xcorr_mag(
        np.ascontiguousarray(received, dtype=np.complex128),
        np.ascontiguousarray(reference, dtype=np.complex128),
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag_tc", "magnitude"])
        for i, m in enumerate(mags):
            writer.writerow([i * numerology.ts_per_tc, repr(float(m))])
