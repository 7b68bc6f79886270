"""Numeric hot kernels: correlation, pseudo-random bit generation, Allan sums.

Two interchangeable backends:

* loop kernels compiled with numba ``@njit`` (default), and
* pure-numpy vectorized fallbacks.

Selection is made once at import time.  Set ``TAPSIM_NUMBA=0`` in the
environment to force the numpy path (the numpy path is also used when numba
is not importable).  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_GOLD_NC = 1600  # fast-forward steps of the length-31 sequence pair
_GOLD_REG = 31


def _env_wants_numba() -> bool:
    return os.environ.get("TAPSIM_NUMBA", "1").strip().lower() not in (
        "0", "false", "off", "no",
    )


# ---------------------------------------------------------------------------
# Loop implementations (numba-compiled when enabled)
# ---------------------------------------------------------------------------

def _xcorr_mag_loop(received, reference):
    n_lag = received.shape[0] - reference.shape[0] + 1
    out = np.empty(n_lag, dtype=np.float64)
    for lag in range(n_lag):
        acc = 0.0 + 0.0j
        for k in range(reference.shape[0]):
            acc += received[lag + k] * np.conj(reference[k])
        out[lag] = abs(acc)
    return out


def _gold_bits_loop(c_init, n_bits):
    total = n_bits + _GOLD_NC + _GOLD_REG
    x1 = np.zeros(total, dtype=np.uint8)
    x2 = np.zeros(total, dtype=np.uint8)
    x1[0] = 1
    for i in range(_GOLD_REG):
        x2[i] = (c_init >> i) & 1
    for i in range(total - _GOLD_REG):
        x1[i + 31] = (x1[i + 3] + x1[i]) & 1
        x2[i + 31] = (x2[i + 3] + x2[i + 2] + x2[i + 1] + x2[i]) & 1
    out = np.empty(n_bits, dtype=np.uint8)
    for i in range(n_bits):
        out[i] = (x1[i + _GOLD_NC] + x2[i + _GOLD_NC]) & 1
    return out


def _allan_sumsq_loop(x, m):
    # x is int64 picoseconds: the second difference is exact, so a linear
    # ramp (constant frequency offset) cancels bit-exactly
    n = x.shape[0]
    count = n - 2 * m
    acc = 0.0
    for k in range(count):
        d = x[k + 2 * m] - 2 * x[k + m] + x[k]
        df = float(d)
        acc += df * df
    return acc


# ---------------------------------------------------------------------------
# Vectorized numpy fallbacks
# ---------------------------------------------------------------------------

def _xcorr_mag_numpy(received, reference):
    # 'valid' mode of correlate(received, reference) is exactly the sliding
    # conjugated dot product over non-negative lags.
    return np.abs(np.correlate(received, reference, mode="valid"))


def _gold_bits_numpy(c_init, n_bits):
    total = n_bits + _GOLD_NC + _GOLD_REG
    x1 = np.zeros(total, dtype=np.uint8)
    x2 = np.zeros(total, dtype=np.uint8)
    x1[0] = 1
    x2[:_GOLD_REG] = [(c_init >> i) & 1 for i in range(_GOLD_REG)]
    # the recurrences reference taps at most 28 steps back from the write
    # position, so blocks of 28 can be advanced at once
    i = 0
    while i < total - _GOLD_REG:
        blk = min(28, total - _GOLD_REG - i)
        x1[i + 31:i + 31 + blk] = x1[i + 3:i + 3 + blk] ^ x1[i:i + blk]
        x2[i + 31:i + 31 + blk] = (
            x2[i + 3:i + 3 + blk] ^ x2[i + 2:i + 2 + blk]
            ^ x2[i + 1:i + 1 + blk] ^ x2[i:i + blk]
        )
        i += blk
    return (x1[_GOLD_NC:_GOLD_NC + n_bits] ^ x2[_GOLD_NC:_GOLD_NC + n_bits]).astype(np.uint8)


def _allan_sumsq_numpy(x, m):
    d = (x[2 * m:] - 2 * x[m:-m] + x[:-2 * m]).astype(np.float64)
    return float(np.dot(d, d))


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

NUMBA_ENABLED = False
if _env_wants_numba():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - depends on environment
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    xcorr_mag = njit(cache=True)(_xcorr_mag_loop)
    gold_bits = njit(cache=True)(_gold_bits_loop)
    allan_sumsq = njit(cache=True)(_allan_sumsq_loop)
else:  # pragma: no cover - exercised via TAPSIM_NUMBA=0
    xcorr_mag = _xcorr_mag_numpy
    gold_bits = _gold_bits_numpy
    allan_sumsq = _allan_sumsq_numpy
