"""Simulated clocks and clock-quality analysis.

The oscillator model has two noise terms: white phase noise (a fresh draw
per reading, ``white_noise_sigma`` seconds) and random-walk frequency noise
(``random_walk_sigma`` per sqrt-second).  Together they produce offset
series whose Allan variance has the classic bathtub shape: the white part
falls off with averaging interval while the random walk grows, leaving an
interior minimum at the optimal observation interval.

Offsets and time points are integer picoseconds throughout; the noiseless
paths are exact.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._kernels import allan_sumsq
from .errors import ParamError
from .units import SEC

log = logging.getLogger(__name__)


class RejectReason(enum.Enum):
    NONE = "none"
    SFN_MISMATCH = "sfn_mismatch"
    CRC_FAIL = "crc_fail"
    PRS_SENSE_FAIL = "prs_sense_fail"
    THRESHOLD_EXCEEDED = "threshold_exceeded"


@dataclass(frozen=True)
class OscillatorModel:
    """Parameters of a free-running oscillator.

    fractional_offset is df/f; random_walk_sigma is the per-sqrt-second
    standard deviation of the fractional-frequency random walk;
    white_noise_sigma is the per-reading phase jitter in seconds.
    """

    nominal_frequency: float = 1e9
    fractional_offset: float = 0.0
    random_walk_sigma: float = 0.0
    white_noise_sigma: float = 0.0
    seed: int = 0

    @classmethod
    def ideal(cls) -> "OscillatorModel":
        return cls()


class OscillatorClock:
    """A local clock advanced in lockstep with master time.

    With all noise terms and the fractional offset at zero the clock
    reproduces master elapsed time exactly (integer identity).  Identical
    seeds produce identical noise sequences.
    """

    def __init__(self, model: OscillatorModel, start_local: int = 0):
        self.model = model
        self.local_time = start_local
        self._rw_state = 0.0
        self._rng = np.random.default_rng(model.seed)

    def advance(self, master_elapsed: int) -> int:
        """Advance by a master-time interval, returning local elapsed time.

        The rate error (fractional offset + current random-walk state) and a
        fresh white-noise draw are applied as an integer correction on top
        of the exact identity, then the random walk takes one step scaled to
        sqrt(master_elapsed).
        """
        if master_elapsed <= 0:
            raise ParamError("master_elapsed must be positive")
        m = self.model
        rate_err = m.fractional_offset + self._rw_state
        correction = master_elapsed * rate_err
        if m.white_noise_sigma > 0.0:
            correction += self._rng.normal(0.0, m.white_noise_sigma) * SEC
        if m.random_walk_sigma > 0.0:
            dt_s = master_elapsed / SEC
            self._rw_state += self._rng.normal(0.0, m.random_walk_sigma * math.sqrt(dt_s))
        local_elapsed = master_elapsed + round(correction)
        self.local_time += local_elapsed
        return local_elapsed


@dataclass
class OffsetObservation:
    """One timing observation at the UE.

    t_offset = t_ue_local - (t_bs_stamp + t_est + t0), all exact integers.
    dtheta of the first observation in a series is zero by definition.
    """

    t_master: int
    t_bs_stamp: int
    t_ue_local: int
    t_est: int
    t_offset: int
    dtheta: int = 0
    accepted: bool = False
    reject_reason: RejectReason = RejectReason.NONE


def dtheta_series(observations: Sequence[OffsetObservation]) -> list[int]:
    """Consecutive t_offset increments; empty for fewer than 2 observations."""
    if len(observations) < 2:
        return []
    return [
        observations[i].t_offset - observations[i - 1].t_offset
        for i in range(1, len(observations))
    ]


@dataclass(frozen=True)
class AllanPoint:
    tau: int            # averaging interval, ps
    variance: float     # two-sample variance of tau-averaged fractional offsets
    sample_count: int


def _check_uniform_spacing(times: Sequence[int]) -> int:
    spacing = times[1] - times[0]
    if spacing <= 0:
        raise ParamError("offset series must be strictly increasing in time")
    for i in range(2, len(times)):
        if times[i] - times[i - 1] != spacing:
            raise ParamError("offset series must be uniformly spaced")
    return spacing


def allan_variance(
    offsets: Sequence[tuple[int, int]], tau: int
) -> AllanPoint | None:
    """Overlapping two-sample variance of the offset series at interval tau.

    ``offsets`` is a uniformly spaced series of (t_master_ps, offset_ps).
    With x the offsets in seconds and m = tau / spacing, the estimator is

        (1 / (2 (N - 2m))) * sum_k ((x[k+2m] - 2 x[k+m] + x[k]) / tau_s)^2

    i.e. half the mean squared difference of consecutive tau-averages of the
    fractional-offset increments, over all overlapping positions.  Returns
    None (with a diagnostic) when the series is too short for tau or tau is
    not a multiple of the spacing.
    """
    if len(offsets) < 3:
        log.warning("allan_variance: series too short (%d samples)", len(offsets))
        return None
    times = [t for t, _ in offsets]
    spacing = _check_uniform_spacing(times)
    if tau <= 0 or tau % spacing != 0:
        log.warning("allan_variance: tau %d not a multiple of spacing %d", tau, spacing)
        return None
    m = tau // spacing
    count = len(offsets) - 2 * m
    if count < 1:
        log.warning("allan_variance: series spans less than 2*tau (m=%d)", m)
        return None
    x = np.array([v for _, v in offsets], dtype=np.int64)
    # (d_ps / tau_ps)^2 is dimensionless, so the ps->s conversions cancel
    sumsq = allan_sumsq(x, m)
    variance = sumsq / (float(tau) * float(tau)) / (2.0 * count)
    return AllanPoint(tau=tau, variance=variance, sample_count=count)


def allan_curve(
    offsets: Sequence[tuple[int, int]], tau_grid: Iterable[int]
) -> list[AllanPoint]:
    """allan_variance per tau over an ascending grid, omitting infeasible taus."""
    curve = []
    for tau in tau_grid:
        point = allan_variance(offsets, tau)
        if point is not None:
            curve.append(point)
    if not curve:
        log.warning("allan_curve: no feasible tau in grid")
    return curve


def write_offset_csv(path, rows: Iterable[tuple[int, int, bool, RejectReason]]) -> None:
    """Offset series export: (t_master_ps, offset_ps, accepted, reject_reason)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_master_ps", "offset_ps", "accepted", "reject_reason"])
        for t, off, acc, reason in rows:
            writer.writerow([t, off, int(acc), reason.value])


def read_offset_csv(path) -> list[tuple[int, int, bool, RejectReason]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            rows.append(
                (
                    int(rec["t_master_ps"]),
                    int(rec["offset_ps"]),
                    bool(int(rec.get("accepted", "1"))),
                    RejectReason(rec.get("reject_reason", "none")),
                )
            )
    return rows


def write_allan_csv(path, curve: Sequence[AllanPoint]) -> None:
    """Allan curve export: (tau_s, adev_variance, n), argmin row flagged."""
    argmin = min(range(len(curve)), key=lambda i: curve[i].variance) if curve else -1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau_s", "adev_variance", "n", "argmin"])
        for i, p in enumerate(curve):
            writer.writerow([p.tau / SEC, repr(p.variance), p.sample_count, int(i == argmin)])
