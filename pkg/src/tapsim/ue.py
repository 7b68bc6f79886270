"""UE timing module: offset computation, checks, state machine, filtering.

Mechanism compensation is per message: reference-SFN comparison, CRC
verification, reference-signal consistency sensing and the dual-threshold
state machine.  Statistical compensation runs across messages: after the
first accepted result anchors the output, a scalar Kalman filter (or a
plain K-average) tracks the offset-increment stream and its accumulated
output steers the released time.

State machine (S0 initial, S1 buffer, S2 locked), evaluated per
observation against the thresholds th1 < th0:

    S0: any check failure    -> stay S0, reject
        otherwise            -> accept (apply correction), enter S1
    S1: any check failure    -> stay S1, streak reset, reject
        |offset| > th0       -> back to S0, reject
        |offset| <= th1      -> accept, streak += 1; lock to S2 at lock_count
        th1 < |offset| <= th0-> stay S1, streak reset, reject
    S2: any check failure    -> interrupt to S1, streak reset, reject
        |offset| > th0       -> back to S0, reject (gross anomaly escape)
        otherwise            -> stay locked, result not applied

While locked, check-passing results whose increment against the previous
retained observation stays within th1 keep feeding the statistical layer;
larger jumps are quarantined, which is exactly what bounds a slow
man-in-the-middle delay ramp to steps below th1.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace

from .clock import OffsetObservation, RejectReason
from .errors import OverrunError, ParamError
from .phy import DEFAULT_NUMEROLOGY, DelayEstimate, Numerology
from .signaling import GR_10MS, Sib9Message
from .units import NS, SEC, SFN_PERIOD


class Phase(enum.Enum):
    S0 = "S0"
    S1 = "S1"
    S2 = "S2"


class StatisticalMode(enum.Enum):
    NONE = "none"
    KALMAN = "kalman"
    K_AVG = "k_avg"


@dataclass(frozen=True)
class UeConfig:
    th0: int = 2340 * NS              # coarse threshold
    th1: int = 260 * NS               # fine threshold gating lock progression
    epsilon: float = 1.0              # sensing bound in units of Ts
    t0: int = 0                       # calibrated processing delay
    lock_count: int = 3
    statistical_mode: StatisticalMode = StatisticalMode.NONE
    kalman_q: float = 1e-18           # process variance, s^2
    kalman_r: float = 1e-14           # measurement variance, s^2
    k: int = 50                       # K-average window
    gr: int = GR_10MS
    sfn_check: bool = True
    crc_check: bool = True
    prs_sensing: bool = True
    delay_method: str = "srs"         # "srs" (fine) or "ta" (coarse)

    def __post_init__(self):
        if self.th1 >= self.th0:
            raise ParamError("th1 must be below th0")
        if self.lock_count < 1:
            raise ParamError("lock_count must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "UeConfig":
        kw = {}
        for key, name, unit in (
            ("th0_ns", "th0", NS),
            ("th1_ns", "th1", NS),
            ("t0_ns", "t0", NS),
            ("gr_ns", "gr", NS),
        ):
            if key in data:
                kw[name] = round(data[key] * unit)
        for key in ("epsilon", "lock_count", "kalman_q", "kalman_r", "k",
                    "sfn_check", "crc_check", "prs_sensing", "delay_method"):
            if key in data:
                kw[key] = data[key]
        if "mode" in data:
            kw["statistical_mode"] = StatisticalMode(data["mode"])
        return cls(**kw)


@dataclass(frozen=True)
class KalmanState:
    estimate: float = 0.0      # accumulated correction, ps
    covariance: float = 0.0    # ps^2; 0 means "not initialized"
    z: float = 0.0             # reconstructed offset from the increments, ps


@dataclass
class UeState:
    phase: Phase = Phase.S0
    consecutive_ok: int = 0
    last_accepted_offset: int = 0
    kalman_state: KalmanState = field(default_factory=KalmanState)
    output_base: int = 0       # first accepted absolute timing result


@dataclass(frozen=True)
class CheckResult:
    sfn_ok: bool = True
    crc_ok: bool = True
    prs_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.sfn_ok and self.crc_ok and self.prs_ok

    @property
    def reason(self) -> RejectReason:
        if not self.sfn_ok:
            return RejectReason.SFN_MISMATCH
        if not self.crc_ok:
            return RejectReason.CRC_FAIL
        if not self.prs_ok:
            return RejectReason.PRS_SENSE_FAIL
        return RejectReason.NONE


@dataclass(frozen=True)
class Action:
    accepted: bool
    correction: int = 0
    reason: RejectReason = RejectReason.NONE


def compute_offset(
    msg: Sib9Message,
    t_est: DelayEstimate,
    t_ue_local: int,
    config: UeConfig,
    t_master: int = 0,
) -> OffsetObservation:
    """Observation per the basic timing relation, exact integer arithmetic.

    T_t = announced boundary + estimated downlink delay + calibrated t0;
    t_offset = local reception reading - T_t.
    """
    stamp = msg.stamp_ps(config.gr)
    t_t = stamp + t_est.value + config.t0
    return OffsetObservation(
        t_master=t_master,
        t_bs_stamp=stamp,
        t_ue_local=t_ue_local,
        t_est=t_est.value,
        t_offset=t_ue_local - t_t,
    )


def mechanism_checks(
    msg: Sib9Message,
    crc_ok: bool,
    current_sfn: int,
    d_srs: int | None,
    d_prs: int | None,
    config: UeConfig,
    numerology: Numerology = DEFAULT_NUMEROLOGY,
) -> CheckResult:
    """Per-message security and consistency checks.

    d_srs is the round-trip reference-signal measure (the served pair value
    doubled), d_prs the one-way downlink estimate; the sensing rule is
    |d_srs/2 - d_prs| < epsilon * Ts.  None skips a check whose input is
    unavailable.
    """
    sfn_ok = True
    if config.sfn_check:
        sfn_ok = msg.ref_sfn == current_sfn % SFN_PERIOD
    crc = crc_ok or not config.crc_check
    prs_ok = True
    if config.prs_sensing and d_srs is not None and d_prs is not None:
        prs_ok = abs(d_srs / 2.0 - d_prs) < config.epsilon * numerology.ts
    return CheckResult(sfn_ok=sfn_ok, crc_ok=crc, prs_ok=prs_ok)


def step_state_machine(
    state: UeState,
    obs: OffsetObservation,
    checks: CheckResult,
    config: UeConfig,
    correction: int = 0,
) -> tuple[UeState, Action]:
    """Advance the dual-threshold machine by one observation.

    Corrections are only ever applied in S0 and S1; the locked state never
    applies one.  With statistical compensation running, ``correction`` is
    the currently steered output correction so the thresholds judge the
    disciplined residual rather than the raw local clock.  Returns the new
    state and what to do with the result.
    """
    mag = abs(obs.t_offset - correction)
    phase, streak = state.phase, state.consecutive_ok

    if phase is Phase.S0:
        if not checks.passed:
            return state, Action(False, reason=checks.reason)
        new = replace_state(state, phase=Phase.S1, consecutive_ok=0,
                            last_accepted_offset=obs.t_offset)
        return new, Action(True, correction=obs.t_offset)

    if phase is Phase.S1:
        if not checks.passed:
            return replace_state(state, consecutive_ok=0), Action(False, reason=checks.reason)
        if mag > config.th0:
            new = replace_state(state, phase=Phase.S0, consecutive_ok=0)
            return new, Action(False, reason=RejectReason.THRESHOLD_EXCEEDED)
        if mag <= config.th1:
            streak += 1
            next_phase = Phase.S2 if streak >= config.lock_count else Phase.S1
            new = replace_state(state, phase=next_phase, consecutive_ok=streak,
                                last_accepted_offset=obs.t_offset)
            return new, Action(True, correction=obs.t_offset)
        return replace_state(state, consecutive_ok=0), Action(
            False, reason=RejectReason.THRESHOLD_EXCEEDED
        )

    # locked
    if not checks.passed:
        return replace_state(state, phase=Phase.S1, consecutive_ok=0), Action(
            False, reason=checks.reason
        )
    if mag > config.th0:
        return replace_state(state, phase=Phase.S0, consecutive_ok=0), Action(
            False, reason=RejectReason.THRESHOLD_EXCEEDED
        )
    return state, Action(False, reason=RejectReason.NONE)


def replace_state(state: UeState, **changes) -> UeState:
    merged = dict(
        phase=state.phase,
        consecutive_ok=state.consecutive_ok,
        last_accepted_offset=state.last_accepted_offset,
        kalman_state=state.kalman_state,
        output_base=state.output_base,
    )
    merged.update(changes)
    return UeState(**merged)


# ---------------------------------------------------------------------------
# Statistical compensation
# ---------------------------------------------------------------------------

def kalman_update(
    state: KalmanState, dtheta: int, config: UeConfig
) -> tuple[KalmanState, int]:
    """One scalar Kalman step over the increment stream.

    The filter state is the accumulated output correction; the measurement
    is the offset trajectory reconstructed from the increments, anchored at
    zero on the first accepted result.  Returns the new state and the
    rounded correction to steer the output by.
    """
    q = config.kalman_q * SEC * SEC   # s^2 -> ps^2
    r = config.kalman_r * SEC * SEC
    p = state.covariance if state.covariance > 0.0 else r
    z = state.z + dtheta
    p_pred = p + q
    gain = p_pred / (p_pred + r)
    estimate = state.estimate + gain * (z - state.estimate)
    new = KalmanState(estimate=estimate, covariance=(1.0 - gain) * p_pred, z=z)
    return new, round(estimate)


def kalman_steady_state(config: UeConfig) -> tuple[float, float]:
    """Closed-form steady-state (predicted covariance, gain) in ps units."""
    q = config.kalman_q * SEC * SEC
    r = config.kalman_r * SEC * SEC
    p_pred = (q + (q * q + 4.0 * q * r) ** 0.5) / 2.0
    return p_pred, p_pred / (p_pred + r)


class KAverage:
    """Plain average of the last K reconstructed offsets."""

    def __init__(self, k: int):
        if k < 1:
            raise ParamError("k must be >= 1")
        self._window: deque[float] = deque(maxlen=k)
        self._z = 0.0

    def update(self, dtheta: int) -> int:
        self._z += dtheta
        self._window.append(self._z)
        return round(sum(self._window) / len(self._window))

    def reset(self) -> None:
        self._window.clear()
        self._z = 0.0


class ConvergenceMonitor:
    """Declares convergence when corrections stay within a bound over a window."""

    def __init__(self, bound_ps: float, window_ps: int):
        self.bound = bound_ps
        self.window = window_ps
        self._steps: deque[tuple[int, int]] = deque()
        self.converged_at: int | None = None

    def record(self, t_master: int, correction_step: int) -> None:
        self._steps.append((t_master, correction_step))
        horizon = t_master - self.window
        while self._steps and self._steps[0][0] < horizon:
            self._steps.popleft()
        if self.converged_at is None and self._steps:
            span = self._steps[-1][0] - self._steps[0][0]
            if span >= self.window * 9 // 10 and all(
                abs(s) <= self.bound for _, s in self._steps
            ):
                self.converged_at = t_master


# ---------------------------------------------------------------------------
# Calibration and gated output
# ---------------------------------------------------------------------------

def calibrate_t0(errors: list[int]) -> int:
    """L1-optimal constant compensation: the (lower) median of the errors.

    Minimizes sum |e - c| over c in [min(e), max(e)]; agrees with a 1 ns
    grid scan of that objective to within the grid resolution.
    """
    if not errors:
        raise ParamError("cannot calibrate on an empty error log")
    ordered = sorted(errors)
    return ordered[(len(ordered) - 1) // 2]


def l1_objective(errors: list[int], c: int) -> int:
    return sum(abs(e - c) for e in errors)


def gated_output(
    transcode_result: int, now_local: int, config: UeConfig
) -> tuple[int, int]:
    """Gate-timer release: value t+1s emitted at local time t + (1s - t0).

    The announced value then matches the emission instant exactly when local
    processing consumed t0.  Raises OverrunError when processing already
    blew the budget.
    """
    if not 0 <= config.t0 < SEC:
        raise ParamError("t0 must lie in [0, 1 s)")
    release = transcode_result + SEC - config.t0
    if now_local > release:
        raise OverrunError("processing exceeded the 1 s - t0 gate budget")
    return release, transcode_result + SEC


# ---------------------------------------------------------------------------
# Terminal: one UE's full timing pipeline
# ---------------------------------------------------------------------------

@dataclass
class ProcessResult:
    obs: OffsetObservation
    checks: CheckResult
    action: Action
    phase: Phase
    retained: bool             # fed the statistical layer
    correction_total: int      # current statistical correction, ps
    correction_step: int       # change of the correction this event, ps


class UeTerminal:
    """State container wiring checks, state machine and statistics together.

    The local clock is owned by the caller (the event loop advances it);
    accepted corrections are returned through the action for the caller to
    apply as a step.  An observation is "retained" when it becomes part of
    the output: either the state machine accepted it, or the terminal is
    locked and the increment against the previous valid observation stays
    within th1.  Larger increments are quarantined, which bounds what a
    delay-inserting middleman can feed the output per shot.
    """

    def __init__(self, rnti: int, config: UeConfig,
                 numerology: Numerology = DEFAULT_NUMEROLOGY):
        self.rnti = rnti
        self.config = config
        self.numerology = numerology
        self.state = UeState()
        self._kavg = KAverage(config.k)
        self._last_valid: int | None = None   # dtheta reference
        self._has_base = False
        self.correction = 0
        self.monitor = ConvergenceMonitor(
            bound_ps=numerology.ts / 2.0, window_ps=60 * SEC
        )

    def process(
        self,
        msg: Sib9Message,
        crc_ok: bool,
        current_sfn: int,
        t_ue_local: int,
        t_est: DelayEstimate,
        d_srs: int | None,
        d_prs: int | None,
        t_master: int = 0,
    ) -> ProcessResult:
        obs = compute_offset(msg, t_est, t_ue_local, self.config, t_master)
        checks = mechanism_checks(
            msg, crc_ok, current_sfn, d_srs, d_prs, self.config, self.numerology
        )
        prev_correction = self.correction
        self.state, action = step_state_machine(
            self.state, obs, checks, self.config, correction=self.correction
        )
        obs.accepted = action.accepted
        obs.reject_reason = action.reason

        retained = False
        if action.accepted:
            # the clock steps onto this result: the statistical layer and
            # the increment reference restart from a zero anchor
            if not self._has_base:
                self.state.output_base = t_ue_local - obs.t_offset
                self._has_base = True
            self._reset_statistics()
            obs.dtheta = 0
            retained = True
        elif checks.passed:
            if self._last_valid is not None:
                dtheta = obs.t_offset - self._last_valid
                if self.state.phase is Phase.S2 and abs(dtheta) <= self.config.th1:
                    obs.dtheta = dtheta
                    self._feed_statistics(dtheta)
                    retained = True
                elif obs.reject_reason is RejectReason.NONE:
                    obs.reject_reason = RejectReason.THRESHOLD_EXCEEDED
            self._last_valid = obs.t_offset

        step = self.correction - prev_correction
        if retained:
            self.monitor.record(t_master, step)
        return ProcessResult(
            obs=obs,
            checks=checks,
            action=action,
            phase=self.state.phase,
            retained=retained,
            correction_total=self.correction,
            correction_step=step,
        )

    def _reset_statistics(self) -> None:
        self.state.kalman_state = KalmanState()
        self._kavg.reset()
        self._last_valid = 0
        self.correction = 0

    def _feed_statistics(self, dtheta: int) -> None:
        mode = self.config.statistical_mode
        if mode is StatisticalMode.KALMAN:
            self.state.kalman_state, self.correction = kalman_update(
                self.state.kalman_state, dtheta, self.config
            )
        elif mode is StatisticalMode.K_AVG:
            self.correction = self._kavg.update(dtheta)
        # mode NONE: outputs equal the raw accepted offsets, no filtering
