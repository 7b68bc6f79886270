"""Deterministic discrete-event simulation of the end-to-end timing chain.

One run executes the full delivery pipeline event by event: SRS serving and
SIB9 generation at the base station, transmission with trigger/backhaul
errors, per-UE delivery through the channel (and through an attacker, when
configured), UE-side estimation, checks, state machine and statistical
compensation.  The simulator knows ground truth, so every observation's
output error decomposes exactly (integer picoseconds) into

    e_total = e_src + e_node + e_gr + e_ingr + e_air + t0_residual

which the acceptance suite asserts row by row.  Runs are bit-reproducible
per seed: all randomness derives from spawned child streams of the
scenario seed, and the event queue is totally ordered by (time, sequence).
"""

from __future__ import annotations

import csv
import heapq
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attack import AttackConfig, ForwardingAttacker, ReplayAttacker, build_attacker
from .bs import BaseStation, BsConfig, TransmitEvent
from .clock import OscillatorClock, OscillatorModel, RejectReason, allan_curve
from .errors import ConfigError, NoDetection
from .phy import (
    DEFAULT_NUMEROLOGY,
    ChannelRealization,
    DelayEstimate,
    Method,
    Numerology,
    apply_channel,
    estimate_delay,
    gen_prs,
    gen_zc,
    quantize_ta,
)
from .signaling import decode_sib9
from .ue import Phase, StatisticalMode, UeConfig, UeTerminal
from .units import FRAME, MS, NS, SEC, SFN_PERIOD, distance_to_delay, round_div

log = logging.getLogger(__name__)

MAX_DISTANCE_M = 10_000.0   # applicability bound of the air-interface method


@dataclass(frozen=True)
class UeSpec:
    rnti: int
    config: UeConfig
    oscillator: OscillatorModel = field(default_factory=OscillatorModel.ideal)
    t0_true: int = 0
    mobility: tuple[tuple[float, float], ...] = ((0.0, 100.0),)  # (t_s, meters)
    ta_refresh_s: float = 0.0   # 0 refreshes the coarse estimate every event
    ta_noise: int = 8_138       # round-trip measurement noise sigma, ps


@dataclass(frozen=True)
class PtpParams:
    asym_median_ns: float = 700.0
    asym_sigma: float = 1.0
    base_delay_ns: float = 20_000.0


@dataclass(frozen=True)
class Scenario:
    seed: int = 1
    duration: int = 600 * SEC
    bs: BsConfig = field(default_factory=BsConfig)
    ues: tuple[UeSpec, ...] = ()
    channel: ChannelRealization = field(default_factory=ChannelRealization)
    attack: AttackConfig | None = None
    baseline: str = "none"      # none | ptp_over_air | k_avg_tap
    ptp: PtpParams = field(default_factory=PtpParams)
    numerology: Numerology = DEFAULT_NUMEROLOGY
    srs_root: int = 1
    srs_length: int = 139
    prs_c_init: int = 42
    prs_length: int = 256
    slips: tuple[tuple[float, int], ...] = ()   # (t_s, frames) injected slips

    def validate(self) -> None:
        if self.duration < 2 * self.bs.sib9_period:
            raise ConfigError("duration must cover at least two SIB9 periods")
        if not self.ues:
            raise ConfigError("scenario needs at least one UE")
        if self.baseline not in ("none", "ptp_over_air", "k_avg_tap"):
            raise ConfigError(f"unknown baseline {self.baseline!r}")
        seen = set()
        for ue in self.ues:
            if ue.rnti in seen:
                raise ConfigError(f"duplicate rnti {ue.rnti:#06x}")
            seen.add(ue.rnti)
            if not ue.mobility:
                raise ConfigError("mobility trajectory must be non-empty")
            for _, dist in ue.mobility:
                if not 0.0 <= dist < MAX_DISTANCE_M:
                    raise ConfigError("distances must stay within [0, 10 km)")


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from its JSON form (ns/ms/s units at the surface)."""
    try:
        kw: dict = {}
        if "seed" in data:
            kw["seed"] = int(data["seed"])
        if "duration_s" in data:
            kw["duration"] = round(data["duration_s"] * SEC)
        if "bs" in data:
            kw["bs"] = BsConfig.from_dict(data["bs"])
        if "numerology" in data:
            kw["numerology"] = Numerology(**data["numerology"])
        if "channel" in data:
            ch = data["channel"]
            paths = tuple(
                (round(d_ns * NS), float(g)) for d_ns, g in ch.get("paths_ns_gain", [[0, 1.0]])
            )
            kw["channel"] = ChannelRealization(paths=paths, snr_db=ch.get("snr_db"))
        ues = []
        for u in data.get("ues", []):
            ues.append(
                UeSpec(
                    rnti=int(u["rnti"]),
                    config=UeConfig.from_dict(u.get("config", {})),
                    oscillator=OscillatorModel(**u.get("oscillator", {})),
                    t0_true=round(u.get("t0_true_ns", 0.0) * NS),
                    mobility=tuple((float(t), float(d)) for t, d in u.get("mobility", [[0, 100]])),
                    ta_refresh_s=float(u.get("ta_refresh_s", 0.0)),
                    ta_noise=round(u.get("ta_noise_ns", 8.138) * NS),
                )
            )
        kw["ues"] = tuple(ues)
        if data.get("attack"):
            kw["attack"] = AttackConfig.from_dict(data["attack"])
        if "baseline" in data:
            kw["baseline"] = data["baseline"]
        if "ptp" in data:
            kw["ptp"] = PtpParams(**data["ptp"])
        if "srs" in data:
            kw["srs_root"] = int(data["srs"].get("root", 1))
            kw["srs_length"] = int(data["srs"].get("length", 139))
        if "prs" in data:
            kw["prs_c_init"] = int(data["prs"].get("c_init", 42))
            kw["prs_length"] = int(data["prs"].get("length", 256))
        if "slips" in data:
            kw["slips"] = tuple((float(t), int(n)) for t, n in data["slips"])
        scenario = Scenario(**kw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc
    scenario.validate()
    return scenario


# ---------------------------------------------------------------------------
# Trace containers
# ---------------------------------------------------------------------------

OBS_COLUMNS = [
    "t_master_ps", "t_rx_master_ps", "phase", "t_offset_ps", "dtheta_ps",
    "accepted", "retained", "reject_reason", "filtered_correction_ps",
    "output_error_ps", "e_src_ps", "e_node_ps", "e_gr_ps", "e_ingr_ps",
    "e_air_ps", "t0_residual_ps", "e_total_ps", "t_bs_stamp_ps", "t_est_ps",
    "t_ue_local_ps",
]


@dataclass
class ObsRow:
    t_master: int
    t_rx_master: int
    phase: str
    t_offset: int
    dtheta: int
    accepted: bool
    retained: bool
    reject_reason: str
    filtered_correction: int
    output_error: int | None
    e_src: int
    e_node: int
    e_gr: int
    e_ingr: int
    e_air: int
    t0_residual: int
    e_total: int
    t_bs_stamp: int
    t_est: int
    t_ue_local: int

    def as_list(self):
        return [
            self.t_master, self.t_rx_master, self.phase, self.t_offset,
            self.dtheta, int(self.accepted), int(self.retained),
            self.reject_reason, self.filtered_correction,
            "" if self.output_error is None else self.output_error,
            self.e_src, self.e_node, self.e_gr, self.e_ingr, self.e_air,
            self.t0_residual, self.e_total, self.t_bs_stamp, self.t_est,
            self.t_ue_local,
        ]


@dataclass
class UeTrace:
    rnti: int
    mode: str
    t0_true: int
    t0_configured: int
    rows: list[ObsRow] = field(default_factory=list)
    converged_at: int | None = None
    link_down_at: int | None = None


@dataclass
class Trace:
    seed: int
    duration: int
    ues: list[UeTrace]
    ptp: list[tuple[int, int]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Simulation run
# ---------------------------------------------------------------------------

def _distance_at(mobility, t_s: float) -> float:
    pts = mobility
    if t_s <= pts[0][0]:
        return pts[0][1]
    for (t0, d0), (t1, d1) in zip(pts, pts[1:]):
        if t_s <= t1:
            frac = (t_s - t0) / (t1 - t0) if t1 > t0 else 0.0
            return d0 + frac * (d1 - d0)
    return pts[-1][1]


class _UeRuntime:
    def __init__(self, spec: UeSpec, scenario: Scenario, seeds):
        self.spec = spec
        self.terminal = UeTerminal(spec.rnti, spec.config, scenario.numerology)
        model = spec.oscillator
        if model.seed == 0:
            model = OscillatorModel(
                nominal_frequency=model.nominal_frequency,
                fractional_offset=model.fractional_offset,
                random_walk_sigma=model.random_walk_sigma,
                white_noise_sigma=model.white_noise_sigma,
                seed=int(seeds[0]),
            )
        self.clock = OscillatorClock(model)
        self.local_raw = 0
        self.last_master: int | None = None
        self.chan_rng_seed = int(seeds[1])
        self.chan_counter = 0
        self.ta_rng = np.random.default_rng(int(seeds[2]))
        self.ta_cache: DelayEstimate | None = None
        self.ta_cached_at: int | None = None
        self.last_output_error: int | None = None
        self.trace = UeTrace(
            rnti=spec.rnti,
            mode=spec.config.statistical_mode.value,
            t0_true=spec.t0_true,
            t0_configured=spec.config.t0,
        )

    def advance_to(self, m: int) -> None:
        if self.last_master is None:
            # phase-align the local clock to master at first use; the first
            # accepted result then measures only the per-shot error
            self.local_raw = m
        else:
            elapsed = m - self.last_master
            if elapsed > 0:
                self.local_raw += self.clock.advance(elapsed)
        self.last_master = m

    def next_channel_seed(self) -> int:
        self.chan_counter += 1
        return (self.chan_rng_seed + self.chan_counter) & 0x7FFFFFFF


def run(scenario: Scenario) -> Trace:
    """Execute one scenario; deterministic per seed."""
    scenario.validate()
    num = scenario.numerology
    root_ss = np.random.SeedSequence(scenario.seed)
    bs_seed, ptp_seed, *ue_seeds = root_ss.spawn(2 + len(scenario.ues))

    srs_ref = gen_zc(scenario.srs_root, scenario.srs_length)
    prs_ref = gen_prs(scenario.prs_c_init, scenario.prs_length)
    bs = BaseStation(
        scenario.bs, num, srs_reference=srs_ref,
        seed=int(bs_seed.generate_state(1)[0]),
    )

    ues = [
        _UeRuntime(spec, scenario, seq.generate_state(3))
        for spec, seq in zip(scenario.ues, ue_seeds)
    ]
    if scenario.baseline == "k_avg_tap":
        ues.extend(_shadow_k_avg(scenario, ue_seeds))

    attacker = build_attacker(scenario.attack, num.cp)
    slips = sorted(scenario.slips)
    slip_idx = 0

    heap: list[tuple[int, int, str, object]] = []
    seq = 0

    def push(t: int, kind: str, payload) -> None:
        nonlocal seq
        heapq.heappush(heap, (t, seq, kind, payload))
        seq += 1

    frames_per_period = scenario.bs.sib9_period // FRAME
    first_frame = frames_per_period
    k = 0
    while True:
        target = first_frame + k * frames_per_period
        gen_time = target * FRAME - scenario.bs.sched_pre
        if target * FRAME > scenario.duration:
            break
        push(gen_time, "sib", target)
        k += 1
    if scenario.baseline == "ptp_over_air":
        t = scenario.bs.sib9_period
        while t <= scenario.duration:
            push(t, "ptp", None)
            t += scenario.bs.sib9_period

    ptp_rng = np.random.default_rng(int(ptp_seed.generate_state(1)[0]))
    trace = Trace(seed=scenario.seed, duration=scenario.duration,
                  ues=[u.trace for u in ues])

    while heap:
        t_now, _, kind, payload = heapq.heappop(heap)
        if kind == "sib":
            target_frame = payload
            while slip_idx < len(slips) and slips[slip_idx][0] * SEC <= t_now:
                bs.pending_slip_frames += slips[slip_idx][1]
                slip_idx += 1
            for ue in ues:
                if ue.spec.config.delay_method == "srs" and not _link_down(ue):
                    dist = _distance_at(ue.spec.mobility, t_now / SEC)
                    rt = 2 * distance_to_delay(dist)
                    uplink = apply_channel(
                        srs_ref, scenario.channel, rt, ue.next_channel_seed(), num
                    )
                    bs.serve_srs(ue.spec.rnti, uplink)
            event = bs.transmit_event(bs.generate_sib9(target_frame))
            deliveries = [event]
            if isinstance(attacker, ReplayAttacker):
                replayed = attacker.capture(event)
                if replayed is not None:
                    deliveries.append(replayed)
                if attacker.suppresses_genuine(event.boundary):
                    deliveries.remove(event)
            for ev in deliveries:
                for idx, ue in enumerate(ues):
                    if _link_down(ue):
                        continue
                    extra = 0
                    if isinstance(attacker, ForwardingAttacker) and ev is event:
                        injected = attacker.extra_delay(ev.boundary)
                        if injected is None:
                            ue.trace.link_down_at = ev.boundary
                            continue
                        extra = injected
                    dist = _distance_at(ue.spec.mobility, ev.boundary / SEC)
                    prop = distance_to_delay(dist)
                    t_rx = ev.boundary + prop + extra
                    push(t_rx + ue.spec.t0_true, "deliver", (idx, ev, prop, extra, t_rx))
        elif kind == "deliver":
            idx, ev, prop, extra, t_rx = payload
            _process_delivery(ues[idx], scenario, bs, ev, prop, extra, t_rx, prs_ref, num)
        elif kind == "ptp":
            err = _ptp_exchange(ptp_rng, scenario.ptp)
            trace.ptp.append((t_now, err))

    for ue in ues:
        ue.trace.converged_at = ue.terminal.monitor.converged_at
    return trace


def _link_down(ue: _UeRuntime) -> bool:
    return ue.trace.link_down_at is not None


def _shadow_k_avg(scenario: Scenario, ue_seeds):
    """Clone of the first UE running the plain K-average for comparison."""
    spec = scenario.ues[0]
    cfg = spec.config
    shadow_cfg = UeConfig(
        th0=cfg.th0, th1=cfg.th1, epsilon=cfg.epsilon, t0=cfg.t0,
        lock_count=cfg.lock_count, statistical_mode=StatisticalMode.K_AVG,
        kalman_q=cfg.kalman_q, kalman_r=cfg.kalman_r, k=cfg.k, gr=cfg.gr,
        sfn_check=cfg.sfn_check, crc_check=cfg.crc_check,
        prs_sensing=cfg.prs_sensing, delay_method=cfg.delay_method,
    )
    shadow = UeSpec(
        rnti=0xFFF0, config=shadow_cfg, oscillator=spec.oscillator,
        t0_true=spec.t0_true, mobility=spec.mobility,
        ta_refresh_s=spec.ta_refresh_s,
    )
    return [_UeRuntime(shadow, scenario, ue_seeds[0].generate_state(3))]


def _process_delivery(
    ue: _UeRuntime,
    scenario: Scenario,
    bs: BaseStation,
    ev: TransmitEvent,
    prop: int,
    extra: int,
    t_rx: int,
    prs_ref,
    num: Numerology,
) -> None:
    spec = ue.spec
    cfg = spec.config
    m_cmp = t_rx + spec.t0_true
    ue.advance_to(m_cmp)

    msg, crc_ok = decode_sib9(ev.wire)
    # the baseband labels the frame carrying this signaling; trigger jitter
    # shifts the boundary by nanoseconds, not by whole frames
    current_sfn = round_div(ev.boundary, FRAME) % SFN_PERIOD

    d_true = prop + extra
    d_prs_est = None
    if cfg.prs_sensing or cfg.delay_method == "srs":
        try:
            rx = apply_channel(prs_ref, scenario.channel, prop, ue.next_channel_seed(), num)
            d_prs_est = estimate_delay(rx, prs_ref, num, Method.PRS)
        except NoDetection:
            d_prs_est = None

    d_srs_pair = None
    for rnti, srs_tc in msg.ext_pairs:
        if rnti == spec.rnti:
            d_srs_pair = num.tc_units_to_ps(srs_tc)
            break

    if cfg.delay_method == "srs":
        if d_srs_pair is not None:
            t_est = DelayEstimate(Method.SRS, d_srs_pair, num.tc_units_to_ps(1))
        elif d_prs_est is not None:
            t_est = d_prs_est
        else:
            t_est = DelayEstimate(Method.SRS, 0, num.tc_units_to_ps(1))
    else:
        refresh_ps = round(spec.ta_refresh_s * SEC)
        stale = (
            ue.ta_cache is None
            or (refresh_ps == 0)
            or (m_cmp - ue.ta_cached_at >= refresh_ps)
        )
        if stale:
            rt_meas = 2 * prop
            if spec.ta_noise > 0:
                rt_meas += round(ue.ta_rng.normal(0.0, spec.ta_noise))
            ue.ta_cache = quantize_ta(min(max(rt_meas, 0), 2 * num.cp), num)
            ue.ta_cached_at = m_cmp
        t_est = ue.ta_cache

    d_srs_round_trip = 2 * d_srs_pair if d_srs_pair is not None else None
    d_prs_val = d_prs_est.value if d_prs_est is not None else None

    t_master_nominal = ev.stamp + ev.e_gr + spec.t0_true
    result = ue.terminal.process(
        msg=msg,
        crc_ok=crc_ok,
        current_sfn=current_sfn,
        t_ue_local=ue.local_raw,
        t_est=t_est,
        d_srs=d_srs_round_trip,
        d_prs=d_prs_val,
        t_master=t_master_nominal,
    )
    if result.action.accepted:
        ue.local_raw -= result.action.correction

    e_air = d_true - t_est.value
    t0_residual = spec.t0_true - cfg.t0
    t_t = ev.stamp + t_est.value + cfg.t0
    e_total = (t_rx + spec.t0_true) - t_t

    if result.retained:
        if cfg.statistical_mode is StatisticalMode.NONE:
            ue.last_output_error = e_total
        else:
            psi = ue.local_raw - m_cmp
            ue.last_output_error = result.correction_total - psi

    ue.trace.rows.append(
        ObsRow(
            t_master=t_master_nominal,
            t_rx_master=t_rx,
            phase=result.phase.value,
            t_offset=result.obs.t_offset,
            dtheta=result.obs.dtheta,
            accepted=result.obs.accepted,
            retained=result.retained,
            reject_reason=result.obs.reject_reason.value,
            filtered_correction=result.correction_total,
            output_error=ue.last_output_error,
            e_src=ev.e_src,
            e_node=ev.e_node,
            e_gr=ev.e_gr,
            e_ingr=ev.e_ingr,
            e_air=e_air,
            t0_residual=t0_residual,
            e_total=e_total,
            t_bs_stamp=ev.stamp,
            t_est=t_est.value,
            t_ue_local=result.obs.t_ue_local,
        )
    )


def _ptp_exchange(rng: np.random.Generator, params: PtpParams) -> int:
    """Two-way exchange error: exactly half the stack-delay asymmetry.

    The asymmetry magnitude is lognormal (heavy-tailed stack delays), the
    sign is fair, and draws are rounded to even so the halving is exact.
    """
    magnitude = rng.lognormal(math.log(params.asym_median_ns * NS), params.asym_sigma)
    sign = 1 if rng.random() < 0.5 else -1
    asym = sign * (round(magnitude) & ~1)
    return ptp_error_from_asymmetry(asym)


def ptp_error_from_asymmetry(asym: int) -> int:
    """Eq. of the two-way exchange, verified algebraically in the tests."""
    if asym % 2:
        raise ConfigError("asymmetry must be even for exact halving")
    d_up = 20_000 * NS
    d_down = d_up + asym
    theta = 5_000 * NS           # arbitrary true offset; cancels exactly
    t1 = 1_000_000
    t2 = t1 + d_down + theta
    t3 = t2 + 50 * NS
    t4 = t3 - theta + d_up
    mean_path = ((t2 - t1) + (t4 - t3)) // 2
    offset_est = t2 - (t1 + mean_path)
    return offset_est - theta


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def percentile_nearest_rank(ordered: list[int], pct: float) -> int:
    """Nearest-rank percentile on a pre-sorted list."""
    if not ordered:
        raise ConfigError("empty series")
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def _five_number(values: list[int]) -> dict:
    s = sorted(values)
    q1 = percentile_nearest_rank(s, 25)
    q2 = percentile_nearest_rank(s, 50)
    q3 = percentile_nearest_rank(s, 75)
    iqr = q3 - q1
    lo, hi = q1 - 3 * iqr // 2, q3 + 3 * iqr // 2
    outliers = [v for v in s if v < lo or v > hi]
    return {
        "min": s[0], "q1": q1, "median": q2, "q3": q3, "max": s[-1],
        "outlier_count": len(outliers),
    }


def default_tau_grid(spacing: int, n_samples: int) -> list[int]:
    grid = []
    m = 1
    while 2 * m + 1 <= n_samples:
        grid.append(m * spacing)
        m *= 2
    return grid


def summarize(trace: Trace) -> dict:
    """Per-UE error statistics, five-number summaries and Allan curves."""
    if not trace.ues and not trace.ptp:
        raise ConfigError("empty trace")
    out: dict = {"seed": trace.seed, "duration_s": trace.duration / SEC, "ues": {}}
    for ue in trace.ues:
        errors = [r.output_error for r in ue.rows
                  if r.retained and r.output_error is not None]
        entry: dict = {
            "mode": ue.mode,
            "observations": len(ue.rows),
            "retained": len(errors),
            "converged_at_s": None if ue.converged_at is None else ue.converged_at / SEC,
            "link_down_at_s": None if ue.link_down_at is None else ue.link_down_at / SEC,
        }
        if errors:
            magnitudes = sorted(abs(e) for e in errors)
            entry["mean_abs_ns"] = sum(magnitudes) / len(magnitudes) / NS
            entry["percentiles_abs_ns"] = {
                str(p): percentile_nearest_rank(magnitudes, p) / NS
                for p in (50, 90, 99.9, 99.99)
            }
            entry["boxplot_ns"] = {
                k: (v / NS if k != "outlier_count" else v)
                for k, v in _five_number(errors).items()
            }
        offsets = [(r.t_master, r.t_offset) for r in ue.rows
                   if r.reject_reason in ("none", "threshold_exceeded")]
        if len(offsets) >= 3:
            spacing = offsets[1][0] - offsets[0][0]
            uniform = all(
                b[0] - a[0] == spacing for a, b in zip(offsets, offsets[1:])
            )
            if uniform and spacing > 0:
                curve = allan_curve(offsets, default_tau_grid(spacing, len(offsets)))
                if curve:
                    argmin = min(range(len(curve)), key=lambda i: curve[i].variance)
                    entry["allan"] = {
                        "tau_s": [p.tau / SEC for p in curve],
                        "variance": [p.variance for p in curve],
                        "argmin_tau_s": curve[argmin].tau / SEC,
                    }
        out["ues"][f"{ue.rnti:#06x}"] = entry
    if trace.ptp:
        magnitudes = sorted(abs(e) for _, e in trace.ptp)
        out["ptp"] = {
            "exchanges": len(magnitudes),
            "mean_abs_ns": sum(magnitudes) / len(magnitudes) / NS,
            "sub_us_fraction": sum(1 for m in magnitudes if m < 1000 * NS) / len(magnitudes),
            "percentiles_abs_ns": {
                str(p): percentile_nearest_rank(magnitudes, p) / NS
                for p in (50, 90, 99.9, 99.99)
            },
        }
    return out


# ---------------------------------------------------------------------------
# Trace I/O
# ---------------------------------------------------------------------------

def write_trace(trace: Trace, outdir: str | Path) -> list[Path]:
    """Per-UE CSV + PTP CSV + summary JSON; byte-stable across repeat runs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for ue in trace.ues:
        path = outdir / f"ue_{ue.rnti:04x}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(OBS_COLUMNS)
            for row in ue.rows:
                writer.writerow(row.as_list())
        written.append(path)
    if trace.ptp:
        path = outdir / "ptp.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_master_ps", "error_ps"])
            writer.writerows(trace.ptp)
        written.append(path)
    summary_path = outdir / "summary.json"
    summary_path.write_text(
        json.dumps(summarize(trace), indent=2, sort_keys=True) + "\n"
    )
    written.append(summary_path)
    return written
