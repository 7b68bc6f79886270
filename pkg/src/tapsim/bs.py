"""Base-station side: reference-clock sync, SIB9 generation, trigger model.

The BS schedules SIB9 on its own (reference-locked) timescale, so the
announced stamp time_info_utc*gr + t_c equals the intended radio boundary
exactly and no granularity error is introduced by generation itself.  The
transmit model then adds the ground-truth error terms: scheduling slips,
reference-clock offset versus the master (source + backhaul hops), and the
trigger chain residual with jitter.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .clock import OscillatorModel
from .errors import ConfigError, NoDetection
from .phy import DEFAULT_NUMEROLOGY, Method, Numerology, estimate_delay
from .signaling import GR_10MS, MAX_EXT_PAIRS, Sib9Message, encode_sib9
from .units import FRAME, MS, NS, SEC, SFN_PERIOD, round_div

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BsConfig:
    gr: int = GR_10MS                 # stamp granularity, ps
    sib9_period: int = 320 * MS
    sched_pre: int = 20 * MS
    t_c: int = 4 * NS                 # TTL rise constant, announced in the stamp
    t_p: int = SEC - 22 * NS          # PPS conversion compensation
    trigger_delay: int = 22 * NS      # constant PPS generation delay
    trigger_jitter: int = 0           # sigma of the trigger draw, ps
    reference_clock: OscillatorModel = field(default_factory=OscillatorModel.ideal)
    hops_to_mc: int = 0
    e_node_per_hop: int = 0           # constant backhaul error per hop
    e_node_jitter: int = 0            # sigma of the per-event backhaul draw, ps
    e_src: int = 0                    # constant source error

    def __post_init__(self):
        if self.sib9_period % FRAME != 0:
            raise ConfigError("sib9_period must be a multiple of the 10 ms frame")
        if not 0 < self.sched_pre < self.sib9_period:
            raise ConfigError("sched_pre must be positive and below sib9_period")
        if self.t_c % NS != 0:
            raise ConfigError("t_c must be whole nanoseconds (stamp resolution)")
        if self.gr <= 0:
            raise ConfigError("gr must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "BsConfig":
        """Build from scenario JSON keys (ns/ms units)."""
        kw = {}
        scale = {
            "gr_ns": ("gr", NS),
            "sib9_period_ms": ("sib9_period", MS),
            "sched_pre_ms": ("sched_pre", MS),
            "t_c_ns": ("t_c", NS),
            "t_p_ns": ("t_p", NS),
            "trigger_delay_ns": ("trigger_delay", NS),
            "trigger_jitter_ns": ("trigger_jitter", NS),
            "e_node_ns": ("e_node_per_hop", NS),
            "e_node_jitter_ns": ("e_node_jitter", NS),
            "e_src_ns": ("e_src", NS),
        }
        for key, (name, unit) in scale.items():
            if key in data:
                kw[name] = round(data[key] * unit)
        if "hops_to_mc" in data:
            kw["hops_to_mc"] = int(data["hops_to_mc"])
        if "reference_clock" in data:
            kw["reference_clock"] = OscillatorModel(**data["reference_clock"])
        return cls(**kw)


@dataclass(frozen=True)
class TransmitEvent:
    """One SIB9 on air, with ground-truth error decomposition."""

    boundary: int          # actual radio boundary, master time
    wire: bytes
    msg: Sib9Message
    stamp: int             # announced boundary (BS timescale), ps
    e_gr: int              # scheduling slip / staleness
    e_src: int
    e_node: int
    e_ingr: int            # trigger residual + jitter


def _signed_mod(value: int, period: int) -> int:
    r = value % period
    return r - period if r > period // 2 else r


class BaseStation:
    """Timing plug-in of one cell.

    Owns the SRS estimate cache (capacity 88, least-recently-updated
    eviction) and the deterministic draw streams for trigger and backhaul
    jitter.
    """

    def __init__(
        self,
        config: BsConfig,
        numerology: Numerology = DEFAULT_NUMEROLOGY,
        srs_reference: np.ndarray | None = None,
        seed: int = 0,
    ):
        self.config = config
        self.numerology = numerology
        self.srs_reference = srs_reference
        self.srs_cache: OrderedDict[int, int] = OrderedDict()
        self.pending_slip_frames = 0
        self._rng = np.random.default_rng(seed)
        # residual of the compensated trigger chain; zero when t_p is tuned
        # to cancel the constant delay against the next PPS edge
        self.trigger_residual = _signed_mod(config.trigger_delay + config.t_p, SEC)

    # -- SIB9 generation ---------------------------------------------------

    def frame_boundary(self, frame_index: int) -> int:
        """Intended radio boundary of a frame on the BS timescale."""
        return frame_index * FRAME + self.config.t_c

    def generate_sib9(self, target_frame: int) -> Sib9Message:
        """Build the SIB9 announcing the boundary of target_frame.

        target_frame is the absolute frame index since epoch; ref_sfn is its
        value modulo 1024.  The stamp decomposes the boundary into gr units
        plus the sub-gr residue, so stamp reconstruction is exact.
        """
        boundary = self.frame_boundary(target_frame)
        time_info = boundary // self.config.gr
        residue = boundary - time_info * self.config.gr
        msg = Sib9Message(
            time_info_utc=time_info,
            ref_sfn=target_frame % SFN_PERIOD,
            sched_pre=self.config.sched_pre // FRAME,
            t_c=residue // NS,
            ext_pairs=tuple(self.srs_cache.items()),
        )
        assert msg.stamp_ps(self.config.gr) == boundary
        return msg

    def transmit_event(self, msg: Sib9Message) -> TransmitEvent:
        """Radiate a generated SIB9; returns the actual master-time boundary.

        A pending scheduling slip shifts the emission by whole frames
        without updating ref_sfn, reproducing the retransmission error that
        the reference-SFN check exists to catch.
        """
        cfg = self.config
        stamp = msg.stamp_ps(cfg.gr)
        e_gr = self.pending_slip_frames * FRAME
        self.pending_slip_frames = 0
        e_ingr = self.trigger_residual
        if cfg.trigger_jitter > 0:
            e_ingr += round(self._rng.normal(0.0, cfg.trigger_jitter))
        e_node = cfg.hops_to_mc * cfg.e_node_per_hop
        if cfg.e_node_jitter > 0:
            e_node += round(self._rng.normal(0.0, cfg.e_node_jitter))
        boundary = stamp + e_gr + cfg.e_src + e_node + e_ingr
        return TransmitEvent(
            boundary=boundary,
            wire=encode_sib9(msg),
            msg=msg,
            stamp=stamp,
            e_gr=e_gr,
            e_src=cfg.e_src,
            e_node=e_node,
            e_ingr=e_ingr,
        )

    # -- SRS delay service ---------------------------------------------------

    def serve_srs(self, rnti: int, uplink_received: np.ndarray) -> None:
        """Estimate the uplink SRS delay for one UE and cache it.

        The UE transmits at its own slot timing, so the received offset is
        the full round trip; the cached value is the halved one-way delay in
        Tc units.  A missed detection leaves the cache untouched.
        """
        if self.srs_reference is None:
            raise ConfigError("base station has no SRS reference configured")
        try:
            est = estimate_delay(
                uplink_received, self.srs_reference, self.numerology, Method.SRS
            )
        except NoDetection:
            log.debug("SRS from rnti %#06x not detected; cache unchanged", rnti)
            return
        one_way_tc = self.numerology.ps_to_tc_units(round_div(est.value, 2))
        self.srs_cache.pop(rnti, None)
        self.srs_cache[rnti] = min(one_way_tc, 0xFFFF)
        while len(self.srs_cache) > MAX_EXT_PAIRS:
            evicted, _ = self.srs_cache.popitem(last=False)
            log.warning("SRS cache full; evicted rnti %#06x", evicted)


def capacity_per_minute(config: BsConfig) -> int:
    """High-precision delay estimations servable per minute per cell."""
    return round_div(MAX_EXT_PAIRS * 60 * SEC, config.sib9_period)
