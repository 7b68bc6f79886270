"""Adversarial link transformers: cumulative forwarding and SFN-cycle replay.

Both attackers operate on the delivery stream between the base station and
a terminal.  The forwarding node requires the genuine main path to be
blocked and inserts a growing extra delay on the relayed signaling; its
reign ends when the cumulative injection exceeds half the cyclic prefix,
at which point the terminal can no longer hold uplink synchronization and
the link drops.  The replayer captures signalings and re-emits them one
(or a configured multiple of a) whole delay later with a power advantage,
so the terminal decodes the stale copy instead of the genuine one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace as dc_replace

from .bs import TransmitEvent
from .errors import ParamError
from .units import NS, SEC, SFN_CYCLE

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackConfig:
    kind: str                              # "forwarding" | "replay"
    per_shot_offset: int = 130 * NS        # half of the default th1
    replay_delay: int = SFN_CYCLE          # 1024 frames = 10.24 s
    power_advantage_db: float = 0.0
    main_path_blocked: bool = False
    start_s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("forwarding", "replay"):
            raise ParamError(f"unknown attack kind {self.kind!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "AttackConfig":
        kw = dict(data)
        if "per_shot_offset_ns" in kw:
            kw["per_shot_offset"] = round(kw.pop("per_shot_offset_ns") * NS)
        if "replay_delay_s" in kw:
            kw["replay_delay"] = round(kw.pop("replay_delay_s") * SEC)
        return cls(**kw)

    @property
    def start(self) -> int:
        return round(self.start_s * SEC)


class ForwardingAttacker:
    """Controllable reflection node inserting per_shot_offset per signaling.

    Requires the main path to be blocked (all downlink timing flows through
    the reflector).  Each relayed SIB9 arrives with cumulative extra delay
    n * per_shot_offset; reference-signal estimation is relayed cleanly, so
    no consistency check fires and the error lands in the air-interface
    term.  Once the cumulative delay exceeds CP/2 the uplink desyncs and
    the link is reported down.
    """

    def __init__(self, config: AttackConfig, cp: int):
        if not config.main_path_blocked:
            raise ParamError("forwarding attack requires the main path blocked")
        self.config = config
        self.cap = cp // 2
        self.injections = 0
        self.cumulative = 0
        self.link_down = False

    def extra_delay(self, t_master: int) -> int | None:
        """Extra downlink delay for a delivery, or None once the link drops."""
        if self.link_down:
            return None
        if t_master < self.config.start:
            return 0
        self.injections += 1
        self.cumulative = self.injections * self.config.per_shot_offset
        if self.cumulative > self.cap:
            self.link_down = True
            log.info(
                "forwarding attack exceeded CP/2 after %d injections; uplink desync",
                self.injections,
            )
            return None
        return self.cumulative


class ReplayAttacker:
    """Middleman replaying captured signalings after replay_delay.

    Only effective with a positive power advantage (capture model: the
    terminal decodes whichever co-channel emitter is stronger).  Replays
    are stale by replay_delay, which the reference-SFN check can only
    catch when the delay is not a whole SFN cycle.
    """

    def __init__(self, config: AttackConfig):
        self.config = config
        self.active = config.power_advantage_db > 0

    def capture(self, event: TransmitEvent) -> TransmitEvent | None:
        """Buffered re-emission of one transmission, staleness in e_gr."""
        if not self.active or event.boundary < self.config.start:
            return None
        delay = self.config.replay_delay
        return dc_replace(
            event,
            boundary=event.boundary + delay,
            e_gr=event.e_gr + delay,
        )

    def suppresses_genuine(self, t_master: int) -> bool:
        """True while the replayer is transmitting over the genuine signal."""
        return self.active and t_master >= self.config.start + self.config.replay_delay


def build_attacker(config: AttackConfig | None, cp: int):
    if config is None:
        return None
    if config.kind == "forwarding":
        return ForwardingAttacker(config, cp)
    return ReplayAttacker(config)
