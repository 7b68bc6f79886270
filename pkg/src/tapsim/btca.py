"""Best TAP-clock selection for multi-gateway coordination.

Gateways expose their clock over a derived interface address (a CRC of the
UE identity placed in the host portion of the target segment) and
downstream devices pick among observed clock datasets: widely different
feature levels win outright, close levels compare backhaul hops then Allan
stability, equal levels walk the factor list priority, RSRQ, optimal tau,
hops, offset variance.  When nothing significantly distinguishes a single
best clock the tie set is returned and the coordinated time is the average
of its members' outputs.

The host CRC for /16 segments is CRC-16/ARC (poly 0x8005 reflected, zero
init), pinned by the reference vector 0A1CB0DD -> 0x8777; other host widths
take the low bits of CRC-32/ARC-style counterparts (CRC-16/ARC for widths
up to 16, CRC-32 above).
"""

from __future__ import annotations

import ipaddress
import zlib
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParamError

# Comparison tolerance: floats within this relative band do not
# significantly distinguish candidates; integers compare exactly.
REL_TOLERANCE = 0.05


def crc16_arc(data: bytes) -> int:
    """CRC-16/ARC: reflected 0x8005, init 0, no final xor."""
    crc = 0
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1
    return crc


def clk_addr(ue_id: bytes, addr_seg: int, mask: int) -> int:
    """Clock-interface address: CRC_(32-mask)(ue_id) + network(addr_seg).

    The (32-mask)-bit CRC of the identity fills the host portion of the
    segment.  mask=32 leaves no host portion and is rejected.
    """
    if not 0 <= mask < 32:
        raise ParamError("mask must be in [0, 32); mask=32 leaves no host bits")
    width = 32 - mask
    host_mask = (1 << width) - 1
    if width <= 16:
        host = crc16_arc(ue_id) & host_mask
    else:
        host = zlib.crc32(ue_id) & host_mask
    network = addr_seg & ~host_mask & 0xFFFFFFFF
    return network + host


def clk_addr_str(ue_id_hex: str, segment: str) -> str:
    """String convenience: clk_addr('0A1CB0DD', '172.16.0.0/16') form."""
    net = ipaddress.ip_network(segment, strict=False)
    addr = clk_addr(
        bytes.fromhex(ue_id_hex), int(net.network_address), net.prefixlen
    )
    return str(ipaddress.ip_address(addr))


def allocate_addresses(ue_ids: list[bytes], addr_seg: int, mask: int) -> dict[bytes, int]:
    """Derive addresses for a subnet, resolving collisions by linear probing."""
    width = 32 - mask
    host_mask = (1 << width) - 1
    taken: set[int] = set()
    out: dict[bytes, int] = {}
    for ue_id in ue_ids:
        addr = clk_addr(ue_id, addr_seg, mask)
        base = addr & ~host_mask & 0xFFFFFFFF
        while addr in taken:
            addr = base + ((addr + 1) & host_mask)
        taken.add(addr)
        out[ue_id] = addr
    return out


@dataclass(frozen=True)
class ClockDataset:
    """Per-gateway clock-quality descriptor."""

    tap_level: int
    priority: int = 128
    avg_rsrq: float = 0.0            # dB, higher is better
    tau_star: int = 0                # tau at minimum Allan variance, ps
    allan_min: float = 0.0           # minimum Allan variance
    hops_to_mc: int = 0
    offset_scale_variance: float = 0.0
    address: int = 0

    def __post_init__(self):
        if self.allan_min < 0 or self.offset_scale_variance < 0:
            raise ParamError("variance fields must be non-negative")
        if self.hops_to_mc < 0:
            raise ParamError("hops_to_mc must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "ClockDataset":
        return cls(**data)


@dataclass(frozen=True)
class Selection:
    winner: ClockDataset | None
    tie_set: tuple[ClockDataset, ...]
    rationale: tuple[str, ...]

    @property
    def is_tie(self) -> bool:
        return self.winner is None

    def to_dict(self) -> dict:
        def enc(ds):
            return {
                "tap_level": ds.tap_level, "priority": ds.priority,
                "avg_rsrq": ds.avg_rsrq, "tau_star": ds.tau_star,
                "allan_min": ds.allan_min, "hops_to_mc": ds.hops_to_mc,
                "offset_scale_variance": ds.offset_scale_variance,
                "address": ds.address,
            }
        if self.winner is not None:
            return {"winner": enc(self.winner), "rationale": list(self.rationale)}
        return {"tie_set": [enc(d) for d in self.tie_set],
                "rationale": list(self.rationale)}


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOLERANCE * max(abs(a), abs(b))


def _narrow(pool, key, lower_better, exact, name, rationale):
    """Keep candidates not significantly worse than the best on one factor."""
    best = min(pool, key=key) if lower_better else max(pool, key=key)
    best_val = key(best)
    if exact:
        kept = [c for c in pool if key(c) == best_val]
    else:
        kept = [c for c in pool if _close(key(c), best_val)]
    if len(kept) < len(pool):
        rationale.append(name)
    return kept


def best_clock(candidates: list[ClockDataset]) -> Selection:
    """Dataset comparison: a single best clock or the coordinated tie set.

    A feature-level gap above 2 removes the lower clock outright; clocks
    within 2 levels keep comparing.  Mixed surviving levels compare hops to
    the master clock then minimum Allan variance; a pool of equal levels
    compares priority (lower wins), average RSRQ (higher), tau at the Allan
    minimum (lower), hops (lower) and offset scale variance (lower).
    """
    if not candidates:
        raise ParamError("candidate list is empty")
    rationale: list[str] = []
    max_level = max(c.tap_level for c in candidates)
    pool = [c for c in candidates if max_level - c.tap_level <= 2]
    if len(pool) < len(candidates):
        rationale.append("tap_level")
    if len(pool) > 1:
        if all(c.tap_level == pool[0].tap_level for c in pool):
            factors = [
                (lambda c: c.priority, True, True, "priority"),
                (lambda c: c.avg_rsrq, False, False, "avg_rsrq"),
                (lambda c: c.tau_star, True, False, "tau_star"),
                (lambda c: c.hops_to_mc, True, True, "hops_to_mc"),
                (lambda c: c.offset_scale_variance, True, False, "offset_scale_variance"),
            ]
        else:
            factors = [
                (lambda c: c.hops_to_mc, True, True, "hops_to_mc"),
                (lambda c: c.allan_min, True, False, "allan_min"),
            ]
        for key, lower, exact, name in factors:
            pool = _narrow(pool, key, lower, exact, name, rationale)
            if len(pool) == 1:
                break
    if len(pool) == 1:
        return Selection(winner=pool[0], tie_set=(), rationale=tuple(rationale))
    # preserve input order for determinism of the reported set
    ordered = tuple(c for c in candidates if c in pool)
    return Selection(winner=None, tie_set=ordered, rationale=tuple(rationale))


def coordinate(outputs: list[int]) -> int:
    """Coordinated clock: mean of the member outputs, half-to-even rounding."""
    if not outputs:
        raise ParamError("cannot coordinate an empty set")
    return round(Fraction(sum(outputs), len(outputs)))
