import ipaddress
import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tapsim.btca import (
    ClockDataset,
    Selection,
    allocate_addresses,
    best_clock,
    clk_addr,
    clk_addr_str,
    coordinate,
    crc16_arc,
)
from tapsim.errors import ParamError
from tapsim.units import NS, SEC


class TestCrc16Arc:
    def test_standard_check_string(self):
        assert crc16_arc(b"123456789") == 0xBB3D

    def test_reference_identity_vector(self):
        # the documented gateway example: CRC16(0A 1C B0 DD) = 0x8777
        assert crc16_arc(bytes([0x0A, 0x1C, 0xB0, 0xDD])) == 0x8777

    def test_empty(self):
        assert crc16_arc(b"") == 0


class TestClkAddr:
    def test_paper_vector_172_16_135_119(self):
        addr = clk_addr(bytes([0x0A, 0x1C, 0xB0, 0xDD]), int(ipaddress.ip_address("172.16.0.0")), 16)
        assert str(ipaddress.ip_address(addr)) == "172.16.135.119"

    def test_string_form(self):
        assert clk_addr_str("0A1CB0DD", "172.16.0.0/16") == "172.16.135.119"

    def test_all_zero_id_regression(self):
        # frozen regression value for the pinned CRC variant
        host = crc16_arc(bytes(4))
        addr = clk_addr(bytes(4), int(ipaddress.ip_address("10.0.0.0")), 16)
        assert addr == int(ipaddress.ip_address("10.0.0.0")) + host

    def test_mask_32_rejected(self):
        with pytest.raises(ParamError):
            clk_addr(b"\x01", 0, 32)

    def test_host_fits_width(self):
        for mask in (0, 8, 12, 16, 20, 24, 30):
            addr = clk_addr(b"\xDE\xAD\xBE\xEF", int(ipaddress.ip_address("192.168.0.0")), mask)
            host = addr & ((1 << (32 - mask)) - 1)
            assert 0 <= host < (1 << (32 - mask))

    @settings(max_examples=200, deadline=None)
    @given(st.binary(min_size=1, max_size=8), st.binary(min_size=1, max_size=8))
    def test_distinct_ids_mostly_distinct(self, a, b):
        seg = int(ipaddress.ip_address("172.16.0.0"))
        if crc16_arc(a) != crc16_arc(b):
            assert clk_addr(a, seg, 16) != clk_addr(b, seg, 16)

    def test_collision_probing(self):
        seg = int(ipaddress.ip_address("172.16.0.0"))
        ids = [b"\x00", b"\x00\x00"]   # same CRC? force by duplicating id
        ids = [b"same", b"same"]
        table = allocate_addresses(ids[0:1] + ids[0:1], seg, 16)
        # dict keyed by id collapses duplicates; use distinct ids with equal crc
        a = allocate_addresses([b"x"], seg, 16)[b"x"]
        table = allocate_addresses([b"x", b"x" + b""], seg, 16)
        assert len(set(table.values())) == len(table)


def ds(**kw):
    base = dict(tap_level=6, priority=128, avg_rsrq=-10.0, tau_star=8 * SEC,
                allan_min=1e-18, hops_to_mc=2, offset_scale_variance=1e-16,
                address=0)
    base.update(kw)
    return ClockDataset(**base)


class TestBestClock:
    def test_single_candidate(self):
        only = ds()
        sel = best_clock([only])
        assert sel.winner == only

    def test_level_gap_over_2_wins_outright(self):
        strong, weak = ds(tap_level=5), ds(tap_level=2, hops_to_mc=0, allan_min=0.0)
        sel = best_clock([weak, strong])
        assert sel.winner == strong
        assert "tap_level" in sel.rationale

    def test_level_gap_of_2_keeps_comparing(self):
        a = ds(tap_level=5, hops_to_mc=4)
        b = ds(tap_level=3, hops_to_mc=1)
        sel = best_clock([a, b])
        assert sel.winner == b           # fewer hops wins among close levels
        assert "hops_to_mc" in sel.rationale

    def test_close_levels_fall_back_to_allan(self):
        a = ds(tap_level=5, hops_to_mc=2, allan_min=5e-18)
        b = ds(tap_level=4, hops_to_mc=2, allan_min=1e-18)
        sel = best_clock([a, b])
        assert sel.winner == b
        assert "allan_min" in sel.rationale

    def test_equal_level_factor_order(self):
        a = ds(priority=1)
        b = ds(priority=2)
        sel = best_clock([a, b])
        assert sel.winner == a and sel.rationale == ("priority",)
        c = ds(avg_rsrq=-5.0)
        d = ds(avg_rsrq=-15.0)
        sel = best_clock([c, d])
        assert sel.winner == c and sel.rationale == ("avg_rsrq",)
        e = ds(tau_star=4 * SEC)
        f = ds(tau_star=32 * SEC)
        assert best_clock([e, f]).winner == e

    def test_identical_datasets_tie(self):
        a, b = ds(), ds()
        sel = best_clock([a, b])
        assert sel.is_tie
        assert len(sel.tie_set) == 2

    def test_insignificant_difference_ties(self):
        a = ds(allan_min=1.00e-18, tap_level=5)
        b = ds(allan_min=1.02e-18, tap_level=4)   # within 5 percent
        sel = best_clock([a, b])
        assert sel.is_tie

    def test_order_independence(self):
        pool = [ds(priority=3), ds(priority=1), ds(priority=2, hops_to_mc=0)]
        winners = set()
        for perm in itertools.permutations(pool):
            sel = best_clock(list(perm))
            winners.add(sel.winner)
        assert len(winners) == 1

    def test_monotonicity_improving_winner_keeps_winning(self):
        import numpy as np
        rng = np.random.default_rng(12)
        for _ in range(50):
            pool = [
                ds(
                    tap_level=int(rng.integers(3, 7)),
                    priority=int(rng.integers(1, 4)),
                    avg_rsrq=float(rng.uniform(-20, -5)),
                    tau_star=int(rng.integers(1, 64)) * SEC,
                    allan_min=float(rng.uniform(1e-19, 1e-17)),
                    hops_to_mc=int(rng.integers(0, 5)),
                    offset_scale_variance=float(rng.uniform(1e-18, 1e-15)),
                )
                for _ in range(4)
            ]
            sel = best_clock(pool)
            if sel.winner is None:
                continue
            w = sel.winner
            improved = ClockDataset(
                tap_level=w.tap_level, priority=max(w.priority - 1, 0),
                avg_rsrq=w.avg_rsrq, tau_star=w.tau_star,
                allan_min=w.allan_min, hops_to_mc=w.hops_to_mc,
                offset_scale_variance=w.offset_scale_variance, address=w.address,
            )
            pool2 = [improved if c == w else c for c in pool]
            sel2 = best_clock(pool2)
            assert sel2.winner == improved

    def test_empty_rejected(self):
        with pytest.raises(ParamError):
            best_clock([])


class TestCoordinate:
    def test_identity(self):
        assert coordinate([42]) == 42

    def test_mean_of_two(self):
        t = 1_000_000
        assert coordinate([t, t + 10 * NS]) == t + 5 * NS

    def test_idempotent_on_identical(self):
        assert coordinate([7 * SEC] * 5) == 7 * SEC

    def test_half_to_even(self):
        assert coordinate([0, 1]) == 0       # 0.5 rounds to even 0
        assert coordinate([1, 2]) == 2       # 1.5 rounds to even 2

    def test_empty_rejected(self):
        with pytest.raises(ParamError):
            coordinate([])
