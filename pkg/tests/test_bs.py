import numpy as np
import pytest

from tapsim.bs import BaseStation, BsConfig, capacity_per_minute
from tapsim.clock import OscillatorModel
from tapsim.errors import ConfigError
from tapsim.phy import DEFAULT_NUMEROLOGY, ChannelRealization, apply_channel, gen_zc
from tapsim.signaling import GR_10NS, decode_sib9
from tapsim.units import FRAME, MS, NS, SEC, distance_to_delay

NUM = DEFAULT_NUMEROLOGY


def make_bs(**kw) -> BaseStation:
    cfg = BsConfig(**kw)
    return BaseStation(cfg, NUM, srs_reference=gen_zc(1, 139), seed=1)


class TestConfig:
    def test_defaults_match_prototype_settings(self):
        cfg = BsConfig()
        assert cfg.sib9_period == 320 * MS
        assert cfg.sched_pre == 20 * MS
        assert cfg.t_c == 4 * NS
        assert cfg.t_p == SEC - 22 * NS

    def test_period_must_align_to_frames(self):
        with pytest.raises(ConfigError):
            BsConfig(sib9_period=325 * MS)

    def test_sched_pre_below_period(self):
        with pytest.raises(ConfigError):
            BsConfig(sched_pre=320 * MS)

    def test_from_dict_units(self):
        cfg = BsConfig.from_dict(
            {"sib9_period_ms": 640, "t_c_ns": 4, "hops_to_mc": 3, "e_node_ns": 2}
        )
        assert cfg.sib9_period == 640 * MS
        assert cfg.hops_to_mc == 3
        assert cfg.e_node_per_hop == 2 * NS


class TestGenerateSib9:
    def test_stamp_reconstruction_exact(self):
        bs = make_bs()
        for frame in (32, 1023, 1024, 918_273):
            msg = bs.generate_sib9(frame)
            assert msg.stamp_ps(bs.config.gr) == frame * FRAME + 4 * NS
            assert msg.ref_sfn == frame % 1024

    def test_boundary_on_grid_gives_zero_residue(self):
        bs = make_bs(t_c=0)
        msg = bs.generate_sib9(64)
        assert msg.t_c == 0
        assert msg.time_info_utc == 64 * FRAME // bs.config.gr

    def test_boundary_4ns_off_grid(self):
        bs = make_bs(t_c=4 * NS)
        msg = bs.generate_sib9(64)
        assert msg.t_c == 4

    def test_10ns_granularity_mode(self):
        bs = make_bs(gr=GR_10NS, t_c=4 * NS)
        msg = bs.generate_sib9(5)
        assert msg.stamp_ps(GR_10NS) == 5 * FRAME + 4 * NS
        assert 0 <= msg.t_c * NS < GR_10NS

    def test_sched_pre_field(self):
        bs = make_bs(sched_pre=20 * MS)
        assert bs.generate_sib9(10).sched_pre == 2


class TestTransmit:
    def test_perfect_trigger_zero_error(self):
        bs = make_bs(trigger_delay=0, t_p=SEC, trigger_jitter=0)
        ev = bs.transmit_event(bs.generate_sib9(12))
        assert ev.boundary == ev.stamp
        assert ev.e_ingr == 0

    def test_tuned_compensation_cancels_constant_delay(self):
        bs = make_bs(trigger_delay=22 * NS, t_p=SEC - 22 * NS)
        assert bs.trigger_residual == 0

    def test_uncompensated_delay_appears(self):
        bs = make_bs(trigger_delay=22 * NS, t_p=SEC)
        assert bs.trigger_residual == 22 * NS

    def test_jitter_statistics(self):
        bs = make_bs(trigger_jitter=5 * NS)
        errs = [
            bs.transmit_event(bs.generate_sib9(32 * (k + 1))).e_ingr
            for k in range(1000)
        ]
        std = float(np.std(errs))
        assert abs(std / (5 * NS) - 1.0) < 0.2

    def test_slip_shifts_by_frames_without_sfn_update(self):
        bs = make_bs()
        msg = bs.generate_sib9(100)
        bs.pending_slip_frames = 2
        ev = bs.transmit_event(msg)
        assert ev.e_gr == 2 * FRAME
        assert ev.boundary == ev.stamp + 2 * FRAME
        assert ev.msg.ref_sfn == 100  # stale reference

    def test_clock_error_constants_shift_boundary(self):
        bs = make_bs(e_src=7 * NS, hops_to_mc=3, e_node_per_hop=2 * NS)
        ev = bs.transmit_event(bs.generate_sib9(50))
        assert ev.e_src == 7 * NS
        assert ev.e_node == 6 * NS
        assert ev.boundary == ev.stamp + 13 * NS

    def test_wire_decodes_back(self):
        bs = make_bs()
        bs.srs_cache[0x4601] = 983
        ev = bs.transmit_event(bs.generate_sib9(77))
        msg, crc_ok = decode_sib9(ev.wire)
        assert crc_ok and msg == ev.msg
        assert msg.ext_pairs == ((0x4601, 983),)


class TestServeSrs:
    def test_one_way_cached_within_half_sample(self):
        bs = make_bs()
        one_way = distance_to_delay(150.0)   # ~500 ns
        ch = ChannelRealization(snr_db=None)
        uplink = apply_channel(bs.srs_reference, ch, 2 * one_way, seed=0, numerology=NUM)
        bs.serve_srs(0x17, uplink)
        cached_ps = NUM.tc_units_to_ps(bs.srs_cache[0x17])
        assert abs(cached_ps - one_way) <= NUM.ts / 2

    def test_capacity_88_most_recent(self):
        bs = make_bs()
        ch = ChannelRealization(snr_db=None)
        uplink = apply_channel(bs.srs_reference, ch, 1000 * NS, seed=0, numerology=NUM)
        for rnti in range(89):
            bs.serve_srs(rnti, uplink)
        assert len(bs.srs_cache) == 88
        assert 0 not in bs.srs_cache       # oldest evicted
        assert 88 in bs.srs_cache

    def test_same_rnti_updates_in_place(self):
        bs = make_bs()
        ch = ChannelRealization(snr_db=None)
        for rt in (1000 * NS, 1400 * NS):
            uplink = apply_channel(bs.srs_reference, ch, rt, seed=0, numerology=NUM)
            bs.serve_srs(0x17, uplink)
        assert len(bs.srs_cache) == 1
        assert abs(NUM.tc_units_to_ps(bs.srs_cache[0x17]) - 700 * NS) <= NUM.ts / 2

    def test_no_detection_leaves_cache(self):
        bs = make_bs()
        rng = np.random.default_rng(0)
        noise = rng.normal(0, 1, 500) + 1j * rng.normal(0, 1, 500)
        bs.serve_srs(0x17, noise)
        assert 0x17 not in bs.srs_cache


class TestCapacity:
    @pytest.mark.parametrize(
        "period_ms,expected",
        [(320, 16_500), (640, 8_250), (160, 33_000)],
    )
    def test_estimations_per_minute(self, period_ms, expected):
        assert capacity_per_minute(BsConfig(sib9_period=period_ms * MS)) == expected
