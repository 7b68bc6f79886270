import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tapsim.errors import CapacityError, DecodeError, EncodeError, ParamError
from tapsim.signaling import (
    CRC_BITS,
    HEADER_BITS,
    MAX_EXT_PAIRS,
    PAIR_BITS,
    SI_MAX_BITS,
    Sib9Message,
    decode_sib9,
    encode_sib9,
    encoded_bits,
    from_hex,
    signaling_overhead,
    to_hex,
)
from tapsim.units import MS, SEC

VECTORS = json.loads((Path(__file__).parent / "data" / "sib9_vectors.json").read_text())

pair_st = st.tuples(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
msg_st = st.builds(
    Sib9Message,
    time_info_utc=st.integers(0, 2**48 - 1),
    ref_sfn=st.integers(0, 1023),
    sched_pre=st.integers(0, 255),
    t_c=st.integers(-(2**29), 2**29 - 1),
    ext_pairs=st.lists(pair_st, max_size=MAX_EXT_PAIRS).map(tuple),
)


class TestRoundTrip:
    def test_zero_message_is_128_bits(self):
        wire = encode_sib9(Sib9Message())
        assert len(wire) * 8 == 128
        msg, crc_ok = decode_sib9(wire)
        assert msg == Sib9Message()
        assert crc_ok

    @settings(max_examples=500, deadline=None)
    @given(msg_st)
    def test_random_roundtrip(self, msg):
        decoded, crc_ok = decode_sib9(encode_sib9(msg))
        assert decoded == msg
        assert crc_ok

    def test_frozen_vectors(self):
        for vec in VECTORS:
            msg = Sib9Message(
                time_info_utc=vec["time_info_utc"],
                ref_sfn=vec["ref_sfn"],
                sched_pre=vec["sched_pre"],
                t_c=vec["t_c"],
                ext_pairs=tuple(tuple(p) for p in vec["ext_pairs"]),
            )
            assert to_hex(encode_sib9(msg)) == vec["expected_hex"]
            decoded, crc_ok = decode_sib9(from_hex(vec["expected_hex"]))
            assert decoded == msg and crc_ok


class TestCapacity:
    def test_capacity_constant(self):
        assert MAX_EXT_PAIRS == 88
        assert HEADER_BITS + MAX_EXT_PAIRS * PAIR_BITS + CRC_BITS <= SI_MAX_BITS

    def test_88_pairs_length(self):
        msg = Sib9Message(ext_pairs=tuple((i, i) for i in range(88)))
        wire = encode_sib9(msg)
        assert len(wire) * 8 == 96 + 2816 + 32 == 2944

    def test_89_pairs_rejected(self):
        msg = Sib9Message(ext_pairs=tuple((i, i) for i in range(89)))
        with pytest.raises(CapacityError):
            encode_sib9(msg)

    @pytest.mark.parametrize(
        "msg",
        [
            Sib9Message(time_info_utc=2**48),
            Sib9Message(ref_sfn=1024),
            Sib9Message(sched_pre=256),
            Sib9Message(t_c=2**29),
            Sib9Message(t_c=-(2**29) - 1),
            Sib9Message(ext_pairs=((2**16, 0),)),
        ],
    )
    def test_out_of_range_fields(self, msg):
        with pytest.raises(EncodeError):
            encode_sib9(msg)


class TestCrc:
    @settings(max_examples=200, deadline=None)
    @given(msg_st, st.data())
    def test_single_bit_flip_detected(self, msg, data):
        wire = bytearray(encode_sib9(msg))
        bit = data.draw(st.integers(0, len(wire) * 8 - 1))
        wire[bit // 8] ^= 1 << (7 - bit % 8)
        decoded, crc_ok = decode_sib9(bytes(wire))
        assert not crc_ok

    @settings(max_examples=100, deadline=None)
    @given(msg_st, st.data())
    def test_burst_up_to_32_bits_detected(self, msg, data):
        wire = bytearray(encode_sib9(msg))
        nbits = len(wire) * 8
        burst_len = data.draw(st.integers(1, 32))
        start = data.draw(st.integers(0, nbits - burst_len))
        pattern = data.draw(st.integers(1, 2**burst_len - 1))
        # force nonzero first bit so the burst length is exactly burst_len
        pattern |= 1 << (burst_len - 1)
        for i in range(burst_len):
            if (pattern >> (burst_len - 1 - i)) & 1:
                pos = start + i
                wire[pos // 8] ^= 1 << (7 - pos % 8)
        _, crc_ok = decode_sib9(bytes(wire))
        assert not crc_ok

    def test_decode_succeeds_with_bad_crc(self):
        wire = bytearray(encode_sib9(Sib9Message(ref_sfn=99)))
        wire[0] ^= 0x80
        msg, crc_ok = decode_sib9(bytes(wire))
        assert not crc_ok
        assert msg.ref_sfn == 99  # fields still decoded positionally


class TestDecodeErrors:
    def test_truncated(self):
        wire = encode_sib9(Sib9Message())
        with pytest.raises(DecodeError):
            decode_sib9(wire[:-1])

    def test_not_pair_aligned(self):
        wire = encode_sib9(Sib9Message()) + b"\x00\x01"
        with pytest.raises(DecodeError):
            decode_sib9(wire)

    def test_empty(self):
        with pytest.raises(DecodeError):
            decode_sib9(b"")


class TestOverhead:
    def test_full_si_budget_at_320ms(self):
        assert signaling_overhead(320 * MS, SI_MAX_BITS) == 9300.0

    def test_per_ue_share(self):
        per_ue = signaling_overhead(320 * MS, SI_MAX_BITS) / 88
        assert round(per_ue) == 106

    def test_empty_message_400bps(self):
        assert signaling_overhead(320 * MS, Sib9Message()) == 400.0

    def test_message_argument_uses_encoded_length(self):
        msg = Sib9Message(ext_pairs=((1, 1),))
        assert signaling_overhead(SEC, msg) == encoded_bits(msg)

    def test_bad_period(self):
        with pytest.raises(ParamError):
            signaling_overhead(0, Sib9Message())
