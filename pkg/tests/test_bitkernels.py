"""Word-kernel checks: bit traces, exhaustive adder truth, mask coverage."""

import numpy as np
import pytest

from multispin.bitkernels import (
    MASKS,
    bitwise_add4,
    get_bit_above,
    get_bit_below,
    nibble_compact,
)


def u16(*values):
    return np.array(values, dtype=np.uint16)


class TestShifts:
    def test_bit_above_trace(self):
        # bit 15 arrives from the word above, bits 0..14 shift down
        assert get_bit_above(u16(0x0000, 0x0003, 0x0001)).tolist() == [0x8001]

    def test_bit_below_trace(self):
        assert get_bit_below(u16(0x8000, 0xC000, 0x0000)).tolist() == [0x8001]

    @pytest.mark.parametrize("func", [get_bit_above, get_bit_below])
    def test_saturation_and_zero(self, func):
        assert func(u16(0xFFFF, 0xFFFF, 0xFFFF)).tolist() == [0xFFFF]
        assert func(u16(0, 0, 0, 0, 0)).tolist() == [0, 0, 0]

    @pytest.mark.parametrize("func", [get_bit_above, get_bit_below])
    def test_too_short_rejected(self, func):
        with pytest.raises(ValueError):
            func(u16(1, 2))

    @pytest.mark.parametrize("func", [get_bit_above, get_bit_below])
    def test_wrong_dtype_rejected(self, func):
        with pytest.raises(TypeError):
            func(np.array([1, 2, 3], dtype=np.int16))

    def test_against_unpack_shift_repack(self):
        # Oracle: spread the words to bits, shift the whole bit string by
        # one, and repack the interior words.
        rng = np.random.default_rng(123)
        for _ in range(1000):
            length = int(rng.integers(3, 11))
            v = rng.integers(0, 1 << 16, size=length).astype(np.uint16)
            bits = ((v[:, None] >> np.arange(16)) & 1).reshape(-1)  # low bit first
            above = np.roll(bits, -1)  # value one position up the string
            below = np.roll(bits, 1)
            repack = lambda b: (
                (b.reshape(length, 16) << np.arange(16)).sum(axis=1).astype(np.uint16)
            )
            assert (get_bit_above(v) == repack(above)[1:-1]).all()
            assert (get_bit_below(v) == repack(below)[1:-1]).all()

    def test_multidimensional_last_axis(self):
        v = np.arange(24, dtype=np.uint16).reshape(2, 3, 4)
        out = get_bit_above(v)
        assert out.shape == (2, 3, 2)
        assert (out[1, 2] == get_bit_above(v[1, 2])).all()


class TestAdd4:
    def test_exhaustive_all_input_combinations(self):
        # One word per operand bit: lane q of (a, b, c, d) spells out q's
        # bits, covering all 16 combinations at once.
        a, b, c, d = (u16(x)[0] for x in (0xFF00, 0xF0F0, 0xCCCC, 0xAAAA))
        ones, twos, fours = bitwise_add4(a, b, c, d)
        for lane in range(16):
            expected = sum((int(x) >> lane) & 1 for x in (a, b, c, d))
            got = (
                ((int(ones) >> lane) & 1)
                + 2 * ((int(twos) >> lane) & 1)
                + 4 * ((int(fours) >> lane) & 1)
            )
            assert got == expected, f"lane {lane}"

    @pytest.mark.parametrize(
        "pattern,expected",
        [((1, 1, 1, 1), (0, 0, 1)), ((1, 1, 1, 0), (1, 1, 0)), ((0, 0, 0, 0), (0, 0, 0))],
    )
    def test_single_lane_patterns(self, pattern, expected):
        full = [np.uint16(0xFFFF * p) for p in pattern]
        ones, twos, fours = bitwise_add4(*full)
        want = tuple(np.uint16(0xFFFF * e) for e in expected)
        assert (ones, twos, fours) == want

    def test_random_vectors_match_integer_addition(self):
        rng = np.random.default_rng(7)
        a, b, c, d = (rng.integers(0, 1 << 16, size=64).astype(np.uint16) for _ in range(4))
        ones, twos, fours = bitwise_add4(a, b, c, d)
        for lane in range(16):
            bit = lambda v: (v.astype(np.int32) >> lane) & 1
            total = bit(a) + bit(b) + bit(c) + bit(d)
            assert (bit(ones) + 2 * bit(twos) + 4 * bit(fours) == total).all()

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bitwise_add4(u16(1, 2), u16(1, 2), u16(1, 2), u16(1, 2, 3))


class TestNibbleCompact:
    def test_own_spin_lands_in_eights_place(self):
        zero = np.uint16(0)
        assert nibble_compact(zero, zero, zero, np.uint16(0xFFFF), 0) == 0x8888

    def test_mask_selection(self):
        zero = np.uint16(0)
        assert nibble_compact(np.uint16(0xFFFF), zero, zero, zero, 3) == 0x1111

    def test_positions_form_permutation(self):
        # (i, ii) pairs cover each of the 16 bit positions exactly once.
        positions = sorted(4 * ii + i for i in range(4) for ii in range(4))
        assert positions == list(range(16))

    def test_fields_encode_code_for_random_inputs(self):
        rng = np.random.default_rng(42)
        a, b, c, d, s = (rng.integers(0, 1 << 16, size=32).astype(np.uint16) for _ in range(5))
        ones, twos, fours = bitwise_add4(a, b, c, d)
        for i in range(4):
            ssum = nibble_compact(ones, twos, fours, s, i)
            for ii in range(4):
                p = 4 * ii + i
                code = (ssum.astype(np.int64) >> (4 * ii)) & 15
                bit = lambda v: (v.astype(np.int64) >> p) & 1
                brute = 8 * bit(s) + bit(a) + bit(b) + bit(c) + bit(d)
                assert (code == brute).all()

    def test_bad_mask_index_rejected(self):
        z = np.uint16(0)
        with pytest.raises(IndexError):
            nibble_compact(z, z, z, z, 4)
        with pytest.raises(IndexError):
            nibble_compact(z, z, z, z, -1)

    def test_masks_tuple(self):
        assert MASKS == (0x1111, 0x2222, 0x4444, 0x8888)
