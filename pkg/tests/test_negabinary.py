import pytest
from hypothesis import given, strategies as st

from binecoll.negabinary import (
    NegabinaryCode,
    UnsupportedConfigError,
    alternating_mask,
    decode,
    encode,
    max_positive,
    min_value,
    nb2rank,
    rank2nb,
    trailing_equal_bits,
)


def digit_sum(bits: int, width: int) -> int:
    """Independent oracle: evaluate a bit pattern as sum of b_j * (-2)**j."""
    return sum(((bits >> j) & 1) * (-2) ** j for j in range(width))


def code(text: str) -> NegabinaryCode:
    return NegabinaryCode(int(text, 2), len(text))


class TestEncodeDecode:
    def test_rank2nb_of_2_in_8_ranks(self):
        assert str(rank2nb(2, 8)) == "110"

    def test_rank2nb_of_6_in_8_ranks(self):
        # 6 exceeds the positive limit for 3 bits, so it encodes as 6 - 8 = -2.
        assert str(rank2nb(6, 8)) == "010"

    def test_rank_zero_encodes_as_zero(self):
        for p in (2, 4, 8, 64, 1024):
            assert rank2nb(0, p).bits == 0

    def test_nb2rank_direct_arithmetic(self):
        # 111 -> 4 - 2 + 1 = 3, 011 -> -2 + 1 = -1 = 7 mod 8.
        assert digit_sum(0b111, 3) == 3
        assert nb2rank(code("111"), 8) == 3
        assert digit_sum(0b011, 3) == -1
        assert nb2rank(code("011"), 8) == 7

    @pytest.mark.parametrize("p", [2, 4, 8, 16, 64, 256, 1024, 65536])
    def test_round_trip_all_ranks(self, p):
        assert [nb2rank(rank2nb(r, p), p) for r in range(p)] == list(range(p))

    @pytest.mark.parametrize("p", [2, 8, 64, 1024])
    def test_bijection_onto_bit_patterns(self, p):
        codes = {rank2nb(r, p).bits for r in range(p)}
        assert codes == set(range(p))

    def test_decode_matches_digit_sum(self):
        for width in range(1, 11):
            for bits in range(1 << width):
                assert decode(NegabinaryCode(bits, width)) == digit_sum(bits, width)

    def test_encode_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            encode(max_positive(3) + 1, 3)
        with pytest.raises(ValueError):
            encode(min_value(3) - 1, 3)

    def test_rank2nb_rejects_bad_inputs(self):
        with pytest.raises(UnsupportedConfigError):
            rank2nb(0, 6)
        with pytest.raises(UnsupportedConfigError):
            rank2nb(0, 1)
        with pytest.raises(ValueError):
            rank2nb(8, 8)
        with pytest.raises(ValueError):
            rank2nb(-1, 8)

    def test_nb2rank_rejects_width_mismatch(self):
        with pytest.raises(ValueError):
            nb2rank(code("0010"), 8)

    @given(st.integers(min_value=1, max_value=16), st.integers(min_value=0))
    def test_round_trip_property(self, s, seed):
        p = 1 << s
        r = seed % p
        assert nb2rank(rank2nb(r, p), p) == r


class TestRanges:
    def test_max_positive_paper_values(self):
        assert max_positive(6) == 21
        assert max_positive(3) == 5
        assert max_positive(1) == 1

    def test_max_positive_is_alternating_pattern_value(self):
        for width in range(1, 16):
            pattern = sum(1 << j for j in range(0, width, 2))
            assert max_positive(width) == digit_sum(pattern, width)

    def test_min_value_is_odd_mask_value(self):
        for width in range(1, 16):
            assert min_value(width) == digit_sum(alternating_mask(width), width)

    def test_max_positive_is_largest_nonnegative_rank_code(self):
        # max_positive(s) is the last rank whose code keeps a non-negative value.
        for s in range(1, 11):
            p = 1 << s
            m = max_positive(s)
            values = [decode(rank2nb(r, p)) for r in range(p)]
            assert all(v >= 0 for v in values[: m + 1])
            assert all(v < 0 for v in values[m + 1 :])


class TestTrailingEqualBits:
    def test_paper_examples(self):
        assert trailing_equal_bits(code("1000")) == 3
        assert trailing_equal_bits(code("1011")) == 2

    def test_uniform_patterns(self):
        assert trailing_equal_bits(code("0000")) == 4
        assert trailing_equal_bits(code("1111")) == 4

    @given(st.integers(min_value=1, max_value=14), st.integers(min_value=0))
    def test_run_is_maximal(self, width, seed):
        bits = seed % (1 << width)
        c = NegabinaryCode(bits, width)
        u = trailing_equal_bits(c)
        first = bits & 1
        assert 1 <= u <= width
        assert all(c.bit(j) == first for j in range(u))
        if u < width:
            assert c.bit(u) != first


class TestXorBasis:
    def test_all_ones_masks_form_a_basis(self):
        # Every s-bit pattern is a unique XOR of a subset of {1, 11, ..., 1^s}.
        for s in range(1, 13):
            masks = [(1 << k) - 1 for k in range(1, s + 1)]
            seen = set()
            for v in range(1 << s):
                subset, acc = [], v
                while acc:
                    k = acc.bit_length()
                    subset.append(k)
                    acc ^= masks[k - 1]
                rebuilt = 0
                for k in subset:
                    rebuilt ^= masks[k - 1]
                assert rebuilt == v
                seen.add(tuple(sorted(subset)))
            assert len(seen) == 1 << s
