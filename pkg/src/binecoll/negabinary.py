"""Base -2 (negabinary) encoding of rank identifiers, plus shared bit utilities.

A width-``s`` negabinary code is a bit pattern ``b_{s-1} ... b_0`` denoting
``sum(b_j * (-2)**j)``.  Unlike plain binary, a fixed width covers both
positive and negative integers; width is part of a code's identity (``010``
and ``0010`` are different codes, and partner arithmetic depends on it).

Rank identifiers for a collective over ``p = 2**s`` ranks map onto s-bit
codes: ranks up to the largest representable positive value keep their own
encoding, larger ranks are encoded as ``r - p``.  This makes the mapping a
bijection between ``[0, p)`` and all s-bit patterns.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnsupportedConfigError(ValueError):
    """A configuration the schedule builders do not support (e.g. p not a power of two)."""


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def check_rank_count(p: int) -> int:
    """Validate a rank count and return s = log2(p)."""
    if p < 2 or not is_power_of_two(p):
        raise UnsupportedConfigError(f"rank count must be a power of two >= 2, got {p}")
    return p.bit_length() - 1


def alternating_mask(width: int) -> int:
    """Mask 1010...10: ones in all odd bit positions below `width`."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    return 2 * (4 ** (width // 2) - 1) // 3


def max_positive(width: int) -> int:
    """Largest value representable in `width` negabinary bits.

    Achieved by the pattern 0101...01 (ones in all even positions), since
    only even powers of -2 contribute positively.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    return (4 ** ((width + 1) // 2) - 1) // 3


def min_value(width: int) -> int:
    """Smallest (most negative) value representable in `width` negabinary bits."""
    # The pattern 1010...10 sums only negative powers of -2, and its base -2
    # value is exactly minus its plain-binary value.
    return -alternating_mask(width)


@dataclass(frozen=True)
class NegabinaryCode:
    """A fixed-width bit pattern interpreted in base -2."""

    bits: int
    width: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"bits 0x{self.bits:x} do not fit in width {self.width}")

    @property
    def value(self) -> int:
        """The encoded integer, in [min_value(width), max_positive(width)]."""
        return decode(self)

    def bit(self, j: int) -> int:
        return (self.bits >> j) & 1

    def __str__(self) -> str:
        return format(self.bits, f"0{self.width}b")


def encode(value: int, width: int) -> NegabinaryCode:
    """Encode an integer as a width-bit negabinary code.

    Uses the closed form (value + M) XOR M with M the alternating 1010...10
    mask, which flips exactly the odd-position carries.
    """
    mask = alternating_mask(width)
    if not -mask <= value <= max_positive(width):
        raise ValueError(f"{value} is not representable in {width} negabinary bits")
    return NegabinaryCode((value + mask) ^ mask, width)


def decode(code: NegabinaryCode) -> int:
    mask = alternating_mask(code.width)
    return (code.bits ^ mask) - mask


def rank2nb(r: int, p: int) -> NegabinaryCode:
    """Negabinary code of rank r in a p-rank collective (p a power of two).

    Ranks above the largest representable positive value are encoded as
    r - p; together the two branches cover every s-bit pattern exactly once.
    """
    s = check_rank_count(p)
    if not 0 <= r < p:
        raise ValueError(f"rank {r} out of range [0, {p})")
    if r <= max_positive(s):
        return encode(r, s)
    return encode(r - p, s)


def nb2rank(code: NegabinaryCode, p: int) -> int:
    """Rank identifier for a negabinary code; exact inverse of rank2nb."""
    s = check_rank_count(p)
    if code.width != s:
        raise ValueError(f"code width {code.width} does not match log2({p}) = {s}")
    return decode(code) % p


def trailing_equal_bits(code: NegabinaryCode) -> int:
    """Length of the maximal run of identical bits starting at position 0."""
    first = code.bits & 1
    run = 0
    for j in range(code.width):
        if (code.bits >> j) & 1 != first:
            break
        run += 1
    return run
