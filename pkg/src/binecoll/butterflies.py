"""Per-step perfect-matching partner functions for butterfly exchanges.

A butterfly runs s = log2(p) synchronous rounds in which every rank
exchanges with exactly one partner.  Four matchings are provided:

* negabinary distance-halving: at step i even ranks add and odd ranks
  subtract the signed offset (1 - (-2)**(s-i)) / 3, so partner distances
  shrink roughly by half each step (p*2/3, ..., 3, 1, 1);
* negabinary distance-doubling: the same offsets walked in reverse step
  order (1, 1, 3, ..., p*2/3);
* recursive halving / doubling: the classic hypercube matchings that flip
  bit s-i-1 / bit i of the rank.

Butterflies are root-free; no rank rotation is ever needed.
"""

from __future__ import annotations

from enum import Enum

from .negabinary import check_rank_count


class ButterflyKind(str, Enum):
    BINE_HALVING = "bine_halving"
    BINE_DOUBLING = "bine_doubling"
    RECURSIVE_HALVING = "recursive_halving"
    RECURSIVE_DOUBLING = "recursive_doubling"


def bine_offset(i: int, s: int) -> int:
    """Signed offset an even rank adds to reach its halving step-i partner.

    Exact integer form of (1 - (-2)**(s-i)) / 3; its magnitude is the
    negabinary step distance and its sign alternates with s - i.
    """
    if not 0 <= i < s:
        raise ValueError(f"step {i} out of range [0, {s})")
    return (1 - (-2) ** (s - i)) // 3


def butterfly_partner(kind: ButterflyKind, r: int, i: int, p: int) -> int:
    """Exchange partner of rank r at step i; an involution with no fixed points."""
    s = check_rank_count(p)
    if not 0 <= r < p:
        raise ValueError(f"rank {r} out of range [0, {p})")
    if not 0 <= i < s:
        raise ValueError(f"step {i} out of range [0, {s})")
    kind = ButterflyKind(kind)
    if kind == ButterflyKind.RECURSIVE_DOUBLING:
        return r ^ (1 << i)
    if kind == ButterflyKind.RECURSIVE_HALVING:
        return r ^ (1 << (s - 1 - i))
    if kind == ButterflyKind.BINE_DOUBLING:
        i = s - 1 - i
    off = bine_offset(i, s)
    return (r + off) % p if r % 2 == 0 else (r - off) % p
