"""Spanning communication trees: negabinary (distance-halving and
distance-doubling) and classic binomial, for any root.

Every tree is materialized as an explicit edge list ``(child, parent, step)``
over ``p = 2**s`` ranks with step indices in ``[0, s)``.  Trees for a root
``t != 0`` are built in virtual rank space (rank minus root, modulo p) and
relabeled, so partner arithmetic always runs on virtual rank 0 trees.

Partner selection:

* halving trees: the step-i partner of a rank differs in the s-i least
  significant bits of its negabinary code, and a rank joins the tree at step
  s - u, where u is the length of its trailing run of equal code bits.
* doubling trees: each rank r carries nu(r) = h(r) XOR (h(r) >> 1), with
  h(r) the negabinary code of p - r for even r and of r for odd r; the
  step-i partner flips bit i of nu, and a rank joins at the position of the
  most significant set bit of its nu value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Optional

from .negabinary import (
    NegabinaryCode,
    check_rank_count,
    nb2rank,
    rank2nb,
    trailing_equal_bits,
)


class TreeKind(str, Enum):
    BINE_HALVING = "bine_halving"
    BINE_DOUBLING = "bine_doubling"
    BINOMIAL_HALVING = "binomial_halving"
    BINOMIAL_DOUBLING = "binomial_doubling"


class TreeEdge(NamedTuple):
    child: int
    parent: int
    step: int


@dataclass(frozen=True)
class NuCode:
    """Per-rank code governing distance-doubling partner selection."""

    value: int
    width: int
    even: bool

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b")


@dataclass(frozen=True)
class CommTree:
    kind: TreeKind
    p: int
    root: int
    edges: tuple[TreeEdge, ...]
    _children: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        children: dict[int, list[TreeEdge]] = {}
        for e in self.edges:
            children.setdefault(e.parent, []).append(e)
        object.__setattr__(self, "_children", children)

    @property
    def steps(self) -> int:
        return self.p.bit_length() - 1

    def parent_of(self, rank: int) -> Optional[TreeEdge]:
        for e in self.edges:
            if e.child == rank:
                return e
        return None

    def child_edges(self, rank: int) -> tuple[TreeEdge, ...]:
        return tuple(self._children.get(rank, ()))

    def edges_at_step(self, step: int) -> tuple[TreeEdge, ...]:
        return tuple(e for e in self.edges if e.step == step)

    def descendants(self, rank: int) -> frozenset[int]:
        """rank plus everything below it, by walking the edge list."""
        members = {rank}
        stack = [rank]
        while stack:
            for e in self._children.get(stack.pop(), ()):
                members.add(e.child)
                stack.append(e.child)
        return frozenset(members)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "p": self.p,
            "root": self.root,
            "edges": [
                {"child": e.child, "parent": e.parent, "step": e.step}
                for e in self.edges
            ],
        }


def modulo_distance(r: int, q: int, p: int) -> int:
    """Circular distance between two ranks: min((r-q) mod p, (q-r) mod p)."""
    d = (r - q) % p
    return min(d, p - d)


def bine_distance(i: int, s: int) -> int:
    """Modulo distance between step-i partners in a distance-halving tree.

    The partners' codes differ in their s-i low bits (all ones against all
    zeros), so the distance is |sum_{j<s-i} (-2)**j| = (2**(s-i) - (-1)**(s-i))/3.
    """
    if not 0 <= i < s:
        raise ValueError(f"step {i} out of range [0, {s})")
    d = s - i
    return (2**d - (-1) ** d) // 3


def _virtual(r: int, root: int, p: int) -> int:
    if not 0 <= r < p:
        raise ValueError(f"rank {r} out of range [0, {p})")
    return (r - root) % p


def halving_partner(r: int, i: int, p: int, root: int = 0) -> int:
    """Step-i partner of r in the distance-halving tree rooted at `root`."""
    s = check_rank_count(p)
    if not 0 <= i < s:
        raise ValueError(f"step {i} out of range [0, {s})")
    v = _virtual(r, root, p)
    mask = (1 << (s - i)) - 1
    q = nb2rank(NegabinaryCode(rank2nb(v, p).bits ^ mask, s), p)
    return (q + root) % p


def halving_join_step(r: int, p: int, root: int = 0) -> Optional[int]:
    """Step at which r receives from its halving-tree parent; None for the root."""
    s = check_rank_count(p)
    v = _virtual(r, root, p)
    if v == 0:
        return None
    return s - trailing_equal_bits(rank2nb(v, p))


def nu(r: int, p: int) -> NuCode:
    s = check_rank_count(p)
    if not 0 <= r < p:
        raise ValueError(f"rank {r} out of range [0, {p})")
    if r % 2 == 0:
        h = rank2nb((p - r) % p, p).bits
    else:
        h = rank2nb(r, p).bits
    return NuCode(h ^ (h >> 1), s, r % 2 == 0)


@lru_cache(maxsize=64)
def nu_values(p: int) -> tuple[int, ...]:
    return tuple(nu(r, p).value for r in range(p))


@lru_cache(maxsize=64)
def nu_inverse(p: int) -> tuple[int, ...]:
    """Rank holding each nu value; nu is a bijection, checked at table build."""
    values = nu_values(p)
    inverse = [-1] * p
    for rank, value in enumerate(values):
        if inverse[value] != -1:
            raise AssertionError(f"nu is not injective for p={p}")
        inverse[value] = rank
    return tuple(inverse)


def doubling_partner(r: int, i: int, p: int, root: int = 0) -> int:
    """Step-i partner of r in the distance-doubling tree rooted at `root`."""
    s = check_rank_count(p)
    if not 0 <= i < s:
        raise ValueError(f"step {i} out of range [0, {s})")
    v = _virtual(r, root, p)
    q = nu_inverse(p)[nu_values(p)[v] ^ (1 << i)]
    return (q + root) % p


def doubling_join_step(r: int, p: int, root: int = 0) -> Optional[int]:
    """Step at which r receives from its doubling-tree parent; None for the root."""
    check_rank_count(p)
    v = _virtual(r, root, p)
    if v == 0:
        return None
    return nu_values(p)[v].bit_length() - 1


def subtree_members(r: int, kind: TreeKind, p: int, root: int = 0) -> frozenset[int]:
    """r and all its descendants, by the bit-pattern characterization.

    Halving tree: descendants share r's top (join step + 1) code bits.
    Doubling tree: descendants share r's bottom (join step + 1) nu bits.
    """
    s = check_rank_count(p)
    v = _virtual(r, root, p)
    if v == 0:
        return frozenset(range(p))
    if kind == TreeKind.BINE_HALVING:
        i = s - trailing_equal_bits(rank2nb(v, p))
        shift = s - (i + 1)
        prefix = rank2nb(v, p).bits >> shift
        members = (
            w for w in range(p) if rank2nb(w, p).bits >> shift == prefix
        )
    elif kind == TreeKind.BINE_DOUBLING:
        values = nu_values(p)
        i = values[v].bit_length() - 1
        mask = (1 << (i + 1)) - 1
        suffix = values[v] & mask
        members = (w for w in range(p) if values[w] & mask == suffix)
    else:
        raise ValueError(f"subtree characterization not defined for {kind}")
    return frozenset((w + root) % p for w in members)


def _virtual_edges(kind: TreeKind, p: int) -> list[tuple[int, int, int]]:
    """(child, parent, step) triples for the tree rooted at virtual rank 0."""
    s = check_rank_count(p)
    edges = []
    for v in range(1, p):
        if kind == TreeKind.BINE_HALVING:
            code = rank2nb(v, p)
            i = s - trailing_equal_bits(code)
            parent = nb2rank(
                NegabinaryCode(code.bits ^ ((1 << (s - i)) - 1), s), p
            )
        elif kind == TreeKind.BINE_DOUBLING:
            value = nu_values(p)[v]
            i = value.bit_length() - 1
            parent = nu_inverse(p)[value & ~(1 << i)]
        elif kind == TreeKind.BINOMIAL_DOUBLING:
            i = v.bit_length() - 1
            parent = v - (1 << i)
        elif kind == TreeKind.BINOMIAL_HALVING:
            low = (v & -v).bit_length() - 1
            i = s - 1 - low
            parent = v - (1 << low)
        else:
            raise ValueError(f"unknown tree kind {kind}")
        edges.append((v, parent, i))
    return edges


def build_tree(kind: TreeKind, p: int, root: int = 0) -> CommTree:
    """Materialize the spanning tree of `kind` over p ranks rooted at `root`."""
    check_rank_count(p)
    if not 0 <= root < p:
        raise ValueError(f"root {root} out of range [0, {p})")
    edges = [
        TreeEdge((child + root) % p, (parent + root) % p, step)
        for child, parent, step in _virtual_edges(TreeKind(kind), p)
    ]
    edges.sort(key=lambda e: (e.step, e.child))
    return CommTree(TreeKind(kind), p, root, tuple(edges))
