"""Explicit communication schedules for eight collectives.

Every builder returns a :class:`CommSchedule`: an ordered sequence of
synchronous rounds, each a list of directed :class:`Transfer` records.  The
vector of ``n`` bytes is always split into exactly ``p`` blocks
(ceil-padded), and all placement logic is expressed in whole blocks, so byte
accounting is exact.

Block identifier spaces:

* ``vector`` (all collectives except alltoall): block ``b`` is the b-th
  1/p-slice of the collective's vector.
* ``pairwise`` (alltoall): block ``src * p + dst`` is the slice rank ``src``
  contributes for rank ``dst``.

Negabinary ("bine") variants place large transfers over short modulo
distances; classic binomial / recursive-halving / recursive-doubling / ring
/ Bruck baselines are provided for every collective so that traffic can be
compared like for like.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional, Sequence

from .butterflies import ButterflyKind, butterfly_partner
from .negabinary import UnsupportedConfigError, check_rank_count
from .trees import TreeKind, build_tree

COLLECTIVES = (
    "broadcast",
    "reduce",
    "gather",
    "scatter",
    "reduce_scatter",
    "allgather",
    "allreduce",
    "alltoall",
)

#: Variant names per collective, first entry = the negabinary variant.
VARIANTS = {
    "broadcast": (
        "bine_small",
        "bine_large",
        "binomial_doubling",
        "binomial_halving",
        "binomial_sag",
        "binomial_large",
    ),
    "reduce": ("bine_small", "bine_large", "binomial"),
    "gather": ("bine", "binomial"),
    "scatter": ("bine", "binomial"),
    "reduce_scatter": ("bine", "recursive_halving", "recursive_doubling", "ring"),
    "allgather": (
        "bine",
        "recursive_doubling",
        "recursive_halving",
        "ring",
        "bruck",
        "sparbit_like",
    ),
    "allreduce": (
        "bine_small",
        "bine_large",
        "recursive_doubling",
        "ring",
        "rabenseifner_like",
        "binomial_large",
    ),
    "alltoall": ("bine", "bruck", "pairwise", "linear"),
}

ROOTED = ("broadcast", "reduce", "gather", "scatter")

CONTIGUITY_MODES = ("noncontig", "pre_permute", "unpermuted_output")


@dataclass(frozen=True)
class BlockRange:
    """Circular range of block indices [a, b] over p blocks."""

    a: int
    b: int
    p: int

    def __post_init__(self) -> None:
        if not (0 <= self.a < self.p and 0 <= self.b < self.p):
            raise ValueError(f"range [{self.a}, {self.b}] out of [0, {self.p})")

    @property
    def size(self) -> int:
        return (self.b - self.a) % self.p + 1

    def members(self) -> tuple[int, ...]:
        return tuple((self.a + k) % self.p for k in range(self.size))

    def contains(self, block: int) -> bool:
        return (block - self.a) % self.p < self.size

    @classmethod
    def from_members(cls, members: Sequence[int], p: int) -> "BlockRange":
        """The circular range covering `members` exactly; raises if not contiguous."""
        chosen = sorted(set(members))
        if not chosen:
            raise ValueError("empty block set")
        if len(chosen) == p:
            return cls(0, p - 1, p)
        gaps = [
            (chosen[(k + 1) % len(chosen)] - chosen[k]) % p
            for k in range(len(chosen))
        ]
        # exactly one gap along the circle means one contiguous run
        big = [k for k, g in enumerate(gaps) if g != 1]
        if len(big) != 1:
            raise ValueError(f"block set {chosen} is not circularly contiguous")
        start = chosen[(big[0] + 1) % len(chosen)]
        return cls(start, (start + len(chosen) - 1) % p, p)


class Transfer(NamedTuple):
    src: int
    dst: int
    blocks: tuple[int, ...]
    block_bytes: int
    reduce: bool = False
    move: bool = False

    @property
    def nbytes(self) -> int:
        return len(self.blocks) * self.block_bytes


@dataclass(frozen=True, eq=False)
class CommSchedule:
    collective: str
    algorithm: str
    p: int
    n: int
    block_bytes: int
    root: Optional[int]
    steps: tuple[tuple[Transfer, ...], ...]
    block_space: str = "vector"
    final_permutation: Optional[dict[int, tuple[int, ...]]] = None
    output_blocks: Optional[dict[int, int]] = None
    layout_positions: Optional[tuple[int, ...]] = None

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def transfers(self) -> Iterator[Transfer]:
        for step in self.steps:
            yield from step

    def total_bytes(self) -> int:
        return sum(t.nbytes for t in self.transfers())

    def sent_bytes_by_rank(self) -> list[int]:
        sent = [0] * self.p
        for t in self.transfers():
            sent[t.src] += t.nbytes
        return sent

    def to_json_dict(self) -> dict:
        data = {
            "collective": self.collective,
            "algorithm": self.algorithm,
            "p": self.p,
            "n": self.n,
            "block_bytes": self.block_bytes,
            "root": self.root,
            "block_space": self.block_space,
            "steps": [
                [
                    {
                        "src": t.src,
                        "dst": t.dst,
                        "blocks": list(t.blocks),
                        "bytes": t.nbytes,
                        "reduce": t.reduce,
                        "move": t.move,
                    }
                    for t in step
                ]
                for step in self.steps
            ],
        }
        if self.final_permutation is not None:
            data["final_permutation"] = {
                str(r): list(perm) for r, perm in sorted(self.final_permutation.items())
            }
        if self.output_blocks is not None:
            data["output_blocks"] = {
                str(r): b for r, b in sorted(self.output_blocks.items())
            }
        if self.layout_positions is not None:
            data["layout_positions"] = list(self.layout_positions)
        return data

    def csv_rows(self) -> Iterator[tuple]:
        for i, step in enumerate(self.steps):
            for t in step:
                yield (
                    i,
                    t.src,
                    t.dst,
                    len(t.blocks),
                    t.nbytes,
                    int(t.reduce),
                    int(t.move),
                    ";".join(map(str, t.blocks)),
                )


def block_bytes_for(n: int, p: int) -> int:
    """Per-block byte count: n split into exactly p blocks, ceil-padded."""
    if n < 1:
        raise ValueError(f"vector size must be >= 1 byte, got {n}")
    return -(-n // p)


def _sorted_step(transfers: list[Transfer]) -> tuple[Transfer, ...]:
    return tuple(sorted(transfers, key=lambda t: (t.src, t.dst)))


def _check_single_ported(steps) -> None:
    for i, step in enumerate(steps):
        senders, receivers = set(), set()
        for t in step:
            if t.src in senders or t.dst in receivers:
                raise AssertionError(f"step {i} violates single-portedness")
            senders.add(t.src)
            receivers.add(t.dst)


def _schedule(collective, algorithm, p, n, root, steps, **kw) -> CommSchedule:
    steps = tuple(_sorted_step(list(step)) for step in steps)
    _check_single_ported(steps)
    return CommSchedule(
        collective=collective,
        algorithm=algorithm,
        p=p,
        n=n,
        block_bytes=block_bytes_for(n, p),
        root=root,
        steps=steps,
        **kw,
    )


def _check_variant(collective: str, variant: str) -> None:
    if variant not in VARIANTS[collective]:
        raise UnsupportedConfigError(
            f"unknown {collective} variant {variant!r}; "
            f"choose from {', '.join(VARIANTS[collective])}"
        )


def _check_root(root: int, p: int) -> None:
    if not 0 <= root < p:
        raise ValueError(f"root {root} out of range [0, {p})")


# ---------------------------------------------------------------------------
# shared machinery
# ---------------------------------------------------------------------------


def _subtree_blocks(tree) -> dict[int, tuple[int, ...]]:
    """For each rank, the sorted block ids (= rank ids) of its subtree."""
    sets: dict[int, list[int]] = {r: [r] for r in range(tree.p)}
    for step in range(tree.steps - 1, -1, -1):
        for e in tree.edges_at_step(step):
            sets[e.parent].extend(sets[e.child])
    return {r: tuple(sorted(v)) for r, v in sets.items()}


@lru_cache(maxsize=8)
def halving_accumulation_sets(p: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Token sets gathered by each rank after j halving-butterfly steps.

    Level j holds, per rank, the sorted 2**j ranks whose tokens an
    allgather over the negabinary halving butterfly has merged so far;
    level s is complete.  The same sets, read backwards, are the ownership
    sets of the distance-doubling reduce-scatter.
    """
    s = check_rank_count(p)
    levels = [tuple((r,) for r in range(p))]
    for j in range(s):
        cur = levels[j]
        nxt = []
        for r in range(p):
            q = butterfly_partner(ButterflyKind.BINE_HALVING, r, j, p)
            merged = sorted(cur[r] + cur[q])
            nxt.append(tuple(merged))
        levels.append(tuple(nxt))
    if any(len(set(t)) != p for t in levels[s]):
        raise AssertionError(f"halving butterfly does not complete for p={p}")
    return tuple(levels)


@lru_cache(maxsize=16)
def reverse_nu_positions(p: int) -> tuple[int, ...]:
    """Buffer position of each rank's block under the bit-reversed nu layout.

    Moving block r to position reverse(nu(r)) makes every transfer of the
    negabinary reduce-scatter / allgather butterflies a contiguous,
    power-of-two aligned position range.
    """
    from .trees import nu_values

    s = check_rank_count(p)
    positions = []
    for value in nu_values(p):
        rev = 0
        for j in range(s):
            if value >> j & 1:
                rev |= 1 << (s - 1 - j)
        positions.append(rev)
    assert sorted(positions) == list(range(p))
    return tuple(positions)


def _assert_aligned_range(blocks: tuple[int, ...]) -> None:
    k = len(blocks)
    if blocks[-1] - blocks[0] + 1 != k or blocks[0] % k != 0:
        raise AssertionError(f"position set {blocks} is not an aligned range")


def final_positions(steps, p: int) -> list[list[Optional[int]]]:
    """Replay buffer placement for a pairwise-space schedule.

    Each rank starts with its own p items in destination order.  Sent items
    vacate their slots; the items received in the same round fill the
    vacated slots in ascending id order.  Raises ValueError on any schedule
    whose sends and receives do not line up.
    """
    slots: list[list[Optional[int]]] = [
        [r * p + x for x in range(p)] for r in range(p)
    ]
    index = [{fid: x for x, fid in enumerate(row)} for row in slots]
    for step in steps:
        freed: dict[int, list[int]] = {}
        arriving: dict[int, list[int]] = {}
        for t in step:
            if not t.move:
                raise ValueError("pairwise-space transfers must move their blocks")
            idx = index[t.src]
            try:
                holes = sorted(idx.pop(fid) for fid in t.blocks)
            except KeyError as missing:
                raise ValueError(
                    f"rank {t.src} does not hold item {missing}"
                ) from None
            freed[t.src] = holes
            arriving[t.dst] = sorted(t.blocks)
        for r, items in arriving.items():
            holes = freed.pop(r, [])
            if len(holes) != len(items):
                raise ValueError(
                    f"rank {r} receives {len(items)} items into {len(holes)} slots"
                )
            for pos, fid in zip(holes, items):
                slots[r][pos] = fid
                index[r][fid] = pos
        for r, holes in freed.items():  # sent without receiving
            for pos in holes:
                slots[r][pos] = None
    return slots


def _alltoall_permutation(steps, p: int) -> dict[int, tuple[int, ...]]:
    """Per-rank slot permutation putting arrived items into source order."""
    arrival = final_positions(steps, p)
    perm = {}
    for r in range(p):
        pos_of = {fid: x for x, fid in enumerate(arrival[r]) if fid is not None}
        perm[r] = tuple(pos_of[i * p + r] for i in range(p))
    return perm


# ---------------------------------------------------------------------------
# broadcast / reduce
# ---------------------------------------------------------------------------

_BCAST_TREES = {
    "bine_small": TreeKind.BINE_HALVING,
    "binomial_doubling": TreeKind.BINOMIAL_DOUBLING,
    "binomial_halving": TreeKind.BINOMIAL_HALVING,
}


def _tree_forward_steps(tree, blocks, bb):
    return [
        [
            Transfer(e.parent, e.child, blocks, bb)
            for e in tree.edges_at_step(i)
        ]
        for i in range(tree.steps)
    ]


def _tree_collect_steps(tree, blocks_of, bb, reduce):
    """Leaves-to-root sweep: reversed tree steps, children send to parents."""
    return [
        [
            Transfer(e.child, e.parent, blocks_of(e.child), bb, reduce, True)
            for e in tree.edges_at_step(tree.steps - 1 - j)
        ]
        for j in range(tree.steps)
    ]


def _scatter_steps(tree, blocks_of, bb):
    """Root-to-leaves block distribution along tree steps."""
    return [
        [
            Transfer(e.parent, e.child, blocks_of(e.child), bb, False, True)
            for e in tree.edges_at_step(i)
        ]
        for i in range(tree.steps)
    ]


def _allgather_steps(p, bb, kind, initial_blocks=None):
    """Butterfly allgather rounds; optional rank->block relabeling."""
    s = check_rank_count(p)
    if kind == ButterflyKind.BINE_HALVING:
        levels = halving_accumulation_sets(p)
        sets = lambda j, r: levels[j][r]
    elif kind == ButterflyKind.RECURSIVE_DOUBLING:
        sets = lambda j, r: tuple(range((r >> j) << j, ((r >> j) << j) + (1 << j)))
    elif kind == ButterflyKind.RECURSIVE_HALVING:
        sets = lambda j, r: tuple(range(r % (1 << (s - j)), p, 1 << (s - j)))
    else:
        raise ValueError(f"no allgather over {kind}")
    mu = initial_blocks
    steps = []
    for j in range(s):
        step = []
        for r in range(p):
            q = butterfly_partner(kind, r, j, p)
            payload = sets(j, r)
            if mu is not None:
                payload = tuple(sorted(mu[b] for b in payload))
            step.append(Transfer(r, q, payload, bb))
        steps.append(step)
    return steps


def build_bcast(p: int, root: int, n: int, variant: str = "bine_small") -> CommSchedule:
    """Broadcast of the root's n-byte vector to every rank."""
    _check_variant("broadcast", variant)
    check_rank_count(p)
    _check_root(root, p)
    bb = block_bytes_for(n, p)
    if variant in _BCAST_TREES:
        tree = build_tree(_BCAST_TREES[variant], p, root)
        steps = _tree_forward_steps(tree, tuple(range(p)), bb)
    elif variant == "bine_large":
        # distance-doubling scatter, then a distance-halving butterfly
        # allgather; big scatter chunks travel short distances first.
        if n < p:
            raise UnsupportedConfigError(
                f"broadcast variant {variant} needs n >= p bytes (n={n}, p={p})"
            )
        tree = build_tree(TreeKind.BINE_DOUBLING, p, root)
        subtrees = _subtree_blocks(tree)
        pos = reverse_nu_positions(p)
        mu = [pos[(r - root) % p] for r in range(p)]
        blocks_of = lambda child: tuple(sorted(mu[x] for x in subtrees[child]))
        steps = _scatter_steps(tree, blocks_of, bb)
        steps += _allgather_steps(p, bb, ButterflyKind.BINE_HALVING, mu)
    elif variant in ("binomial_sag", "binomial_large"):
        # scatter plus allgather over classic binary structures: binomial_sag
        # is the MPICH/Open MPI ordering (distance-halving scatter, then a
        # distance-doubling recursive allgather); binomial_large reverses
        # both phases, giving the step-matched baseline of bine_large.
        if n < p:
            raise UnsupportedConfigError(
                f"broadcast variant {variant} needs n >= p bytes (n={n}, p={p})"
            )
        if variant == "binomial_sag":
            tree_kind, ag_kind = TreeKind.BINOMIAL_HALVING, ButterflyKind.RECURSIVE_DOUBLING
        else:
            tree_kind, ag_kind = TreeKind.BINOMIAL_DOUBLING, ButterflyKind.RECURSIVE_HALVING
        tree = build_tree(tree_kind, p, root)
        subtrees = _subtree_blocks(tree)
        mu = [(r - root) % p for r in range(p)]
        blocks_of = lambda child: tuple(sorted(mu[x] for x in subtrees[child]))
        steps = _scatter_steps(tree, blocks_of, bb)
        steps += _allgather_steps(p, bb, ag_kind, mu)
    return _schedule("broadcast", variant, p, n, root, steps)


def build_reduce(p: int, root: int, n: int, variant: str = "bine_small") -> CommSchedule:
    """Elementwise reduction of every rank's n-byte vector onto the root."""
    _check_variant("reduce", variant)
    check_rank_count(p)
    _check_root(root, p)
    bb = block_bytes_for(n, p)
    everything = tuple(range(p))
    if variant == "bine_small":
        tree = build_tree(TreeKind.BINE_HALVING, p, root)
        steps = _tree_collect_steps(tree, lambda _: everything, bb, True)
    elif variant == "binomial":
        tree = build_tree(TreeKind.BINOMIAL_HALVING, p, root)
        steps = _tree_collect_steps(tree, lambda _: everything, bb, True)
    elif variant == "bine_large":
        # distance-doubling butterfly reduce-scatter, then a distance-halving
        # tree gather; the gather undoes the reduce-scatter's block placement.
        if n < p:
            raise UnsupportedConfigError(
                f"reduce variant {variant} needs n >= p bytes (n={n}, p={p})"
            )
        rs = build_reduce_scatter(p, n, "bine", "unpermuted_output")
        held = rs.output_blocks
        tree = build_tree(TreeKind.BINE_HALVING, p, root)
        subtrees = _subtree_blocks(tree)
        blocks_of = lambda child: tuple(sorted(held[x] for x in subtrees[child]))
        steps = list(rs.steps) + _tree_collect_steps(tree, blocks_of, bb, False)
    return _schedule("reduce", variant, p, n, root, steps)


# ---------------------------------------------------------------------------
# gather / scatter
# ---------------------------------------------------------------------------

_GATHER_TREES = {"bine": TreeKind.BINE_HALVING, "binomial": TreeKind.BINOMIAL_HALVING}


def _gather_parts(p, root, variant):
    tree = build_tree(_GATHER_TREES[variant], p, root)
    subtrees = _subtree_blocks(tree)
    if variant == "bine":
        # negabinary subtrees are circularly contiguous rank ranges
        for r in range(p):
            BlockRange.from_members(subtrees[r], p)
    return tree, subtrees


def build_gather(p: int, root: int, n: int, variant: str = "bine") -> CommSchedule:
    """Collect block j from rank j into the root, senders shipping their whole range."""
    _check_variant("gather", variant)
    check_rank_count(p)
    _check_root(root, p)
    bb = block_bytes_for(n, p)
    tree, subtrees = _gather_parts(p, root, variant)
    steps = _tree_collect_steps(tree, lambda child: subtrees[child], bb, False)
    return _schedule("gather", variant, p, n, root, steps)


def build_scatter(p: int, root: int, n: int, variant: str = "bine") -> CommSchedule:
    """Deliver block j of the root's vector to rank j; the gather run backwards."""
    _check_variant("scatter", variant)
    check_rank_count(p)
    _check_root(root, p)
    bb = block_bytes_for(n, p)
    tree, subtrees = _gather_parts(p, root, variant)
    steps = _scatter_steps(tree, lambda child: subtrees[child], bb)
    return _schedule("scatter", variant, p, n, root, steps)


def scatter_initial_range(r: int, p: int) -> tuple[int, int]:
    """Oriented full-circle range [a, b] a rank covers when scattering.

    Even ranks extend b by 2**0 + 2**2 + ... and pull a down by
    2**1 + 2**3 + ...; odd ranks do the opposite.
    """
    s = check_rank_count(p)
    if not 0 <= r < p:
        raise ValueError(f"rank {r} out of range [0, {p})")
    evens = sum(1 << j for j in range(0, s, 2))
    odds = sum(1 << j for j in range(1, s, 2))
    if r % 2 == 0:
        return (r - odds) % p, (r + evens) % p
    return (r - evens) % p, (r + odds) % p


# ---------------------------------------------------------------------------
# reduce-scatter / allgather
# ---------------------------------------------------------------------------


def build_reduce_scatter(
    p: int, n: int, variant: str = "bine", contiguity: str = "noncontig"
) -> CommSchedule:
    """Vector-halving butterfly reduce-scatter: rank j ends with one reduced block.

    The negabinary variant runs the distance-doubling butterfly, sending the
    largest fractions over the shortest distances.  Contiguity modes for it:

    * ``noncontig``: block sets are shipped as-is (non-contiguous indices);
      rank j ends with block j.
    * ``pre_permute``: same transfers, but the schedule records the
      reverse(nu) buffer layout under which every send is one contiguous,
      aligned range; rank j still ends with block j.
    * ``unpermuted_output``: transfers are the contiguous position ranges
      themselves; rank j ends with block reverse(nu(j)), recorded in
      ``output_blocks``.
    """
    _check_variant("reduce_scatter", variant)
    s = check_rank_count(p)
    bb = block_bytes_for(n, p)
    if contiguity not in CONTIGUITY_MODES:
        raise ValueError(f"unknown contiguity mode {contiguity!r}")
    if contiguity != "noncontig" and variant != "bine":
        raise ValueError("contiguity modes only apply to the bine variant")
    extra = {}
    algorithm = variant
    if variant == "bine":
        levels = halving_accumulation_sets(p)
        pos = reverse_nu_positions(p)
        steps = []
        for i in range(s):
            step = []
            for r in range(p):
                q = butterfly_partner(ButterflyKind.BINE_DOUBLING, r, i, p)
                payload = levels[s - 1 - i][q]
                if contiguity == "unpermuted_output":
                    payload = tuple(sorted(pos[b] for b in payload))
                    _assert_aligned_range(payload)
                step.append(Transfer(r, q, payload, bb, True, True))
            steps.append(step)
        if contiguity == "pre_permute":
            algorithm = "bine_pre_permute"
            extra["layout_positions"] = pos
        elif contiguity == "unpermuted_output":
            algorithm = "bine_unpermuted"
            extra["output_blocks"] = {r: pos[r] for r in range(p)}
    elif variant == "recursive_halving":
        steps = []
        for i in range(s):
            d = 1 << (s - 1 - i)
            step = []
            for r in range(p):
                base = (r >> (s - i)) << (s - i)
                sent = base if r & d else base + d
                step.append(
                    Transfer(r, r ^ d, tuple(range(sent, sent + d)), bb, True, True)
                )
            steps.append(step)
    elif variant == "recursive_doubling":
        steps = []
        for i in range(s):
            d = 1 << i
            step = []
            for r in range(p):
                q = r ^ d
                start = q & (2 * d - 1)
                step.append(
                    Transfer(r, q, tuple(range(start, p, 2 * d)), bb, True, True)
                )
            steps.append(step)
    elif variant == "ring":
        steps = [
            [
                Transfer(r, (r + 1) % p, ((r - k - 1) % p,), bb, True, True)
                for r in range(p)
            ]
            for k in range(p - 1)
        ]
    return _schedule("reduce_scatter", algorithm, p, n, None, steps, **extra)


def build_allgather(
    p: int,
    n: int,
    variant: str = "bine",
    initial_blocks: Optional[Sequence[int]] = None,
) -> CommSchedule:
    """Every rank ends with all p blocks; rank j starts holding block j.

    ``initial_blocks`` relabels the starting block of each rank (used when
    composing after an unpermuted reduce-scatter, whose step-reversed mirror
    this is); it must be a permutation of range(p).
    """
    _check_variant("allgather", variant)
    check_rank_count(p)
    bb = block_bytes_for(n, p)
    mu = list(initial_blocks) if initial_blocks is not None else None
    if mu is not None and sorted(mu) != list(range(p)):
        raise ValueError("initial_blocks must be a permutation of range(p)")
    if variant == "bine":
        steps = _allgather_steps(p, bb, ButterflyKind.BINE_HALVING, mu)
    elif variant in ("recursive_doubling", "sparbit_like"):
        steps = _allgather_steps(p, bb, ButterflyKind.RECURSIVE_DOUBLING, mu)
    elif variant == "recursive_halving":
        steps = _allgather_steps(p, bb, ButterflyKind.RECURSIVE_HALVING, mu)
    elif variant == "ring":
        relabel = mu or list(range(p))
        steps = [
            [
                Transfer(r, (r + 1) % p, (relabel[(r - k) % p],), bb)
                for r in range(p)
            ]
            for k in range(p - 1)
        ]
    elif variant == "bruck":
        relabel = mu or list(range(p))
        steps = []
        k = 1
        while k < p:
            steps.append(
                [
                    Transfer(
                        r,
                        (r - k) % p,
                        tuple(sorted(relabel[(r + t) % p] for t in range(k))),
                        bb,
                    )
                    for r in range(p)
                ]
            )
            k *= 2
        assert k == p
    return _schedule("allgather", variant, p, n, None, steps)


# ---------------------------------------------------------------------------
# allreduce
# ---------------------------------------------------------------------------


def build_allreduce(p: int, n: int, variant: str = "bine_small") -> CommSchedule:
    """Every rank ends with the full elementwise reduction.

    Small variants exchange the whole vector each round over a butterfly;
    large variants run a reduce-scatter followed by its mirrored allgather.
    ``binomial_large`` is the classic-binary butterfly with the same step
    ordering as ``bine_large`` (doubling reduce-scatter, halving allgather),
    the like-for-like baseline for traffic comparisons; ``rabenseifner_like``
    is the MPICH ordering (halving reduce-scatter, doubling allgather).
    """
    _check_variant("allreduce", variant)
    s = check_rank_count(p)
    bb = block_bytes_for(n, p)
    everything = tuple(range(p))
    if variant in ("bine_small", "recursive_doubling"):
        kind = (
            ButterflyKind.BINE_HALVING
            if variant == "bine_small"
            else ButterflyKind.RECURSIVE_DOUBLING
        )
        steps = [
            [
                Transfer(r, butterfly_partner(kind, r, i, p), everything, bb, True)
                for r in range(p)
            ]
            for i in range(s)
        ]
    elif variant == "bine_large":
        rs = build_reduce_scatter(p, n, "bine", "unpermuted_output")
        mu = [rs.output_blocks[r] for r in range(p)]
        ag = build_allgather(p, n, "bine", initial_blocks=mu)
        steps = list(rs.steps) + list(ag.steps)
    elif variant == "rabenseifner_like":
        rs = build_reduce_scatter(p, n, "recursive_halving")
        ag = build_allgather(p, n, "recursive_doubling")
        steps = list(rs.steps) + list(ag.steps)
    elif variant == "binomial_large":
        rs = build_reduce_scatter(p, n, "recursive_doubling")
        ag = build_allgather(p, n, "recursive_halving")
        steps = list(rs.steps) + list(ag.steps)
    elif variant == "ring":
        rs = build_reduce_scatter(p, n, "ring")
        ag = build_allgather(p, n, "ring")
        steps = list(rs.steps) + list(ag.steps)
    return _schedule("allreduce", variant, p, n, None, steps)


# ---------------------------------------------------------------------------
# alltoall
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _bine_route_edges(p: int):
    """Edges of the rank-0 halving tree with their step and subtree members."""
    tree = build_tree(TreeKind.BINE_HALVING, p, 0)
    subtrees = _subtree_blocks(tree)
    return tuple(
        (e.parent, e.child, e.step, subtrees[e.child]) for e in tree.edges
    )


def build_alltoall(p: int, n: int, variant: str = "bine") -> CommSchedule:
    """Personalized exchange: rank j ends with the block every rank addressed to it.

    Item ``src * p + dst`` is the n/p-byte block rank src sends to rank dst.
    The negabinary variant routes every item along the halving tree rooted
    at its source (one tree level per butterfly round), so each rank ships
    exactly p/2 items per round; a final slot permutation restores source
    order and is recorded on the schedule.
    """
    _check_variant("alltoall", variant)
    s = check_rank_count(p)
    bb = block_bytes_for(n, p)
    perm = None
    if variant == "bine":
        per_step: list[dict[int, tuple[int, list[int]]]] = [
            {} for _ in range(s)
        ]
        edges = _bine_route_edges(p)
        for src in range(p):
            base = src * p
            for parent, child, step, members in edges:
                if src % 2 == 0:
                    a, b = (parent + src) % p, (child + src) % p
                    blocks = [base + (m + src) % p for m in members]
                else:
                    a, b = (src - parent) % p, (src - child) % p
                    blocks = [base + (src - m) % p for m in members]
                slot = per_step[step].setdefault(a, (b, []))
                assert slot[0] == b, "tree images disagree with the butterfly"
                slot[1].extend(blocks)
        steps = []
        for step_map in per_step:
            step = []
            for src, (dst, blocks) in step_map.items():
                assert len(blocks) == p // 2
                step.append(Transfer(src, dst, tuple(sorted(blocks)), bb, False, True))
            steps.append(step)
    elif variant == "bruck":
        held = [set(range(r * p, (r + 1) * p)) for r in range(p)]
        steps = []
        k = 1
        while k < p:
            step = []
            moved = []
            for r in range(p):
                payload = tuple(
                    sorted(fid for fid in held[r] if ((fid % p) - r) % p & k)
                )
                step.append(Transfer(r, (r - k) % p, payload, bb, False, True))
                moved.append(payload)
            for r in range(p):
                held[r] -= set(moved[r])
            for t in step:
                held[t.dst] |= set(t.blocks)
            steps.append(step)
            k *= 2
    elif variant == "pairwise":
        steps = [
            [
                Transfer(r, r ^ k, (r * p + (r ^ k),), bb, False, True)
                for r in range(p)
            ]
            for k in range(1, p)
        ]
    elif variant == "linear":
        steps = [
            [
                Transfer(r, (r + k) % p, (r * p + (r + k) % p,), bb, False, True)
                for r in range(p)
            ]
            for k in range(1, p)
        ]
    sched_steps = tuple(_sorted_step(list(step)) for step in steps)
    perm = _alltoall_permutation(sched_steps, p)
    return _schedule(
        "alltoall",
        variant,
        p,
        n,
        None,
        sched_steps,
        block_space="pairwise",
        final_permutation=perm,
    )


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def build_schedule(
    collective: str,
    variant: str,
    p: int,
    n: int,
    root: int = 0,
    contiguity: str = "noncontig",
) -> CommSchedule:
    """Build any collective's schedule by name (CLI and sweep entry point)."""
    if collective not in COLLECTIVES:
        raise UnsupportedConfigError(f"unknown collective {collective!r}")
    if collective == "broadcast":
        return build_bcast(p, root, n, variant)
    if collective == "reduce":
        return build_reduce(p, root, n, variant)
    if collective == "gather":
        return build_gather(p, root, n, variant)
    if collective == "scatter":
        return build_scatter(p, root, n, variant)
    if collective == "reduce_scatter":
        return build_reduce_scatter(p, n, variant, contiguity)
    if collective == "allgather":
        return build_allgather(p, n, variant)
    if collective == "allreduce":
        return build_allreduce(p, n, variant)
    return build_alltoall(p, n, variant)
