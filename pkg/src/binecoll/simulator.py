"""Deterministic execution of communication schedules over virtual ranks.

Ranks hold block slots tagged with provenance: a slot maps its block id to
the set of origin ranks whose contributions it carries (a bitmask).  Steps
are synchronous rounds: every transfer reads pre-step state, reductions
merge contribution sets (duplicates are schedule defects), non-reductions
overwrite, and moving transfers relinquish the sender's copy afterwards.

Verification compares the executed end state against brute-force
definitional oracles for all eight collectives; failures are reported, not
raised.  A secondary numeric mode replays schedules over 32-bit integer
vectors with elementwise sums as a cross-check of the tag semantics.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .schedules import COLLECTIVES, CommSchedule, Transfer, final_positions

MASK32 = 0xFFFFFFFF


class ScheduleDefectError(RuntimeError):
    """A schedule asked for something impossible; names the offending transfer."""

    def __init__(self, step: int, transfer: Transfer, reason: str):
        self.step = step
        self.transfer = transfer
        self.reason = reason
        super().__init__(
            f"defect at step {step}, transfer {transfer.src}->{transfer.dst}: {reason}"
        )


@dataclass(frozen=True)
class VerifyReport:
    collective: str
    algorithm: str
    p: int
    n: int
    passed: bool
    divergence: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "collective": self.collective,
            "algorithm": self.algorithm,
            "p": self.p,
            "n": self.n,
            "passed": self.passed,
            "divergence": self.divergence,
        }


def _contribs(mask: int) -> list[int]:
    out, r = [], 0
    while mask:
        if mask & 1:
            out.append(r)
        mask >>= 1
        r += 1
    return out


def initial_state(collective: str, p: int, root: int = 0) -> list[dict[int, int]]:
    """Pre-collective buffer tags per rank."""
    if collective not in COLLECTIVES:
        raise ValueError(f"unknown collective {collective!r}")
    if collective == "broadcast" or collective == "scatter":
        return [
            {b: 1 << root for b in range(p)} if r == root else {} for r in range(p)
        ]
    if collective in ("reduce", "allreduce", "reduce_scatter"):
        return [{b: 1 << r for b in range(p)} for r in range(p)]
    if collective in ("gather", "allgather"):
        return [{r: 1 << r} for r in range(p)]
    return [{r * p + d: 1 << r for d in range(p)} for r in range(p)]  # alltoall


def oracle(
    collective: str,
    p: int,
    root: int = 0,
    output_blocks: Optional[dict[int, int]] = None,
) -> dict[int, dict[int, int]]:
    """Definitional end state, restricted to the ranks/slots the collective defines.

    Keys are the checked ranks; each maps to the exact slot->contributions
    content that rank must end with.
    """
    everyone = (1 << p) - 1
    if collective == "broadcast":
        return {r: {b: 1 << root for b in range(p)} for r in range(p)}
    if collective == "reduce":
        return {root: {b: everyone for b in range(p)}}
    if collective == "gather":
        return {root: {b: 1 << b for b in range(p)}}
    if collective == "scatter":
        return {r: {r: 1 << root} for r in range(p)}
    if collective == "reduce_scatter":
        held = output_blocks or {r: r for r in range(p)}
        return {r: {held[r]: everyone} for r in range(p)}
    if collective == "allgather":
        return {r: {b: 1 << b for b in range(p)} for r in range(p)}
    if collective == "allreduce":
        return {r: {b: everyone for b in range(p)} for r in range(p)}
    if collective == "alltoall":
        return {r: {i * p + r: 1 << i for i in range(p)} for r in range(p)}
    raise ValueError(f"unknown collective {collective!r}")


def execute(
    schedule: CommSchedule, state: Optional[list[dict[int, int]]] = None
) -> list[dict[int, int]]:
    """Run every round of a schedule and return the resulting rank states."""
    if state is None:
        state = initial_state(schedule.collective, schedule.p, schedule.root or 0)
    else:
        state = [dict(s) for s in state]
    for i, step in enumerate(schedule.steps):
        senders: set[int] = set()
        receivers: set[int] = set()
        staged = []
        for t in step:
            if t.src in senders:
                raise ScheduleDefectError(i, t, f"rank {t.src} sends twice")
            if t.dst in receivers:
                raise ScheduleDefectError(i, t, f"rank {t.dst} receives twice")
            senders.add(t.src)
            receivers.add(t.dst)
            src = state[t.src]
            payload = []
            for b in t.blocks:
                mask = src.get(b)
                if mask is None:
                    raise ScheduleDefectError(i, t, f"source slot {b} is empty")
                payload.append((b, mask))
            staged.append((t, payload))
        for t, payload in staged:
            dst = state[t.dst]
            if t.reduce:
                for b, mask in payload:
                    cur = dst.get(b)
                    if cur is None:
                        raise ScheduleDefectError(
                            i, t, f"reduction into empty slot {b}"
                        )
                    if cur & mask:
                        raise ScheduleDefectError(
                            i,
                            t,
                            f"slot {b} would count contributions "
                            f"{_contribs(cur & mask)} twice",
                        )
                    dst[b] = cur | mask
            else:
                for b, mask in payload:
                    dst[b] = mask
        for t, payload in staged:
            if t.move:
                src = state[t.src]
                for b, _ in payload:
                    del src[b]
    return state


def _layout_divergence(schedule: CommSchedule) -> Optional[str]:
    """Check the recorded final permutation against the placement replay."""
    p = schedule.p
    if schedule.final_permutation is None:
        return "schedule records no final permutation"
    try:
        arrival = final_positions(schedule.steps, p)
    except ValueError as exc:
        return f"placement replay failed: {exc}"
    for r in range(p):
        perm = schedule.final_permutation.get(r)
        if perm is None or sorted(perm) != list(range(p)):
            return f"rank {r}: final permutation is not a slot permutation"
        for slot in range(p):
            fid = arrival[r][perm[slot]]
            if fid != slot * p + r:
                return (
                    f"rank {r} slot {slot}: expected item from origin {slot}, "
                    f"got {'hole' if fid is None else f'{fid // p}->{fid % p}'}"
                )
    return None


def _state_divergence(
    expected: dict[int, dict[int, int]], actual: list[dict[int, int]]
) -> Optional[str]:
    for r in sorted(expected):
        want, got = expected[r], actual[r]
        for slot in sorted(set(want) | set(got)):
            w, g = want.get(slot), got.get(slot)
            if w != g:
                render = lambda m: "empty" if m is None else f"contribs {_contribs(m)}"
                return f"rank {r} slot {slot}: expected {render(w)}, got {render(g)}"
    return None


def verify(schedule: CommSchedule) -> VerifyReport:
    """Execute a schedule and compare it with the definitional oracle."""
    expected = oracle(
        schedule.collective,
        schedule.p,
        schedule.root or 0,
        schedule.output_blocks,
    )
    try:
        end = execute(schedule)
    except ScheduleDefectError as exc:
        return VerifyReport(
            schedule.collective,
            schedule.algorithm,
            schedule.p,
            schedule.n,
            False,
            str(exc),
        )
    divergence = _state_divergence(expected, end)
    if divergence is None and schedule.block_space == "pairwise":
        divergence = _layout_divergence(schedule)
    return VerifyReport(
        schedule.collective,
        schedule.algorithm,
        schedule.p,
        schedule.n,
        divergence is None,
        divergence,
    )


# ---------------------------------------------------------------------------
# mutation testing support
# ---------------------------------------------------------------------------


def random_mutation(schedule: CommSchedule, rng: random.Random) -> CommSchedule:
    """Drop or retarget one transfer; any such mutation must fail verification."""
    sized = [i for i, step in enumerate(schedule.steps) if step]
    i = rng.choice(sized)
    step = list(schedule.steps[i])
    k = rng.randrange(len(step))
    t = step[k]
    if rng.random() < 0.5:
        del step[k]
    else:
        candidates = [r for r in range(schedule.p) if r not in (t.src, t.dst)]
        step[k] = t._replace(dst=rng.choice(candidates))
    steps = list(schedule.steps)
    steps[i] = tuple(step)
    return CommSchedule(
        collective=schedule.collective,
        algorithm=schedule.algorithm + "+mutation",
        p=schedule.p,
        n=schedule.n,
        block_bytes=schedule.block_bytes,
        root=schedule.root,
        steps=tuple(steps),
        block_space=schedule.block_space,
        final_permutation=schedule.final_permutation,
        output_blocks=schedule.output_blocks,
        layout_positions=schedule.layout_positions,
    )


# ---------------------------------------------------------------------------
# numeric cross-check (32-bit integer vectors, elementwise sum)
# ---------------------------------------------------------------------------


def _numeric_initial(schedule: CommSchedule, rng: random.Random, width: int):
    tags = initial_state(schedule.collective, schedule.p, schedule.root or 0)
    return [
        {b: tuple(rng.randrange(1 << 32) for _ in range(width)) for b in slots}
        for slots in tags
    ]


def execute_numeric(schedule: CommSchedule, state) -> list[dict[int, tuple]]:
    """Replay a schedule over concrete integer blocks (sum modulo 2**32)."""
    state = [dict(s) for s in state]
    for i, step in enumerate(schedule.steps):
        staged = []
        for t in step:
            src = state[t.src]
            try:
                staged.append((t, [(b, src[b]) for b in t.blocks]))
            except KeyError as missing:
                raise ScheduleDefectError(
                    i, t, f"source slot {missing} is empty"
                ) from None
        for t, payload in staged:
            dst = state[t.dst]
            for b, vec in payload:
                if t.reduce:
                    cur = dst[b]
                    dst[b] = tuple((x + y) & MASK32 for x, y in zip(cur, vec))
                else:
                    dst[b] = vec
        for t, payload in staged:
            if t.move:
                for b, _ in payload:
                    del state[t.src][b]
    return state


def verify_numeric(schedule: CommSchedule, seed: int = 0, width: int = 2) -> bool:
    """Cross-check a schedule on random 32-bit vectors against definitional sums."""
    rng = random.Random(seed)
    p, root = schedule.p, schedule.root or 0
    start = _numeric_initial(schedule, rng, width)
    end = execute_numeric(schedule, start)

    def vec_sum(vectors):
        out = [0] * width
        for v in vectors:
            out = [(x + y) & MASK32 for x, y in zip(out, v)]
        return tuple(out)

    collective = schedule.collective
    if collective == "broadcast":
        expected = {r: dict(start[root]) for r in range(p)}
    elif collective == "reduce":
        expected = {
            root: {b: vec_sum(start[r][b] for r in range(p)) for b in range(p)}
        }
    elif collective == "gather":
        expected = {root: {b: start[b][b] for b in range(p)}}
    elif collective == "scatter":
        expected = {r: {r: start[root][r]} for r in range(p)}
    elif collective == "reduce_scatter":
        held = schedule.output_blocks or {r: r for r in range(p)}
        expected = {
            r: {held[r]: vec_sum(start[q][held[r]] for q in range(p))}
            for r in range(p)
        }
    elif collective == "allgather":
        expected = {r: {b: start[b][b] for b in range(p)} for r in range(p)}
    elif collective == "allreduce":
        expected = {
            r: {b: vec_sum(start[q][b] for q in range(p)) for b in range(p)}
            for r in range(p)
        }
    else:  # alltoall
        expected = {
            r: {i * p + r: start[i][i * p + r] for i in range(p)} for r in range(p)
        }
    return all(end[r] == slots for r, slots in expected.items())
