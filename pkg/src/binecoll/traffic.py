"""Byte accounting of schedules against group maps.

A transfer is *global* exactly when its endpoints sit in different groups
(minimal-path assumption: one boundary crossing per inter-group transfer),
so the counts are lower bounds on real global-link traffic.  Reductions are
reported as 1 - candidate/baseline global bytes; a baseline with zero
global traffic makes the pair incomparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from statistics import fmean
from typing import Optional, Sequence

from .negabinary import is_power_of_two
from .schedules import CommSchedule, build_schedule
from .topology import AllocationRecord, GroupMap
from .trees import modulo_distance


@dataclass(frozen=True)
class TrafficReport:
    collective: str
    algorithm: str
    p: int
    n: int
    total_bytes: int
    global_bytes: int
    per_step: tuple[tuple[int, int], ...]
    distance_histogram: dict[int, int]

    def to_json_dict(self) -> dict:
        return {
            "collective": self.collective,
            "algorithm": self.algorithm,
            "p": self.p,
            "n": self.n,
            "total_bytes": self.total_bytes,
            "global_bytes": self.global_bytes,
            "per_step": [list(pair) for pair in self.per_step],
            "distance_histogram": {
                str(d): c for d, c in sorted(self.distance_histogram.items())
            },
        }


@dataclass(frozen=True)
class ReductionStat:
    baseline: str
    candidate: str
    baseline_global: int
    candidate_global: int
    comparable: bool
    reduction: Optional[float]


def account(schedule: CommSchedule, groupmap: GroupMap) -> TrafficReport:
    """Exact total and inter-group byte counts, per step and overall."""
    if schedule.p != groupmap.p:
        raise ValueError(
            f"schedule has {schedule.p} ranks but group map covers {groupmap.p}"
        )
    group = groupmap.group_of
    per_step = []
    histogram: dict[int, int] = {}
    total = globl = 0
    for step in schedule.steps:
        step_total = step_global = 0
        for t in step:
            nbytes = t.nbytes
            step_total += nbytes
            if group[t.src] != group[t.dst]:
                step_global += nbytes
            d = modulo_distance(t.src, t.dst, schedule.p)
            histogram[d] = histogram.get(d, 0) + 1
        per_step.append((step_total, step_global))
        total += step_total
        globl += step_global
    return TrafficReport(
        schedule.collective,
        schedule.algorithm,
        schedule.p,
        schedule.n,
        total,
        globl,
        tuple(per_step),
        histogram,
    )


def transfer_csv_rows(schedule: CommSchedule, groupmap: GroupMap):
    """Flat per-transfer rows: (step, src, dst, bytes, global flag)."""
    if schedule.p != groupmap.p:
        raise ValueError(
            f"schedule has {schedule.p} ranks but group map covers {groupmap.p}"
        )
    group = groupmap.group_of
    for i, step in enumerate(schedule.steps):
        for t in step:
            yield (i, t.src, t.dst, t.nbytes, int(group[t.src] != group[t.dst]))


def distance_profile(schedule: CommSchedule) -> tuple[dict[int, int], ...]:
    """Per-step histogram: modulo distance -> transfer count."""
    profile = []
    for step in schedule.steps:
        counts: dict[int, int] = {}
        for t in step:
            d = modulo_distance(t.src, t.dst, schedule.p)
            counts[d] = counts.get(d, 0) + 1
        profile.append(counts)
    return tuple(profile)


def compare(
    baseline: CommSchedule, candidate: CommSchedule, groupmap: GroupMap
) -> ReductionStat:
    """Global-traffic reduction of candidate over baseline (same collective/p/n)."""
    if (baseline.collective, baseline.p, baseline.n) != (
        candidate.collective,
        candidate.p,
        candidate.n,
    ):
        raise ValueError("schedules must share collective, p and n to compare")
    base = account(baseline, groupmap).global_bytes
    cand = account(candidate, groupmap).global_bytes
    if base == 0:
        return ReductionStat(
            baseline.algorithm, candidate.algorithm, base, cand, False, None
        )
    return ReductionStat(
        baseline.algorithm, candidate.algorithm, base, cand, True, 1 - cand / base
    )


# schedules are immutable, so sweeps over many same-sized jobs share builds
_cached_build = lru_cache(maxsize=64)(build_schedule)


@dataclass(frozen=True)
class JobReduction:
    job: str
    p: int
    num_groups: int
    baseline_global: int
    candidate_global: int
    comparable: bool
    reduction: Optional[float]


def summarize(reductions: Sequence[float]) -> dict:
    """Arithmetic mean, extremes and a percentile table of reduction values."""
    if not reductions:
        return {"count": 0}
    ordered = sorted(reductions)

    def percentile(q: float) -> float:
        # nearest-rank on the sorted values
        k = max(0, min(len(ordered) - 1, round(q * (len(ordered) - 1))))
        return ordered[k]

    return {
        "count": len(ordered),
        "mean": fmean(ordered),
        "min": ordered[0],
        "max": ordered[-1],
        "percentiles": {
            "p5": percentile(0.05),
            "p25": percentile(0.25),
            "p50": percentile(0.50),
            "p75": percentile(0.75),
            "p95": percentile(0.95),
        },
    }


def allocation_sweep(
    records: Sequence[AllocationRecord],
    collective: str,
    baseline_variant: str,
    candidate_variant: str,
    n: Optional[int] = None,
    truncate_to_power_of_two: bool = False,
) -> tuple[list[JobReduction], dict]:
    """Per-job traffic comparison over an allocation trace.

    Jobs whose node count is not a power of two are truncated when asked,
    otherwise skipped with a warning entry omitted from the output.
    """
    import warnings

    if not records:
        raise ValueError("empty allocation record set")
    rows = []
    for record in records:
        p = record.num_nodes
        if not is_power_of_two(p):
            if not truncate_to_power_of_two:
                warnings.warn(
                    f"job {record.job}: {p} nodes is not a power of two, skipped"
                )
                continue
            p = 1 << (p.bit_length() - 1)
        groupmap = record.group_map(p)
        bytes_n = n if n is not None else 4 * p
        baseline = _cached_build(collective, baseline_variant, p, bytes_n)
        candidate = _cached_build(collective, candidate_variant, p, bytes_n)
        stat = compare(baseline, candidate, groupmap)
        rows.append(
            JobReduction(
                record.job,
                p,
                groupmap.num_groups,
                stat.baseline_global,
                stat.candidate_global,
                stat.comparable,
                stat.reduction,
            )
        )
    rows.sort(key=lambda row: (row.p, row.job))
    summary = summarize([r.reduction for r in rows if r.comparable])
    return rows, summary
