"""Rank-to-group assignments for traffic accounting.

Groups model densely connected islands (Dragonfly groups, fat-tree
subtrees); any transfer between ranks in different groups crosses a global
link.  Maps come from synthetic block layouts, explicit lists, or ingested
allocation files.

Allocation files are CSV with header ``job,node,group``: one row per
allocated node, rows ordered by rank within each job (one process per
node).  File order is authoritative; no hostname sorting is applied.
"""

from __future__ import annotations

import csv
import random
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class AllocationParseError(ValueError):
    """Malformed allocation file; carries the offending line number."""

    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


@dataclass(frozen=True)
class GroupMap:
    p: int
    group_of: tuple[int, ...]
    source: str

    def __post_init__(self) -> None:
        if len(self.group_of) != self.p:
            raise ValueError("group_of must assign every rank")
        groups = set(self.group_of)
        if groups != set(range(len(groups))):
            raise ValueError("group ids must be dense from 0")

    @property
    def num_groups(self) -> int:
        return len(set(self.group_of))

    def group(self, rank: int) -> int:
        return self.group_of[rank]

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "source": self.source,
            "group_of": list(self.group_of),
        }


def block_groups(p: int, group_size: int) -> GroupMap:
    """Linear rank placement: group_of(r) = r // group_size."""
    if group_size < 1:
        raise ValueError(f"group size must be >= 1, got {group_size}")
    return GroupMap(p, tuple(r // group_size for r in range(p)), f"block:{group_size}")


def explicit_groups(assignment: Sequence[int]) -> GroupMap:
    """Group map from an explicit per-rank list, renumbered densely."""
    dense: dict[int, int] = {}
    renamed = tuple(dense.setdefault(g, len(dense)) for g in assignment)
    return GroupMap(len(renamed), renamed, "explicit")


@dataclass(frozen=True)
class AllocationRecord:
    """One job's ordered node list with per-node group ids."""

    job: str
    nodes: tuple[str, ...]
    groups: tuple[int, ...]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def group_map(self, p: Optional[int] = None) -> GroupMap:
        """GroupMap for the first p ranks (default: all), one rank per node."""
        take = self.num_nodes if p is None else p
        if take > self.num_nodes:
            raise ValueError(f"job {self.job} has only {self.num_nodes} nodes")
        dense: dict[int, int] = {}
        renamed = tuple(dense.setdefault(g, len(dense)) for g in self.groups[:take])
        return GroupMap(take, renamed, f"file:{self.job}")


def load_allocation(path) -> list[AllocationRecord]:
    """Parse an allocation CSV; jobs with fewer than 2 nodes are skipped."""
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or [cell.strip() for cell in rows[0]] != ["job", "node", "group"]:
        raise AllocationParseError(1, "expected header 'job,node,group'")
    jobs: dict[str, tuple[list[str], list[int]]] = {}
    seen: set[tuple[str, str]] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise AllocationParseError(lineno, f"expected 3 fields, got {len(row)}")
        job, node, group_text = (cell.strip() for cell in row)
        if not job or not node:
            raise AllocationParseError(lineno, "empty job or node field")
        if (job, node) in seen:
            raise AllocationParseError(lineno, f"duplicate row for ({job}, {node})")
        seen.add((job, node))
        try:
            group = int(group_text)
        except ValueError:
            raise AllocationParseError(lineno, f"group {group_text!r} is not an integer")
        nodes, groups = jobs.setdefault(job, ([], []))
        nodes.append(node)
        groups.append(group)
    records = []
    for job, (nodes, groups) in jobs.items():
        if len(nodes) < 2:
            warnings.warn(f"job {job}: fewer than 2 nodes, skipped")
            continue
        records.append(AllocationRecord(job, tuple(nodes), tuple(groups)))
    return records


def save_allocation(records: Iterable[AllocationRecord], path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["job", "node", "group"])
        for record in records:
            for node, group in zip(record.nodes, record.groups):
                writer.writerow([record.job, node, group])


def synthetic_block_records(
    p_values: Sequence[int],
    jobs_per_p: int,
    group_sizes: tuple[int, int],
    seed: int = 0,
) -> list[AllocationRecord]:
    """Jobs laid out block-wise with random group sizes (inclusive range)."""
    rng = random.Random(seed)
    lo, hi = group_sizes
    records = []
    for p in p_values:
        for k in range(jobs_per_p):
            size = rng.randint(lo, hi)
            nodes = tuple(f"n{p}-{k}-{i:05d}" for i in range(p))
            groups = tuple(i // size for i in range(p))
            records.append(AllocationRecord(f"job-p{p}-{k}", nodes, groups))
    return records


def torus_coords(p: int, dims: Sequence[int]) -> list[tuple[int, ...]]:
    """Row-major rank -> coordinate mapping over a multi-dimensional torus."""
    total = 1
    for d in dims:
        if d < 1:
            raise ValueError(f"dimension {d} must be >= 1")
        total *= d
    if total != p:
        raise ValueError(f"product of dims {tuple(dims)} is {total}, expected {p}")
    coords = []
    for r in range(p):
        rest, coord = r, []
        for d in reversed(dims):
            rest, axis = divmod(rest, d)
            coord.append(axis)
        coords.append(tuple(reversed(coord)))
    return coords


def coord_to_rank(coord: Sequence[int], dims: Sequence[int]) -> int:
    rank = 0
    for axis, d in zip(coord, dims):
        if not 0 <= axis < d:
            raise ValueError(f"coordinate {tuple(coord)} out of bounds for {tuple(dims)}")
        rank = rank * d + axis
    return rank
