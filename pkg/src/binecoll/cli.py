"""Command-line interface: verification, schedule dumps, traffic comparison,
and allocation analysis.

Exit status: 0 on success, 1 when any verification fails, 2 on usage or
configuration errors.  All outputs are deterministic for a fixed
configuration and seed; JSON is emitted with sorted keys and CSV rows in
canonical order, so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor

from .negabinary import UnsupportedConfigError
from .schedules import (
    COLLECTIVES,
    CONTIGUITY_MODES,
    ROOTED,
    VARIANTS,
    build_schedule,
)
from .simulator import random_mutation, verify
from .topology import block_groups, load_allocation
from .traffic import account, allocation_sweep, compare, summarize, transfer_csv_rows
from .trees import TreeKind, build_tree

DEFAULT_CUTOVER = 1 << 20  # small/large switchover; a tuning value, not a claim

#: allreduce pairings analyzed per job: (label, binomial baseline, bine candidate)
ALLOC_PAIRINGS = (
    ("small", "recursive_doubling", "bine_small"),
    ("large", "binomial_large", "bine_large"),
)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_variant(collective: str, variant: str, n: int, cutover: int) -> str:
    """Map the generic 'bine' / 'bine_auto' name to a concrete variant."""
    if variant in ("bine", "bine_auto") and variant not in VARIANTS[collective]:
        small = "bine_small" if "bine_small" in VARIANTS[collective] else "bine"
        large = "bine_large" if "bine_large" in VARIANTS[collective] else small
        return small if n < cutover else large
    return variant


def _variants_for(collective: str, spec: str) -> list[str]:
    if spec == "all":
        return list(VARIANTS[collective])
    return [v for v in spec.split(",") if v]


def _emit(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def _dump_json(payload, path) -> None:
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", path)


def _dump_csv(header, rows, path) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _emit(buffer.getvalue(), path)


def _group_map(spec: str, p: int):
    kind, _, value = spec.partition(":")
    if kind == "block" and value:
        return block_groups(p, int(value))
    if kind == "file" and value:
        for record in load_allocation(value):
            if record.num_nodes == p:
                return record.group_map()
        raise UnsupportedConfigError(f"no job with {p} nodes in {value}")
    raise UnsupportedConfigError(
        f"group map spec {spec!r} not understood (use block:<size> or file:<path>)"
    )


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_one(args_tuple):
    collective, variant, p, n, root, contiguity, mutations, seed = args_tuple
    schedule = build_schedule(collective, variant, p, n, root=root, contiguity=contiguity)
    report = verify(schedule)
    undetected = 0
    if report.passed and mutations:
        tag = zlib.crc32(f"{collective}/{variant}/{p}/{root}".encode())
        rng = random.Random(seed ^ tag)
        for _ in range(mutations):
            if verify(random_mutation(schedule, rng)).passed:
                undetected += 1
    return collective, variant, p, root, report, undetected


def cmd_verify(args) -> int:
    combos = []
    for collective in (COLLECTIVES if args.collective == "all" else args.collective.split(",")):
        if collective not in COLLECTIVES:
            raise UnsupportedConfigError(f"unknown collective {collective!r}")
        for variant in _variants_for(collective, args.variant):
            for p in args.p:
                for n in args.n or [4 * p]:
                    concrete = _resolve_variant(collective, variant, n, args.cutover)
                    roots = args.root if collective in ROOTED else [0]
                    for root in roots:
                        if root >= p:
                            continue
                        combos.append(
                            (collective, concrete, p, n, root,
                             args.contiguity, args.mutations, args.seed)
                        )
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_verify_one, combos))
    else:
        results = [_verify_one(c) for c in combos]

    failures = 0
    reports = []
    for collective, variant, p, root, report, undetected in results:
        ok = report.passed and undetected == 0
        failures += 0 if ok else 1
        line = (
            f"{'PASS' if ok else 'FAIL'} {collective}/{variant} "
            f"p={p} n={report.n} root={root}"
        )
        if args.mutations and report.passed:
            line += f" mutations={args.mutations - undetected}/{args.mutations} detected"
        if not report.passed:
            line += f" ({report.divergence})"
        print(line)
        reports.append(report.to_json_dict())
    if args.output:
        _dump_json(reports, args.output)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# schedule / tree dumps
# ---------------------------------------------------------------------------


def cmd_schedule(args) -> int:
    p = args.p[0]
    n = args.n[0] if args.n else 4 * p
    variant = _resolve_variant(args.collective, args.variant, n, args.cutover)
    schedule = build_schedule(
        args.collective, variant, p, n, root=args.root[0], contiguity=args.contiguity
    )
    if args.format == "json":
        _dump_json(schedule.to_json_dict(), args.output)
    else:
        _dump_csv(
            ["step", "src", "dst", "num_blocks", "bytes", "reduce", "move", "blocks"],
            schedule.csv_rows(),
            args.output,
        )
    return 0


def cmd_tree(args) -> int:
    tree = build_tree(TreeKind(args.kind), args.p[0], args.root[0])
    _dump_json(tree.to_json_dict(), args.output)
    return 0


# ---------------------------------------------------------------------------
# traffic comparison
# ---------------------------------------------------------------------------


def cmd_traffic(args) -> int:
    rows = []
    detail = []
    for p in args.p:
        groups = _group_map(args.groups, p)
        for n in args.n or [4 * p]:
            base_variant = _resolve_variant(args.collective, args.baseline, n, args.cutover)
            cand_variant = _resolve_variant(args.collective, args.candidate, n, args.cutover)
            baseline = build_schedule(args.collective, base_variant, p, n, root=args.root[0])
            candidate = build_schedule(args.collective, cand_variant, p, n, root=args.root[0])
            if args.per_transfer:
                for label, sched in ((base_variant, baseline), (cand_variant, candidate)):
                    detail.extend(
                        (label, p, *row) for row in transfer_csv_rows(sched, groups)
                    )
            stat = compare(baseline, candidate, groups)
            base_report = account(baseline, groups)
            rows.append(
                {
                    "collective": args.collective,
                    "p": p,
                    "n": n,
                    "groups": groups.num_groups,
                    "baseline": stat.baseline,
                    "candidate": stat.candidate,
                    "total_bytes": base_report.total_bytes,
                    "baseline_global": stat.baseline_global,
                    "candidate_global": stat.candidate_global,
                    "reduction": "" if stat.reduction is None else f"{stat.reduction:.6f}",
                    "comparable": int(stat.comparable),
                }
            )
    if args.per_transfer:
        _dump_csv(
            ["algorithm", "p", "step", "src", "dst", "bytes", "global"],
            detail,
            args.output,
        )
        return 0
    header = list(rows[0]) if rows else []
    if args.format == "json":
        _dump_json(rows, args.output)
    else:
        _dump_csv(header, [[row[k] for k in header] for row in rows], args.output)
    return 0


# ---------------------------------------------------------------------------
# allocation analysis
# ---------------------------------------------------------------------------


def _sweep_chunk(payload):
    records, base_variant, cand_variant, n, truncate = payload
    stats, _ = allocation_sweep(
        records, "allreduce", base_variant, cand_variant,
        n=n, truncate_to_power_of_two=truncate,
    )
    return stats


def cmd_alloc_analyze(args) -> int:
    records = load_allocation(args.file)
    if not records:
        raise UnsupportedConfigError(f"no usable jobs in {args.file}")
    rows = []
    summaries = {}
    for label, base_variant, cand_variant in ALLOC_PAIRINGS:
        if args.jobs > 1:
            size = -(-len(records) // args.jobs)
            chunks = [
                (records[k : k + size], base_variant, cand_variant,
                 args.n, args.truncate)
                for k in range(0, len(records), size)
            ]
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                stats = [job for chunk in pool.map(_sweep_chunk, chunks) for job in chunk]
            stats.sort(key=lambda row: (row.p, row.job))
            summary = summarize([s.reduction for s in stats if s.comparable])
        else:
            stats, summary = allocation_sweep(
                records,
                "allreduce",
                base_variant,
                cand_variant,
                n=args.n,
                truncate_to_power_of_two=args.truncate,
            )
        summaries[label] = summary
        for job in stats:
            rows.append(
                [
                    job.job,
                    job.p,
                    job.num_groups,
                    label,
                    job.baseline_global,
                    job.candidate_global,
                    "" if job.reduction is None else f"{job.reduction:.6f}",
                    int(job.comparable),
                ]
            )
    rows.sort(key=lambda row: (row[1], row[0], row[3]))
    if args.echo_groups:
        _dump_json(
            {
                record.job: record.group_map().to_json_dict()
                for record in sorted(records, key=lambda r: r.job)
            },
            args.echo_groups,
        )
    header = [
        "job", "p", "groups", "pair",
        "baseline_global", "bine_global", "reduction", "comparable",
    ]
    if args.format == "json":
        _dump_json(
            {"rows": [dict(zip(header, row)) for row in rows], "summary": summaries},
            args.output,
        )
    else:
        _dump_csv(header, rows, args.output)
        dest = sys.stdout if args.output else sys.stderr
        for label, summary in summaries.items():
            if summary.get("count"):
                dest.write(
                    f"# {label}: jobs={summary['count']} "
                    f"mean={summary['mean']:.4f} min={summary['min']:.4f} "
                    f"max={summary['max']:.4f}\n"
                )
            else:
                dest.write(f"# {label}: no comparable jobs\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binecoll",
        description="Locality-aware collective schedules: build, verify, and "
        "account inter-group traffic.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p_, default_format="csv"):
        p_.add_argument("--p", type=_parse_int_list, default=[8],
                        help="comma-separated rank counts (powers of two)")
        p_.add_argument("--n", type=_parse_int_list, default=None,
                        help="comma-separated vector sizes in bytes "
                        "(default: 4 bytes per block)")
        p_.add_argument("--root", type=_parse_int_list, default=[0],
                        help="root rank(s) for rooted collectives")
        p_.add_argument("--cutover", type=int, default=DEFAULT_CUTOVER,
                        help="small/large switchover bytes for the generic "
                        "'bine' variant (non-normative default: 1 MiB)")
        p_.add_argument("--contiguity", choices=CONTIGUITY_MODES,
                        default="noncontig", help="reduce-scatter block layout mode")
        p_.add_argument("--format", choices=("csv", "json"), default=default_format)
        p_.add_argument("--output", default=None, help="output path (default stdout)")

    v = sub.add_parser("verify", help="build and verify schedules against the oracle")
    v.add_argument("--collective", default="all")
    v.add_argument("--variant", default="all")
    v.add_argument("--mutations", type=int, default=0,
                   help="also run N random single-transfer mutations per case")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common(v, default_format="json")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("schedule", help="dump one schedule as JSON or CSV")
    s.add_argument("--collective", required=True, choices=COLLECTIVES)
    s.add_argument("--variant", required=True)
    common(s, default_format="json")
    s.set_defaults(func=cmd_schedule)

    t = sub.add_parser("traffic", help="compare global-link traffic of two variants")
    t.add_argument("--collective", required=True, choices=COLLECTIVES)
    t.add_argument("--baseline", required=True)
    t.add_argument("--candidate", required=True)
    t.add_argument("--groups", required=True, help="group map spec: block:<size>")
    t.add_argument("--per-transfer", action="store_true",
                   help="emit one CSV row per transfer instead of per config")
    common(t)
    t.set_defaults(func=cmd_traffic)

    a = sub.add_parser("alloc-analyze",
                       help="per-job allreduce traffic reduction over an allocation file")
    a.add_argument("--file", required=True, help="allocation CSV (job,node,group)")
    a.add_argument("--n", type=int, default=None)
    a.add_argument("--truncate", action="store_true",
                   help="truncate jobs to the next power of two instead of skipping")
    a.add_argument("--echo-groups", default=None, metavar="PATH",
                   help="also dump the parsed group maps as JSON (debugging)")
    a.add_argument("--jobs", type=int, default=1)
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--output", default=None)
    a.set_defaults(func=cmd_alloc_analyze)

    tr = sub.add_parser("tree", help="dump a spanning tree as JSON")
    tr.add_argument("--kind", required=True,
                    choices=[k.value for k in TreeKind])
    common(tr, default_format="json")
    tr.set_defaults(func=cmd_tree)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UnsupportedConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
