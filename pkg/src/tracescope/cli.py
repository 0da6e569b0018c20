"""Operator command line: bundle, serve, stats, export, gen.

Exit codes: 0 success, 1 usage error, 2 data error (bad trace, unknown
dataset, bad parameters), 3 I/O error (unreadable file, disk full).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from tracescope import query as q
from tracescope.errors import StorageFullError, TraceParseError, TracescopeError
from tracescope.generate import write_trace
from tracescope.indices import DEFAULT_BIN_COUNT
from tracescope.store import DatasetStore

DEFAULT_DATA_DIR = os.environ.get("TRACESCOPE_DATA_DIR", "tracescope-data")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented usage code is 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tracescope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bundle", help="ingest a trace into the dataset store")
    p.add_argument("trace", help="trace file in the canonical line format")
    p.add_argument("--label", required=True, help="display label for the dataset")
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT, help="summed-area-table bins")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.set_defaults(func=cmd_bundle)

    p = sub.add_parser("serve", help="run the HTTP API server")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.add_argument("--bins", type=int, default=DEFAULT_BIN_COUNT)
    p.add_argument("--overdraw", type=float, default=q.DEFAULT_OVERDRAW)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("stats", help="print summary statistics for a dataset")
    p.add_argument("dataset_id")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export", help="write query results as CSV")
    p.add_argument("dataset_id")
    p.add_argument("kind", choices=["utilization", "histogram", "boxplot"])
    p.add_argument("--t0", type=int, default=None)
    p.add_argument("--t1", type=int, default=None)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--bins", type=int, default=32, help="histogram bin count")
    p.add_argument("--scale", choices=["linear", "log"], default="linear")
    p.add_argument("--node", type=int, default=None)
    p.add_argument("--counter", default=None, help="counter name for boxplot")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--data-dir", default=DEFAULT_DATA_DIR)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("gen", help="generate a synthetic trace with ground truth")
    p.add_argument("out", help="output trace path")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--locations", type=int, default=8)
    p.add_argument("--intervals", type=int, default=1000)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument(
        "--counter",
        action="append",
        default=[],
        metavar="NAME:COEFF",
        help="linear accumulator counter, value = COEFF * time (repeatable)",
    )
    p.add_argument("--samples", type=int, default=20, help="counter samples per location")
    p.add_argument("--allow-overlap", action="store_true")
    p.add_argument("--truth", default=None, help="write ground truth JSON here")
    p.set_defaults(func=cmd_gen)

    return parser


def cmd_bundle(args) -> int:
    store = DatasetStore(args.data_dir, bin_count=args.bins)
    ds_id, reused = store.bundle(args.trace, args.label, bin_count=args.bins)
    print(f"dataset {ds_id}" + (" (reused existing bundle)" if reused else ""))
    ds = store.load(ds_id)
    counts = Counter(code for code, _ in ds.warnings)
    for code in sorted(counts):
        print(f"warning {code} x{counts[code]}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from tracescope.api import create_app

    store = DatasetStore(args.data_dir, bin_count=args.bins)
    app = create_app(store, overdraw=args.overdraw)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_stats(args) -> int:
    store = DatasetStore(args.data_dir)
    ds = store.load(args.dataset_id)
    meta = ds.meta
    print(f"dataset {meta.dataset_id}")
    print(f"label {meta.label}")
    print(f"intervals {meta.interval_count}")
    print(f"locations {meta.location_count}")
    print(f"span {meta.span} ticks")
    if meta.counter_names:
        print("counters " + " ".join(meta.counter_names))
    ranked = sorted(
        ds.tree.nodes, key=lambda n: (-n.subtree_duration, n.node_id)
    )[:10]
    print("top contexts by subtree duration:")
    for node in ranked:
        path = "/".join(ds.primitives.name_of(p) for p in node.context)
        print(f"  {node.subtree_duration:>12} ticks  x{node.interval_count:<6} {path}")
    durs = ds.cols.durations
    if len(durs):
        print(
            "durations min {} median {} p99 {} max {}".format(
                int(durs.min()),
                float(np.median(durs)),
                float(np.percentile(durs, 99)),
                int(durs.max()),
            )
        )
    return 0


def _csv_cell(value: float) -> str:
    return "" if not np.isfinite(value) else str(float(value))


def cmd_export(args) -> int:
    store = DatasetStore(args.data_dir)
    ds = store.load(args.dataset_id)
    t0 = 0 if args.t0 is None else args.t0
    t1 = ds.meta.time_end if args.t1 is None else args.t1
    rows: list[list] = []
    if args.kind == "utilization":
        series = q.utilization(ds, t0, t1, args.width, node=args.node)
        bounds = q.pixel_bounds(t0, t1, args.width)
        rows.append(["pixel", "t_start", "t_end", "value"])
        for i, v in enumerate(series.values.tolist()):
            rows.append([i, int(bounds[i]), int(bounds[i + 1]), str(float(v))])
    elif args.kind == "histogram":
        hist = q.histogram(ds, args.bins, node=args.node, scale=args.scale)
        rows.append(["bin", "edge_lo", "edge_hi", "count"])
        for i, c in enumerate(hist.counts.tolist()):
            rows.append(
                [i, str(float(hist.bin_edges[i])), str(float(hist.bin_edges[i + 1])), int(c)]
            )
    else:
        if not args.counter:
            raise TracescopeError("boxplot export requires --counter")
        series = q.counter_rates(ds, args.counter, t0, t1, args.width)
        bounds = q.pixel_bounds(t0, t1, args.width)
        rows.append(["pixel", "t_start", "t_end", "min", "max", "mean", "stddev"])
        for i in range(args.width):
            rows.append(
                [
                    i,
                    int(bounds[i]),
                    int(bounds[i + 1]),
                    _csv_cell(series.mins[i]),
                    _csv_cell(series.maxs[i]),
                    _csv_cell(series.means[i]),
                    _csv_cell(series.stddevs[i]),
                ]
            )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    print(f"wrote {args.out} ({len(rows) - 1} rows)")
    return 0


def cmd_gen(args) -> int:
    counters: dict[str, float] = {}
    for item in args.counter:
        name, sep, coeff = item.partition(":")
        if not sep or not name:
            raise TracescopeError(f"counter spec must be NAME:COEFF, got {item!r}")
        try:
            counters[name] = float(coeff)
        except ValueError:
            raise TracescopeError(f"bad counter coefficient in {item!r}") from None
    truth = write_trace(
        args.out,
        seed=args.seed,
        locations=args.locations,
        intervals=args.intervals,
        max_depth=args.depth,
        counters=counters,
        samples_per_location=args.samples,
        allow_overlap=args.allow_overlap,
    )
    print(f"wrote {args.out}: {truth.interval_count} intervals, span {truth.span} ticks")
    if args.truth:
        Path(args.truth).write_text(
            json.dumps(truth.to_dict(), indent=2), encoding="utf-8"
        )
        print(f"wrote {args.truth}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TraceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for issue in exc.issues[:10]:
            print(f"  line {issue.line_no}: {issue.message}", file=sys.stderr)
        return 2
    except StorageFullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except TracescopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
