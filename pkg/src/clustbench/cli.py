"""Command line entry point: ``clustbench run|indexes|compare|ensemble``.

Exit codes: 0 success, 1 validation error, 2 some datasets failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .calibration import EnsembleSpec, ensemble_labels, generate_ensemble
from .data import (
    DataError,
    euclidean_distances,
    impute_mean,
    load_csv,
    read_partition_file,
    scale_zscore,
)
from .external import external_indexes
from .harness import ConfigError, emit_reports, load_config, run_benchmark, summarize
from .internal import IndexParams, all_internal

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("clustbench")


def _prepare(path, truth_col, scale):
    d = impute_mean(load_csv(path, truth_col))
    return scale_zscore(d) if scale == "zscore" else d


def _dump(obj):
    def clean(v):
        if isinstance(v, float) and np.isnan(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v

    json.dump(clean(obj), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    run = run_benchmark(cfg)
    summaries = summarize(run.reports) if run.reports else None
    for path in emit_reports(run, summaries):
        log.info("wrote %s", path)
    for o in run.failures:
        print(f"dataset {o.dataset} failed: {o.error}", file=sys.stderr)
    return EXIT_PARTIAL if run.failures else EXIT_OK


def cmd_indexes(args) -> int:
    d = _prepare(args.data, args.truth_col, args.scale)
    part = read_partition_file(args.partition, d.n)
    dm = euclidean_distances(d)
    params = IndexParams(args.sindex_p, args.kernel_p, args.cvnnd_k)
    vec = all_internal(d, dm, part, params)
    out = {"n": d.n, "p": d.p, "K": part.K, "indexes": vec.as_dict(), "undefined": vec.errors}
    if d.truth is not None:
        out["external"] = external_indexes(part, d.truth)
    _dump(out)
    return EXIT_OK


def cmd_compare(args) -> int:
    truth = read_partition_file(args.truth)
    pred = read_partition_file(args.pred, truth.n)
    _dump(external_indexes(pred, truth))
    return EXIT_OK


def cmd_ensemble(args) -> int:
    d = _prepare(args.data, args.truth_col, args.scale)
    spec = EnsembleSpec(K=args.k, per_algorithm=args.per_algorithm, master_seed=args.seed)
    parts = generate_ensemble(euclidean_distances(d), spec)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(ensemble_labels(spec))
        for row in np.column_stack([p.labels for p in parts]):
            w.writerow(row.tolist())
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clustbench",
        description="Calibrated internal and external cluster validation benchmarks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a benchmark described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--jobs", type=int, help="datasets evaluated in parallel")
    p.set_defaults(func=cmd_run)

    def data_args(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--truth-col", help="column holding reference labels")
        p.add_argument("--scale", choices=["zscore", "none"], default="zscore")

    p = sub.add_parser("indexes", help="raw internal indexes of one partition")
    data_args(p)
    p.add_argument("--partition", required=True, help="one label per line")
    p.add_argument("--sindex-p", type=float, default=0.1)
    p.add_argument("--kernel-p", type=float, default=0.1)
    p.add_argument("--cvnnd-k", type=int, default=2)
    p.set_defaults(func=cmd_indexes)

    p = sub.add_parser("compare", help="ARI, VI and BCubed between two partitions")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ensemble", help="write random calibration clusterings as CSV")
    data_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--per-algorithm", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for partial failures
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
