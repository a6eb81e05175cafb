"""Batch command-line front door: ingest, build, search, evaluate, bench, inspect, plan-gamma.

Configuration precedence is flags > --config file > --preset > defaults. The
LSP_THREADS environment variable sets the default worker count for parallel
search (bench is always single-threaded).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import container, evalmetrics, planner
from .ingest import ingest_jsonl, load_collection, load_queries, save_collection
from .retrieval import PruningConfig, safe_config, search

PRESETS = {
    "k10": {"k": 10, "gamma": 250, "beta": 0.33, "b": 16, "c": 16},
    "k1000": {"k": 1000, "gamma": 1000, "beta": 0.33, "b": 4, "c": 16},
}

_SEARCH_KEYS = ("k", "gamma", "mu", "eta", "beta", "variant")
_BUILD_KEYS = ("b", "c", "format", "bits", "strategy", "with_avg", "seed")


def _merge_options(args, keys) -> dict:
    """flags > config file > preset."""
    merged: dict = {}
    preset = getattr(args, "preset", None)
    if preset:
        if preset not in PRESETS:
            raise SystemExit(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        merged.update({k: v for k, v in PRESETS[preset].items() if k in keys})
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path) as fh:
            merged.update({k: v for k, v in json.load(fh).items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _add_common_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int)
    p.add_argument("--gamma", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--variant", choices=["LSP0", "LSP1", "LSP2"])
    p.add_argument("--safe", action="store_true", help="rank-safe traversal (overrides pruning knobs)")
    p.add_argument("--preset", help="named defaults: " + ", ".join(sorted(PRESETS)))
    p.add_argument("--config", help="JSON file of option defaults")


def _pruning_config(args) -> PruningConfig:
    opts = _merge_options(args, _SEARCH_KEYS)
    k = opts.get("k", 10)
    if getattr(args, "safe", False):
        return safe_config(k)  # rank-safe: overrides every knob including beta
    defaults = {"gamma": 1 << 31, "mu": 1.0, "eta": 1.0, "beta": 1.0, "variant": "LSP0"}
    defaults.update(opts)
    defaults["k"] = k
    return PruningConfig(**defaults)


def _load_index_queries(args):
    index = container.load_index(args.index)
    vocab = None
    if args.vocab:
        vocab = {}
        with open(args.vocab) as fh:
            for line in fh:
                term, tid = line.rstrip("\n").split("\t")
                vocab[term] = int(tid)
    queries = load_queries(args.queries, index.params, vocab)
    return index, queries


def cmd_ingest(args) -> int:
    collection = ingest_jsonl(args.input, vocab_policy=args.vocab_policy)
    save_collection(collection, args.output)
    print(f"ingested {len(collection)} docs -> {args.output}")
    print(f"global_max={collection.params.global_max} bits={collection.params.bits}")
    if collection.vocab is not None:
        print(f"vocabulary: {len(collection.vocab)} terms (mapping saved alongside output)")
    return 0


def cmd_build(args) -> int:
    opts = _merge_options(args, _BUILD_KEYS)
    collection = load_collection(args.collection)
    layout = None
    if args.order_file:
        from .partition import layout_from_external_order

        ext_order = [ln.strip() for ln in Path(args.order_file).read_text().splitlines() if ln.strip()]
        layout = layout_from_external_order(collection, opts.get("b", 16), opts.get("c", 16), ext_order)
    index = container.build_index(
        collection,
        b=opts.get("b", 16),
        c=opts.get("c", 16),
        doc_format=opts.get("format", "flat"),
        bits=opts.get("bits", 8),
        with_avg=bool(opts.get("with_avg", False)),
        strategy=opts.get("strategy", "input-order"),
        seed=opts.get("seed"),
        layout=layout,
    )
    container.save_index(index, args.output)
    size = Path(args.output).stat().st_size
    print(f"built index: {index.num_docs} docs, {index.layout.num_blocks} blocks, "
          f"{index.layout.num_superblocks} superblocks -> {args.output} ({size} bytes)")
    return 0


def cmd_search(args) -> int:
    index, queries = _load_index_queries(args)
    config = _pruning_config(args)
    workers = args.workers if args.workers is not None else int(os.environ.get("LSP_THREADS", "1"))

    def run_one(item):
        qid, query = item
        t0 = time.perf_counter()
        results = search(query, index, config)
        return qid, results, time.perf_counter() - t0

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, queries))
    else:
        outcomes = [run_one(item) for item in queries]

    results = {qid: res for qid, res, _ in outcomes}
    evalmetrics.write_run(args.output, results, tag=args.tag)
    if args.latency_out:
        with open(args.latency_out, "w") as fh:
            fh.write("qid\tmillis\n")
            for qid, _res, secs in outcomes:
                fh.write(f"{qid}\t{secs * 1e3:.3f}\n")
    total = sum(secs for _, _, secs in outcomes)
    print(f"searched {len(queries)} queries in {total:.3f}s -> {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    run = evalmetrics.read_run(args.run)
    qrels = evalmetrics.read_qrels(args.qrels)
    safe_run = evalmetrics.read_run(args.safe_run) if args.safe_run else None
    metrics = evalmetrics.evaluate(run, qrels, k=args.k, safe_run=safe_run)
    for name, value in metrics.items():
        print(f"{name}: {'n/a' if value is None else f'{value:.4f}'}")
    return 0


def cmd_bench(args) -> int:
    index, queries = _load_index_queries(args)
    config = _pruning_config(args)
    for _ in range(args.warmup):
        for _qid, query in queries:
            search(query, index, config)
    per_query = []
    for _qid, query in queries:
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            search(query, index, config)
            times.append(time.perf_counter() - t0)
        per_query.append(sum(times) / len(times))
    lat = np.array(per_query) * 1e3
    print(f"queries: {len(queries)}  warmup: {args.warmup}  repeats: {args.repeats}")
    print(f"mean: {lat.mean():.3f} ms")
    print(f"median: {np.median(lat):.3f} ms")
    print(f"p99: {np.percentile(lat, 99):.3f} ms")
    return 0


def cmd_inspect(args) -> int:
    info = container.inspect_index(args.index)
    for key in ("version", "doc_format", "has_avg_store", "b", "c", "num_docs",
                "num_blocks", "num_superblocks", "bits_block", "bits_superblock",
                "doc_bits", "global_max"):
        print(f"{key}: {info[key]}")
    print(f"file_size: {info['file_size']}")
    print(f"header_len: {info['header_len']}")
    for s in info["sections"]:
        print(f"section {s['name']}: {s['length']} bytes")
    print(f"sections_total: {info['section_total']}")
    return 0


def cmd_plan_gamma(args) -> int:
    index, queries = _load_index_queries(args)
    samples = planner.collect_samples(index, queries, k=args.k)
    model = planner.fit_bin_model(samples, index.layout.num_superblocks, num_bins=args.bins)
    if args.gammas:
        gammas = [int(g) for g in args.gammas.split(",")]
    else:
        gammas = [g for g in (1, 10, 25, 50, 100, 250, 500, 1000, 2000, 3000)
                  if g <= index.layout.num_superblocks] or [index.layout.num_superblocks]
    table = planner.confidence_table(model, gammas)
    if args.output:
        planner.write_confidence_tsv(args.output, table)
        print(f"wrote confidence table -> {args.output}")
    else:
        print(f"# {planner.POSITION_INDEPENDENCE_NOTE}")
        print("gamma\tconfidence_no_topk")
        for gamma, p in table:
            print(f"{gamma}\t{p:.6f}")
    if args.tightness_out:
        report = planner.tightness_report(index, queries)
        planner.write_histogram_tsv(args.tightness_out, report)
        print(f"wrote tightness histogram (mean={report.mean:.3f}) -> {args.tightness_out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbsearch",
                                     description="two-level pruned sparse retrieval")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="JSONL corpus -> quantized collection")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--vocab-policy", choices=["auto", "integer", "intern"], default="auto",
                   dest="vocab_policy")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="collection -> index container")
    p.add_argument("collection")
    p.add_argument("output")
    p.add_argument("--b", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--format", choices=["compact", "flat", "fwd"])
    p.add_argument("--bits", type=int, choices=[4, 8])
    p.add_argument("--strategy", choices=["input-order", "kmeans-lite", "random"])
    p.add_argument("--with-avg", action="store_const", const=True, dest="with_avg")
    p.add_argument("--seed", type=int)
    p.add_argument("--order-file", help="newline-separated external doc ids fixing the layout")
    p.add_argument("--preset")
    p.add_argument("--config")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("search", help="run top-k queries, write a run file")
    p.add_argument("index")
    p.add_argument("queries")
    p.add_argument("output")
    _add_common_search_flags(p)
    p.add_argument("--vocab", help="term mapping TSV from ingest (string vocabularies)")
    p.add_argument("--tag", default="sbsearch")
    p.add_argument("--workers", type=int, help="parallel query workers (default $LSP_THREADS or 1)")
    p.add_argument("--latency-out", dest="latency_out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="score a run file against qrels")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--safe-run", dest="safe_run", help="safe run for the preserved-recall ratio")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="single-threaded latency benchmark")
    p.add_argument("index")
    p.add_argument("queries")
    _add_common_search_flags(p)
    p.add_argument("--vocab")
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("inspect", help="dump header and per-section sizes")
    p.add_argument("index")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("plan-gamma", help="confidence table for the guaranteed superblock count")
    p.add_argument("index")
    p.add_argument("queries")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--gammas", help="comma-separated gamma values")
    p.add_argument("--vocab")
    p.add_argument("--output")
    p.add_argument("--tightness-out", dest="tightness_out")
    p.set_defaults(func=cmd_plan_gamma)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
