#!/usr/bin/env python3
"""Sweep the guaranteed-superblock count (and optionally mu) on a synthetic corpus.

Builds one index, runs a safe reference pass, then reports mean latency and
preserved recall for each configuration. Useful for picking gamma without a
grid search over real data.

Example:
    python scripts/sweep_gamma.py --docs 20000 --k 100 --gammas 10,50,100,250
"""

import argparse
import time

import numpy as np

from sbsearch.container import build_index
from sbsearch.retrieval import PruningConfig, SearchStats, safe_config, search
from sbsearch.synthetic import (
    clustered_collection,
    clustered_queries,
    random_collection,
    random_queries,
)


def run_config(index, queries, cfg, safe_sets):
    times, ratios, visited = [], [], []
    for qid, q in queries:
        stats = SearchStats()
        t0 = time.perf_counter()
        res = search(q, index, cfg, stats=stats)
        times.append(time.perf_counter() - t0)
        got = {d for d, _ in res}
        ratios.append(len(got & safe_sets[qid]) / max(len(safe_sets[qid]), 1))
        visited.append(stats.superblocks_visited)
    return (float(np.mean(times)) * 1e3, float(np.mean(ratios)), float(np.mean(visited)))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--docs", type=int, default=20_000)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--vocab", type=int, default=5000)
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--b", type=int, default=8)
    ap.add_argument("--c", type=int, default=16)
    ap.add_argument("--bits", type=int, default=4, choices=[4, 8])
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--gammas", default="10,25,50,100,250")
    ap.add_argument("--mus", default="", help="also sweep LSP1 at these mu values per gamma")
    ap.add_argument("--clustered", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.clustered:
        col = clustered_collection(args.docs, vocab=args.vocab, seed=args.seed)
        queries = clustered_queries(args.queries, collection_seed=args.seed,
                                    vocab=args.vocab, seed=args.seed + 1)
        strategy = "kmeans-lite"
    else:
        col = random_collection(args.docs, vocab=args.vocab, seed=args.seed)
        queries = random_queries(args.queries, vocab=args.vocab, seed=args.seed + 1)
        strategy = "input-order"

    t0 = time.perf_counter()
    index = build_index(col, b=args.b, c=args.c, bits=args.bits, strategy=strategy,
                        seed=args.seed)
    print(f"index: {len(col)} docs, {index.layout.num_blocks} blocks, "
          f"{index.layout.num_superblocks} superblocks ({time.perf_counter() - t0:.1f}s build)")

    safe_cfg = safe_config(args.k, beta=args.beta)
    safe_sets = {qid: {d for d, _ in search(q, index, safe_cfg)} for qid, q in queries}
    safe_ms, _, safe_visited = run_config(index, queries, safe_cfg, safe_sets)
    print(f"\n{'config':<28} {'mean ms':>8} {'preserved':>10} {'sb visited':>11}")
    print(f"{'safe':<28} {safe_ms:>8.2f} {1.0:>10.4f} {safe_visited:>11.1f}")

    gammas = [int(g) for g in args.gammas.split(",")]
    mus = [float(m) for m in args.mus.split(",")] if args.mus else []
    for gamma in gammas:
        cfg = PruningConfig(k=args.k, gamma=gamma, beta=args.beta, variant="LSP0")
        ms, preserved, vis = run_config(index, queries, cfg, safe_sets)
        print(f"{f'LSP0 gamma={gamma}':<28} {ms:>8.2f} {preserved:>10.4f} {vis:>11.1f}")
        for mu in mus:
            cfg = PruningConfig(k=args.k, gamma=gamma, mu=mu, beta=args.beta, variant="LSP1")
            ms, preserved, vis = run_config(index, queries, cfg, safe_sets)
            print(f"{f'LSP1 gamma={gamma} mu={mu}':<28} {ms:>8.2f} {preserved:>10.4f} {vis:>11.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
