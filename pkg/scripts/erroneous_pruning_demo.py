#!/usr/bin/env python3
"""Demonstrate how pure threshold-ratio pruning can starve a query of results.

Builds a corpus whose superblocks use disjoint vocabularies. A query touching
one superblock leaves every other superblock's bound at zero, so a small mu
lets the predicate-only strategy (no guaranteed superblocks) prune everything
else and return far fewer than k documents. Guaranteeing the top-gamma
superblocks fills the result list, zero scores and all.
"""

import argparse

import numpy as np

from sbsearch.container import build_index
from sbsearch.corpus import Collection
from sbsearch.retrieval import PruningConfig, search
from sbsearch.sparse import QuantizationParams, SparseVector


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--superblocks", type=int, default=16)
    ap.add_argument("--b", type=int, default=16)
    ap.add_argument("--c", type=int, default=16)
    ap.add_argument("--k", type=int, default=1000)
    ap.add_argument("--mu", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    terms_per_super = 64
    docs = []
    for x in range(args.superblocks):
        base = x * terms_per_super
        for _ in range(args.b * args.c):
            terms = np.sort(rng.choice(terms_per_super, size=8, replace=False)) + base
            weights = rng.integers(100, 256, size=8)
            docs.append(SparseVector.from_arrays(terms.astype(np.int64),
                                                 weights.astype(np.int64)))
    ids = [f"d{i:06d}" for i in range(len(docs))]
    col = Collection(ids, docs, QuantizationParams(global_max=255.0, bits=8))
    index = build_index(col, b=args.b, c=args.c, with_avg=True)

    gamma = -(-args.k // (args.b * args.c))
    predicate_only = PruningConfig(k=args.k, gamma=0, mu=args.mu, eta=1.0, variant="LSP2")
    guaranteed = PruningConfig(k=args.k, gamma=gamma, variant="LSP0")
    print(f"{len(col)} docs in {args.superblocks} disjoint superblocks; "
          f"k={args.k}, mu={args.mu}, gamma={gamma} (gamma*c*b={gamma * args.b * args.c})")
    print(f"\n{'query target':<14} {'predicate-only':>15} {'guaranteed':>11}")
    for target in range(min(args.superblocks, 8)):
        terms = rng.choice(terms_per_super, size=5, replace=False) + target * terms_per_super
        q = SparseVector.from_pairs([(int(t), 10) for t in terms])
        n_pred = len(search(q, index, predicate_only))
        n_guard = len(search(q, index, guaranteed))
        flag = "  <- shortfall" if n_pred < args.k else ""
        print(f"superblock {target:<3} {n_pred:>15} {n_guard:>11}{flag}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
