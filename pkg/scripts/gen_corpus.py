#!/usr/bin/env python3
"""Generate synthetic JSONL corpora and query sets for experiments.

Example:
    python scripts/gen_corpus.py out/ --docs 50000 --queries 200 --clustered
"""

import argparse
from pathlib import Path

from sbsearch.synthetic import (
    clustered_collection,
    clustered_queries,
    random_collection,
    random_queries,
    write_jsonl,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir")
    ap.add_argument("--docs", type=int, default=10_000)
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--vocab", type=int, default=5000)
    ap.add_argument("--avg-terms", type=int, default=40)
    ap.add_argument("--query-terms", type=int, default=8)
    ap.add_argument("--clustered", action="store_true")
    ap.add_argument("--clusters", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.clustered:
        col = clustered_collection(args.docs, vocab=args.vocab, avg_terms=args.avg_terms,
                                   num_clusters=args.clusters, seed=args.seed)
        queries = clustered_queries(args.queries, collection_seed=args.seed, vocab=args.vocab,
                                    num_clusters=args.clusters,
                                    terms_per_query=args.query_terms, seed=args.seed + 1)
    else:
        col = random_collection(args.docs, vocab=args.vocab, avg_terms=args.avg_terms,
                                seed=args.seed)
        queries = random_queries(args.queries, vocab=args.vocab,
                                 terms_per_query=args.query_terms, seed=args.seed + 1)
    write_jsonl(outdir / "docs.jsonl", list(zip(col.ext_ids, col.vectors)))
    write_jsonl(outdir / "queries.jsonl", queries)
    print(f"wrote {len(col)} docs and {len(queries)} queries to {outdir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
