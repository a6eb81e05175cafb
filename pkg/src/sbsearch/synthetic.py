"""Synthetic corpora and queries for experiments and the test suite."""

from __future__ import annotations

import numpy as np

from .corpus import Collection
from .sparse import SparseVector, QuantizationParams


def _doc_vector(rng, vocab: int, n_terms: int, max_weight: int) -> SparseVector:
    n_terms = min(max(n_terms, 1), vocab)
    terms = np.sort(rng.choice(vocab, size=n_terms, replace=False))
    weights = rng.integers(1, max_weight + 1, size=n_terms)
    return SparseVector.from_arrays(terms.astype(np.int64), weights.astype(np.int64))


def random_collection(num_docs: int, vocab: int = 5000, avg_terms: int = 40,
                      seed: int = 0, max_weight: int = 255,
                      id_prefix: str = "d") -> Collection:
    """Uniform random docs: Poisson-length term sets, uniform term choice and weights."""
    rng = np.random.default_rng(seed)
    width = len(str(max(num_docs - 1, 1)))
    ext_ids = [f"{id_prefix}{i:0{width}d}" for i in range(num_docs)]
    lengths = np.maximum(rng.poisson(avg_terms, size=num_docs), 1)
    vectors = [_doc_vector(rng, vocab, int(n), max_weight) for n in lengths]
    return Collection(ext_ids=ext_ids, vectors=vectors,
                      params=QuantizationParams(global_max=float(max_weight), bits=8))


def clustered_collection(num_docs: int, vocab: int = 5000, avg_terms: int = 40,
                         num_clusters: int = 100, cluster_vocab: int = 200,
                         in_cluster_frac: float = 0.8, seed: int = 0,
                         max_weight: int = 255, id_prefix: str = "d") -> Collection:
    """Docs drawn from latent topic clusters: most terms from a per-cluster vocabulary.

    Documents are emitted in shuffled order so layout strategies, not input
    order, must recover the structure.
    """
    rng = np.random.default_rng(seed)
    cluster_terms = [rng.choice(vocab, size=min(cluster_vocab, vocab), replace=False)
                     for _ in range(num_clusters)]
    width = len(str(max(num_docs - 1, 1)))
    ext_ids = [f"{id_prefix}{i:0{width}d}" for i in range(num_docs)]
    assignments = rng.integers(0, num_clusters, size=num_docs)
    vectors = []
    for i in range(num_docs):
        n_terms = min(max(int(rng.poisson(avg_terms)), 1), vocab)
        n_in = int(round(n_terms * in_cluster_frac))
        pool = cluster_terms[assignments[i]]
        chosen = set(rng.choice(pool, size=min(n_in, pool.size), replace=False).tolist())
        while len(chosen) < n_terms:
            chosen.add(int(rng.integers(0, vocab)))
        terms = np.sort(np.fromiter(chosen, dtype=np.int64))
        weights = rng.integers(1, max_weight + 1, size=terms.size).astype(np.int64)
        vectors.append(SparseVector.from_arrays(terms, weights))
    perm = rng.permutation(num_docs)
    return Collection(ext_ids=[ext_ids[i] for i in perm],
                      vectors=[vectors[i] for i in perm],
                      params=QuantizationParams(global_max=float(max_weight), bits=8))


def random_queries(num_queries: int, vocab: int = 5000, terms_per_query: int = 8,
                   seed: int = 1, max_weight: int = 25,
                   id_prefix: str = "q") -> list[tuple[str, SparseVector]]:
    rng = np.random.default_rng(seed)
    width = len(str(max(num_queries - 1, 1)))
    out = []
    for i in range(num_queries):
        n = min(max(terms_per_query, 1), vocab)
        terms = np.sort(rng.choice(vocab, size=n, replace=False)).astype(np.int64)
        weights = rng.integers(1, max_weight + 1, size=n).astype(np.int64)
        out.append((f"{id_prefix}{i:0{width}d}", SparseVector.from_arrays(terms, weights)))
    return out


def clustered_queries(num_queries: int, collection_seed: int, vocab: int = 5000,
                      num_clusters: int = 100, cluster_vocab: int = 200,
                      terms_per_query: int = 8, seed: int = 1, max_weight: int = 25,
                      id_prefix: str = "q") -> list[tuple[str, SparseVector]]:
    """Queries aimed at the latent clusters of a clustered_collection with the same knobs."""
    rng_terms = np.random.default_rng(collection_seed)
    cluster_terms = [rng_terms.choice(vocab, size=min(cluster_vocab, vocab), replace=False)
                     for _ in range(num_clusters)]
    rng = np.random.default_rng(seed)
    width = len(str(max(num_queries - 1, 1)))
    out = []
    for i in range(num_queries):
        pool = cluster_terms[int(rng.integers(0, num_clusters))]
        n = min(terms_per_query, pool.size)
        terms = np.sort(rng.choice(pool, size=n, replace=False)).astype(np.int64)
        weights = rng.integers(1, max_weight + 1, size=n).astype(np.int64)
        out.append((f"{id_prefix}{i:0{width}d}", SparseVector.from_arrays(terms, weights)))
    return out


def write_jsonl(path, items) -> None:
    """Write (id, SparseVector) pairs as ingestion-format JSONL."""
    import json

    with open(path, "w") as fh:
        for item_id, vec in items:
            fh.write(json.dumps({"id": item_id,
                                 "vector": {str(t): int(w) for t, w in vec.pairs()}}) + "\n")
