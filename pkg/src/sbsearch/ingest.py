"""Ingestion: JSONL corpora/queries to quantized collections, plus a binary format.

Input records are one JSON object per line: {"id": str, "vector": {term: weight}}.
Term keys may be integers (used directly) or arbitrary strings (interned to
dense term ids; the mapping is persisted alongside the collection).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .corpus import Collection
from .sparse import (
    MAX_QUERY_WEIGHT,
    MAX_TERM_ID,
    QuantizationParams,
    SparseVector,
    quantize_weights,
)

COLLECTION_MAGIC = b"LSPC"
VOCAB_POLICIES = ("auto", "integer", "intern")


def _read_records(path):
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if "id" not in rec or "vector" not in rec:
                raise ValueError(f"{path}:{line_no}: record needs 'id' and 'vector'")
            yield str(rec["id"]), rec["vector"]


def _resolve_policy(policy: str, records) -> str:
    if policy != "auto":
        return policy
    for _id, vec in records:
        for key in vec:
            try:
                term = int(key)
            except (TypeError, ValueError):
                return "intern"
            if not 0 <= term < MAX_TERM_ID:
                return "intern"
    return "integer"


def _map_terms(vec: dict, policy: str, vocab: dict[str, int]) -> list[tuple[int, float]]:
    out = []
    for key, weight in vec.items():
        weight = float(weight)
        if weight < 0:
            raise ValueError(f"negative weight {weight} for term {key!r}")
        if policy == "integer":
            term = int(key)
            if not 0 <= term < MAX_TERM_ID:
                raise ValueError(f"term id {term} outside [0, {MAX_TERM_ID})")
        else:
            skey = str(key)
            term = vocab.setdefault(skey, len(vocab))
            if term >= MAX_TERM_ID:
                raise ValueError(f"vocabulary overflow: more than {MAX_TERM_ID} unique terms")
        out.append((term, weight))
    return out


def ingest_jsonl(path: str | Path, vocab_policy: str = "auto") -> Collection:
    """Read a JSONL corpus and quantize document weights to 8 bits."""
    if vocab_policy not in VOCAB_POLICIES:
        raise ValueError(f"vocab_policy must be one of {VOCAB_POLICIES}")
    records = list(_read_records(path))
    if not records:
        raise ValueError(f"{path}: empty collection")
    policy = _resolve_policy(vocab_policy, records)
    vocab: dict[str, int] = {}

    raw_docs: list[tuple[str, list[tuple[int, float]]]] = []
    seen = set()
    global_max = 0.0
    for ext_id, vec in records:
        if ext_id in seen:
            raise ValueError(f"duplicate doc id {ext_id!r}")
        seen.add(ext_id)
        pairs = _map_terms(vec, policy, vocab)
        if pairs:
            global_max = max(global_max, max(w for _, w in pairs))
        raw_docs.append((ext_id, pairs))
    if global_max <= 0:
        raise ValueError("all weights are zero; nothing to index")

    params = QuantizationParams(global_max=global_max, bits=8)
    ext_ids, vectors = [], []
    for ext_id, pairs in raw_docs:
        dedup: dict[int, float] = {}
        for t, w in pairs:
            dedup[t] = max(dedup.get(t, 0.0), w)
        ext_ids.append(ext_id)
        vectors.append(quantize_weights(sorted(dedup.items()), params, mode="round"))
    return Collection(ext_ids=ext_ids, vectors=vectors, params=params,
                      vocab=vocab if policy == "intern" else None)


def load_queries(path: str | Path, params: QuantizationParams,
                 vocab: dict[str, int] | None = None) -> list[tuple[str, SparseVector]]:
    """Read JSONL queries as 16-bit integer impacts.

    Integer weights are taken as-is; real-valued weights are quantized with
    the document params (values above global_max clamp to the top level).
    Terms missing from the vocabulary are dropped.
    """
    queries = []
    for qid, vec in _read_records(path):
        pairs: dict[int, float] = {}
        for key, weight in vec.items():
            weight = float(weight)
            if weight < 0:
                raise ValueError(f"negative weight in query {qid!r}")
            if vocab is not None:
                term = vocab.get(str(key))
                if term is None:
                    continue
            else:
                term = int(key)
                if not 0 <= term < MAX_TERM_ID:
                    raise ValueError(f"term id {term} outside [0, {MAX_TERM_ID})")
            pairs[term] = max(pairs.get(term, 0.0), weight)
        items = sorted(pairs.items())
        if all(float(w).is_integer() for _, w in items):
            kept = [(t, int(w)) for t, w in items if w > 0]
            if any(w > MAX_QUERY_WEIGHT for _, w in kept):
                raise ValueError(f"query {qid!r} weight exceeds 16-bit impact range")
            queries.append((qid, SparseVector.from_pairs(kept)))
        else:
            clamped = [(t, min(w, params.global_max)) for t, w in items]
            queries.append((qid, quantize_weights(clamped, params, mode="round")))
    return queries


def save_collection(collection: Collection, path: str | Path) -> None:
    """Binary collection file; a sidecar .vocab.tsv is written for interned vocabularies."""
    path = Path(path)
    parts = [COLLECTION_MAGIC, struct.pack("<HIdB", 1, len(collection),
                                           collection.params.global_max, collection.params.bits)]
    for ext_id, vec in zip(collection.ext_ids, collection.vectors):
        raw = ext_id.encode("utf-8")
        parts.append(struct.pack("<HI", len(raw), len(vec)))
        parts.append(raw)
        parts.append(vec.terms.astype("<u2").tobytes())
        parts.append(vec.weights.astype("u1").tobytes())
    path.write_bytes(b"".join(parts))
    if collection.vocab is not None:
        vocab_path = path.with_suffix(path.suffix + ".vocab.tsv")
        with open(vocab_path, "w") as fh:
            for term, tid in sorted(collection.vocab.items(), key=lambda kv: kv[1]):
                fh.write(f"{term}\t{tid}\n")


def load_collection(path: str | Path) -> Collection:
    path = Path(path)
    buf = path.read_bytes()
    if buf[:4] != COLLECTION_MAGIC:
        raise ValueError("not a collection file (bad magic)")
    version, n_docs, global_max, bits = struct.unpack_from("<HIdB", buf, 4)
    if version != 1:
        raise ValueError(f"unsupported collection version {version}")
    off = 4 + 15
    ext_ids, vectors = [], []
    for _ in range(n_docs):
        id_len, n_terms = struct.unpack_from("<HI", buf, off)
        off += 6
        ext_ids.append(buf[off : off + id_len].decode("utf-8"))
        off += id_len
        terms = np.frombuffer(buf, dtype="<u2", count=n_terms, offset=off).astype(np.int64)
        off += 2 * n_terms
        weights = np.frombuffer(buf, dtype="u1", count=n_terms, offset=off).astype(np.int64)
        off += n_terms
        vectors.append(SparseVector.from_arrays(terms, weights, validate=False))
    vocab = None
    vocab_path = path.with_suffix(path.suffix + ".vocab.tsv")
    if vocab_path.exists():
        vocab = {}
        with open(vocab_path) as fh:
            for line in fh:
                term, tid = line.rstrip("\n").split("\t")
                vocab[term] = int(tid)
    return Collection(ext_ids=ext_ids, vectors=vectors,
                      params=QuantizationParams(global_max=global_max, bits=bits), vocab=vocab)
