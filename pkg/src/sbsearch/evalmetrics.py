"""TREC-style run files, qrels, and retrieval metrics (Recall@k, MRR@k).

Run lines are "qid Q0 docid rank score tag" with ranks starting at 1,
contiguous per query, and integer scores non-increasing per query.
"""

from __future__ import annotations

from pathlib import Path


def write_run(path: str | Path, results: dict[str, list[tuple[str, int]]], tag: str = "sbsearch") -> None:
    with open(path, "w") as fh:
        for qid in results:
            for rank, (doc_id, score) in enumerate(results[qid], 1):
                fh.write(f"{qid} Q0 {doc_id} {rank} {score} {tag}\n")


def read_run(path: str | Path) -> dict[str, list[tuple[str, int]]]:
    run: dict[str, list[tuple[str, int]]] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ValueError(f"{path}:{line_no}: expected 6 fields, got {len(parts)}")
            qid, _q0, doc_id, rank, score, _tag = parts
            entries = run.setdefault(qid, [])
            if int(rank) != len(entries) + 1:
                raise ValueError(f"{path}:{line_no}: ranks must be contiguous from 1 per query")
            if entries and int(score) > entries[-1][1]:
                raise ValueError(f"{path}:{line_no}: scores must be non-increasing per query")
            entries.append((doc_id, int(score)))
    return run


def read_qrels(path: str | Path) -> dict[str, set[str]]:
    """Standard 4-column qrels; judgments with relevance > 0 count as relevant."""
    qrels: dict[str, set[str]] = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ValueError(f"{path}:{line_no}: expected 4 fields, got {len(parts)}")
            qid, _iter, doc_id, rel = parts
            if int(rel) > 0:
                qrels.setdefault(qid, set()).add(doc_id)
    return qrels


def recall_at_k(run: dict[str, list[tuple[str, int]]], qrels: dict[str, set[str]], k: int) -> float:
    """Mean over judged queries of |top-k hits| / |relevant|."""
    vals = []
    for qid, relevant in qrels.items():
        if not relevant:
            continue
        retrieved = {doc for doc, _ in run.get(qid, [])[:k]}
        vals.append(len(retrieved & relevant) / len(relevant))
    return sum(vals) / len(vals) if vals else 0.0


def mrr_at_k(run: dict[str, list[tuple[str, int]]], qrels: dict[str, set[str]], k: int) -> float:
    vals = []
    for qid, relevant in qrels.items():
        if not relevant:
            continue
        rr = 0.0
        for rank, (doc, _) in enumerate(run.get(qid, [])[:k], 1):
            if doc in relevant:
                rr = 1.0 / rank
                break
        vals.append(rr)
    return sum(vals) / len(vals) if vals else 0.0


def evaluate(run: dict, qrels: dict, k: int, safe_run: dict | None = None) -> dict:
    """Recall@k and MRR@k, plus the preserved-recall ratio against a safe run.

    Preserved recall is recall(run) / recall(safe_run); it is None when the
    safe run's recall is zero.
    """
    metrics = {
        f"recall@{k}": recall_at_k(run, qrels, k),
        f"mrr@{k}": mrr_at_k(run, qrels, k),
    }
    if safe_run is not None:
        safe_recall = recall_at_k(safe_run, qrels, k)
        metrics["preserved_recall"] = (
            metrics[f"recall@{k}"] / safe_recall if safe_recall > 0 else None
        )
    return metrics
