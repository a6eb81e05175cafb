"""Sparse integer vectors, global quantization, and exact scoring.

Vectors are stored as parallel numpy arrays of term ids and weights, strictly
sorted by term. Document weights fit 8 bits after ingestion quantization;
query weights are 16-bit integer impacts. All scoring is exact integer
arithmetic; this module is the correctness oracle for everything downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_TERM_ID = 1 << 16  # vocabulary capped at 65,536 unique terms
MAX_QUERY_WEIGHT = (1 << 16) - 1
MAX_DOC_WEIGHT = (1 << 8) - 1


@dataclass(frozen=True)
class QuantizationParams:
    """Global linear quantizer: level = raw / scale, scale = global_max / (2^bits - 1)."""

    global_max: float
    bits: int = 8

    def __post_init__(self) -> None:
        if self.global_max <= 0:
            raise ValueError(f"global_max must be positive, got {self.global_max}")
        if self.bits not in (4, 8):
            raise ValueError(f"bits must be 4 or 8, got {self.bits}")

    @property
    def scale(self) -> float:
        return self.global_max / self.max_level

    @property
    def max_level(self) -> int:
        return (1 << self.bits) - 1


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted (term, weight) pairs with strictly increasing terms and positive weights."""

    terms: np.ndarray
    weights: np.ndarray

    @staticmethod
    def from_pairs(pairs) -> "SparseVector":
        """Build from an iterable of (term, weight) pairs; sorts and validates."""
        pairs = sorted(pairs)
        terms = np.array([t for t, _ in pairs], dtype=np.int64)
        weights = np.array([w for _, w in pairs], dtype=np.int64)
        return SparseVector.from_arrays(terms, weights)

    @staticmethod
    def from_arrays(terms: np.ndarray, weights: np.ndarray, validate: bool = True) -> "SparseVector":
        terms = np.asarray(terms, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.int64)
        if validate:
            if terms.shape != weights.shape or terms.ndim != 1:
                raise ValueError("terms and weights must be parallel 1-d arrays")
            if terms.size:
                if np.any(np.diff(terms) <= 0):
                    raise ValueError("terms must be strictly increasing (no duplicates)")
                if terms[0] < 0 or terms[-1] >= MAX_TERM_ID:
                    raise ValueError(f"term ids must be in [0, {MAX_TERM_ID})")
                if np.any(weights <= 0):
                    raise ValueError("weights must be positive (drop zero entries at ingestion)")
                if np.any(weights > MAX_QUERY_WEIGHT):
                    raise ValueError("weights must fit 16 bits")
        return SparseVector(terms, weights)

    @staticmethod
    def empty() -> "SparseVector":
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.terms.size)

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(t), int(w)) for t, w in zip(self.terms, self.weights)]

    def __repr__(self) -> str:  # pragma: no cover
        return f"SparseVector({self.pairs()!r})"


def quantize_weights(raw, params: QuantizationParams, mode: str = "round") -> SparseVector:
    """Quantize raw (term, weight) pairs to integer levels.

    mode="round" is for document/query payload weights; mode="ceil" is for
    bound-carrying values and guarantees level * scale >= raw for every entry.
    Zero levels are dropped. Raw weights outside [0, global_max] are rejected
    (a weight above global_max signals stale params).
    """
    if mode not in ("round", "ceil"):
        raise ValueError(f"mode must be 'round' or 'ceil', got {mode!r}")
    pairs = sorted(raw)
    terms = np.array([t for t, _ in pairs], dtype=np.int64)
    values = np.array([w for _, w in pairs], dtype=np.float64)
    if values.size:
        if np.any(values < 0):
            raise ValueError("negative raw weight")
        if np.any(values > params.global_max):
            raise ValueError(
                f"raw weight {values.max()} exceeds global_max {params.global_max} (stale params?)"
            )
    scale = params.scale
    if mode == "round":
        levels = np.floor(values / scale + 0.5).astype(np.int64)
    else:
        levels = np.ceil(values / scale).astype(np.int64)
        # guard float rounding so the upper-bound property holds exactly
        under = levels * scale < values
        levels[under] += 1
    levels = np.clip(levels, 0, params.max_level)
    keep = levels > 0
    return SparseVector.from_arrays(terms[keep], levels[keep])


def dot(query: SparseVector, doc: SparseVector) -> int:
    """Exact integer dot product over the intersection of term sets."""
    if len(query) == 0 or len(doc) == 0:
        return 0
    _, qi, di = np.intersect1d(query.terms, doc.terms, assume_unique=True, return_indices=True)
    return int(np.sum(query.weights[qi] * doc.weights[di]))


def prune_query(query: SparseVector, beta: float) -> SparseVector:
    """Keep the ceil(beta * |query|) highest-weight entries.

    Ties are broken toward the smaller term id for determinism. The result is
    still sorted by term. beta=1 returns the query unchanged.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    n = len(query)
    if n == 0:
        raise ValueError("cannot prune an empty query")
    keep = math.ceil(beta * n)
    if keep >= n:
        return query
    # lexsort: last key is primary -> descending weight, then ascending term
    order = np.lexsort((query.terms, -query.weights))[:keep]
    order.sort()
    return SparseVector(query.terms[order], query.weights[order])


def query_lookup(query: SparseVector) -> np.ndarray:
    """Dense weight-by-term-id table for branch-free block scoring."""
    table = np.zeros(MAX_TERM_ID, dtype=np.int64)
    table[query.terms] = query.weights
    return table
