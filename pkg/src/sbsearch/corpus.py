"""An ingested, 8-bit quantized document collection."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .sparse import MAX_DOC_WEIGHT, QuantizationParams, SparseVector


@dataclass
class Collection:
    """External doc ids plus their quantized sparse vectors, in ingestion order."""

    ext_ids: list[str]
    vectors: list[SparseVector]
    params: QuantizationParams
    vocab: dict[str, int] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.ext_ids) != len(self.vectors):
            raise ValueError("ext_ids and vectors must be parallel")
        if len(self.ext_ids) != len(set(self.ext_ids)):
            raise ValueError("duplicate external doc ids")
        for v in self.vectors:
            if len(v) and int(v.weights.max()) > MAX_DOC_WEIGHT:
                raise ValueError("document weights must fit 8 bits after quantization")

    def __len__(self) -> int:
        return len(self.ext_ids)

    @cached_property
    def flattened(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(terms, weights, doc_ptr) with doc d owning slice [doc_ptr[d], doc_ptr[d+1])."""
        counts = np.array([len(v) for v in self.vectors], dtype=np.int64)
        ptr = np.concatenate([[0], np.cumsum(counts)])
        if ptr[-1] == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64), ptr
        terms = np.concatenate([v.terms for v in self.vectors])
        weights = np.concatenate([v.weights for v in self.vectors])
        return terms, weights, ptr

    def to_csr(self):
        """Docs-by-terms CSR matrix of int64 weights (brute-force scoring, clustering)."""
        from scipy.sparse import csr_matrix

        terms, weights, ptr = self.flattened
        ncols = int(terms.max()) + 1 if terms.size else 1
        return csr_matrix((weights, terms, ptr), shape=(len(self), ncols), dtype=np.int64)
