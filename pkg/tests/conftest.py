import numpy as np
import pytest

from sbsearch.container import build_index
from sbsearch.corpus import Collection
from sbsearch.sparse import SparseVector
from sbsearch.synthetic import random_collection, random_queries


class Oracle:
    """Brute-force top-k by exhaustive dot products, ties by ascending external id."""

    def __init__(self, collection: Collection):
        self.csr = collection.to_csr()
        self.ext = np.array(collection.ext_ids)

    def topk(self, query: SparseVector, k: int) -> list[tuple[str, int]]:
        vec = np.zeros(self.csr.shape[1], dtype=np.int64)
        mask = query.terms < self.csr.shape[1]
        vec[query.terms[mask]] = query.weights[mask]
        scores = self.csr @ vec
        order = np.lexsort((self.ext, -scores))[:k]
        return [(str(self.ext[i]), int(scores[i])) for i in order]

    def score(self, query: SparseVector) -> np.ndarray:
        vec = np.zeros(self.csr.shape[1], dtype=np.int64)
        mask = query.terms < self.csr.shape[1]
        vec[query.terms[mask]] = query.weights[mask]
        return self.csr @ vec


@pytest.fixture(scope="session")
def small_collection() -> Collection:
    return random_collection(1200, vocab=600, avg_terms=25, seed=101)


@pytest.fixture(scope="session")
def small_queries():
    return random_queries(25, vocab=600, terms_per_query=6, seed=102)


@pytest.fixture(scope="session")
def small_index(small_collection):
    return build_index(small_collection, b=16, c=8, with_avg=True)


@pytest.fixture(scope="session")
def small_oracle(small_collection):
    return Oracle(small_collection)
