import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbsearch.sparse import (
    QuantizationParams,
    SparseVector,
    dot,
    prune_query,
    quantize_weights,
)


def sv(*pairs):
    return SparseVector.from_pairs(pairs)


sparse_vectors = st.builds(
    lambda d: SparseVector.from_pairs(d.items()),
    st.dictionaries(st.integers(0, 300), st.integers(1, 255), max_size=40),
)


class TestSparseVector:
    def test_rejects_duplicate_terms(self):
        with pytest.raises(ValueError):
            SparseVector.from_arrays(np.array([1, 1]), np.array([2, 3]))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseVector.from_arrays(np.array([5, 2]), np.array([2, 3]))

    def test_rejects_zero_weight(self):
        with pytest.raises(ValueError):
            sv((1, 0))

    def test_rejects_term_overflow(self):
        with pytest.raises(ValueError):
            sv((1 << 16, 3))


class TestQuantize:
    def test_round_half_up(self):
        params = QuantizationParams(global_max=255.0, bits=8)
        assert quantize_weights([(5, 7.5)], params, "round").pairs() == [(5, 8)]

    def test_zero_weight_dropped(self):
        params = QuantizationParams(global_max=255.0, bits=8)
        assert quantize_weights([(5, 0.0)], params, "round").pairs() == []

    def test_ceil_mode(self):
        params = QuantizationParams(global_max=15.0, bits=4)
        assert quantize_weights([(3, 7.4)], params, "ceil").pairs() == [(3, 8)]

    def test_above_global_max_rejected(self):
        params = QuantizationParams(global_max=10.0, bits=8)
        with pytest.raises(ValueError, match="stale"):
            quantize_weights([(0, 10.5)], params, "round")

    def test_negative_rejected(self):
        params = QuantizationParams(global_max=10.0, bits=8)
        with pytest.raises(ValueError):
            quantize_weights([(0, -1.0)], params, "round")

    @given(st.lists(st.tuples(st.integers(0, 100), st.floats(0, 50)), max_size=20,
                    unique_by=lambda p: p[0]),
           st.sampled_from([4, 8]))
    def test_ceil_never_underestimates(self, raw, bits):
        params = QuantizationParams(global_max=50.0, bits=bits)
        out = quantize_weights(raw, params, "ceil")
        levels = dict(out.pairs())
        for term, w in raw:
            assert levels.get(term, 0) * params.scale >= w


class TestDot:
    def test_single_shared_term(self):
        assert dot(sv((1, 2), (2, 3)), sv((1, 4), (3, 9))) == 8

    def test_empty_query(self):
        assert dot(SparseVector.empty(), sv((1, 4))) == 0

    def test_two_shared_terms(self):
        assert dot(sv((1, 2), (2, 3)), sv((1, 4), (2, 1))) == 11

    @given(sparse_vectors, sparse_vectors)
    def test_matches_bruteforce(self, q, d):
        expected = sum(qw * dw for qt, qw in q.pairs() for dt, dw in d.pairs() if qt == dt)
        assert dot(q, d) == expected


class TestPruneQuery:
    def test_keeps_top_half_with_term_tiebreak(self):
        q = sv((2, 5), (4, 7), (6, 5), (8, 1))
        assert prune_query(q, 0.5).pairs() == [(2, 5), (4, 7)]

    def test_beta_one_is_identity(self):
        q = sv((1, 3), (2, 9))
        assert prune_query(q, 1.0) is q

    def test_ceil_of_fraction(self):
        q = sv((1, 3), (2, 9), (3, 5))
        kept = prune_query(q, 0.33)
        # ceil(0.99) = 1 entry, the max-weight one (checked against a sort)
        expected = sorted(q.pairs(), key=lambda p: (-p[1], p[0]))[:1]
        assert kept.pairs() == expected

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError):
            prune_query(SparseVector.empty(), 0.5)

    @given(sparse_vectors.filter(lambda v: len(v) > 0),
           st.floats(0.1, 1.0))
    def test_idempotent_under_full_reprune(self, q, beta):
        once = prune_query(q, beta)
        assert prune_query(once, 1.0).pairs() == once.pairs()

    @given(sparse_vectors.filter(lambda v: len(v) > 0), sparse_vectors,
           st.floats(0.1, 1.0))
    def test_pruned_dot_never_exceeds_full(self, q, d, beta):
        assert dot(prune_query(q, beta), d) <= dot(q, d)

    @given(sparse_vectors.filter(lambda v: len(v) > 0), st.floats(0.1, 1.0))
    def test_keeps_ceil_beta_entries(self, q, beta):
        assert len(prune_query(q, beta)) == math.ceil(beta * len(q))
