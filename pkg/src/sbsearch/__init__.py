"""Sparse top-k retrieval with two-level bound pruning and bit-packed impact storage."""

from .codec import PackedList, PackedWeightStore, encode_list
from .container import Index, build_index, load_index, save_index
from .corpus import Collection
from .partition import IndexLayout, assign_blocks, compute_level_weights
from .retrieval import (
    PruningConfig,
    SearchStats,
    ThresholdTracker,
    safe_config,
    search,
)
from .sparse import QuantizationParams, SparseVector, dot, prune_query, quantize_weights

__version__ = "0.1.0"

__all__ = [
    "Collection",
    "Index",
    "IndexLayout",
    "PackedList",
    "PackedWeightStore",
    "PruningConfig",
    "QuantizationParams",
    "SearchStats",
    "SparseVector",
    "ThresholdTracker",
    "assign_blocks",
    "build_index",
    "compute_level_weights",
    "dot",
    "encode_list",
    "load_index",
    "prune_query",
    "quantize_weights",
    "safe_config",
    "save_index",
    "search",
]
