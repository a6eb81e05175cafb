"""Document-to-block assignment and per-term max/avg weights at both levels.

Blocks hold ``b`` consecutive slots of a document permutation; superblocks hold
``c`` consecutive blocks. The per-term maxima/averages computed here are the
raw material for the pruning bounds: every stored level, once mapped back to
the 8-bit document domain, dominates every document weight it covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .corpus import Collection

MIN_BLOCK_SIZE = 2
MAX_BLOCK_SIZE = 256  # Compact-Inv stores local ids and lengths in one byte

STRATEGIES = ("input-order", "kmeans-lite", "random")


@dataclass(frozen=True, eq=False)
class IndexLayout:
    """Permutation of documents into uniform blocks and superblocks.

    ``order[slot]`` is the internal doc id stored at that slot; slots beyond
    ``num_docs`` in the final block are padding and never produce results.
    """

    b: int
    c: int
    order: np.ndarray

    def __post_init__(self) -> None:
        if not MIN_BLOCK_SIZE <= self.b <= MAX_BLOCK_SIZE:
            raise ValueError(f"b must be in [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {self.b}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if self.order.size == 0:
            raise ValueError("collection is empty")
        if not np.array_equal(np.sort(self.order), np.arange(self.order.size)):
            raise ValueError("order must be a permutation of 0..D-1")

    @property
    def num_docs(self) -> int:
        return int(self.order.size)

    @property
    def num_blocks(self) -> int:
        return math.ceil(self.num_docs / self.b)

    @property
    def num_superblocks(self) -> int:
        return math.ceil(self.num_blocks / self.c)

    @cached_property
    def slot_of_doc(self) -> np.ndarray:
        inv = np.empty(self.num_docs, dtype=np.int64)
        inv[self.order] = np.arange(self.num_docs)
        return inv

    def block_slots(self, block: int) -> tuple[int, int]:
        """(start, end) of the real (non-padded) slots of a block."""
        start = block * self.b
        return start, min(start + self.b, self.num_docs)

    def superblock_blocks(self, sb: int) -> tuple[int, int]:
        start = sb * self.c
        return start, min(start + self.c, self.num_blocks)

    def superblock_of_slot(self, slot: int) -> int:
        return slot // self.b // self.c


def assign_blocks(
    collection: Collection,
    b: int,
    c: int,
    strategy: str = "input-order",
    *,
    seed: int | None = None,
    n_clusters: int | None = None,
) -> IndexLayout:
    """Assign documents to blocks.

    input-order keeps ingestion order (deterministic); random shuffles;
    kmeans-lite clusters documents by cosine over their top-weighted terms and
    concatenates the clusters so blocks stay topically coherent.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
    num_docs = len(collection)
    if strategy == "input-order":
        order = np.arange(num_docs)
    elif strategy == "random":
        order = np.random.default_rng(seed).permutation(num_docs)
    else:
        order = _kmeans_lite_order(collection, b, c, seed=seed, n_clusters=n_clusters)
    return IndexLayout(b=b, c=c, order=order)


def layout_from_external_order(collection: Collection, b: int, c: int, ext_order: list[str]) -> IndexLayout:
    """Layout from a precomputed ordering given as external doc ids (one per doc)."""
    index_of = {e: i for i, e in enumerate(collection.ext_ids)}
    if sorted(ext_order) != sorted(collection.ext_ids):
        raise ValueError("external ordering must list every doc id exactly once")
    order = np.array([index_of[e] for e in ext_order], dtype=np.int64)
    return IndexLayout(b=b, c=c, order=order)


def _kmeans_lite_order(
    collection: Collection,
    b: int,
    c: int,
    *,
    seed: int | None,
    n_clusters: int | None,
    top_terms: int = 16,
) -> np.ndarray:
    from scipy.sparse import csr_matrix
    from sklearn.cluster import MiniBatchKMeans
    from sklearn.preprocessing import normalize

    num_docs = len(collection)
    if n_clusters is None:
        n_clusters = max(1, min(1024, math.ceil(num_docs / (b * c))))
    n_clusters = min(n_clusters, num_docs)
    if n_clusters <= 1:
        return np.arange(num_docs)

    rows, cols, vals = [], [], []
    for d, vec in enumerate(collection.vectors):
        if len(vec) == 0:
            continue
        if len(vec) > top_terms:
            top = np.argsort(-vec.weights, kind="stable")[:top_terms]
        else:
            top = np.arange(len(vec))
        rows.append(np.full(top.size, d, dtype=np.int64))
        cols.append(vec.terms[top])
        vals.append(vec.weights[top].astype(np.float32))
    if not rows:
        return np.arange(num_docs)
    mat = csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(num_docs, max(int(np.concatenate(cols).max()) + 1, 1)),
    )
    mat = normalize(mat)  # cosine distance becomes euclidean on the unit sphere
    km = MiniBatchKMeans(
        n_clusters=n_clusters,
        random_state=seed,
        n_init=3,
        batch_size=2048,
        max_iter=50,
    )
    labels = km.fit_predict(mat)
    return np.argsort(labels, kind="stable").astype(np.int64)


@dataclass(frozen=True, eq=False)
class LevelWeights:
    """Per-term dense arrays of quantized weights over blocks or superblocks.

    Terms absent from ``per_term`` are zero everywhere. ``bits`` is the level
    quantization; values are levels in [0, 2^bits - 1].
    """

    granularity: str  # "block" or "superblock"
    kind: str  # "max" or "avg"
    bits: int
    num_units: int
    per_term: dict[int, np.ndarray]

    def value(self, term: int, unit: int) -> int:
        arr = self.per_term.get(term)
        if arr is None:
            return 0
        return int(arr[unit])


def requantize_ceil(levels: np.ndarray, bits: int) -> np.ndarray:
    """Map 8-bit levels to ``bits``-bit levels, rounding up.

    Exact integer arithmetic: ceil(v * (2^bits - 1) / 255). The dequantized
    result never falls below the dequantized input.
    """
    if bits == 8:
        return levels.astype(np.int64)
    num = levels.astype(np.int64) * ((1 << bits) - 1)
    return -(-num // 255)


def compute_level_weights(
    collection: Collection,
    layout: IndexLayout,
    bits_block: int = 8,
    bits_superblock: int | None = None,
    *,
    with_avg: bool = False,
) -> tuple[LevelWeights, LevelWeights, LevelWeights | None]:
    """Per-term block maxima, superblock maxima, and (optionally) superblock averages.

    Block maxima are taken over the 8-bit document weights and then
    ceiling-requantized to ``bits_block``. Superblock maxima are taken over the
    8-bit block maxima (before requantization) and ceiling-requantized to
    ``bits_superblock``. Averages divide the 8-bit weight sum by the full slot
    count b*c (absent terms and padding count as zero) and round up.

    ``bits_superblock`` must not exceed ``bits_block``: otherwise a requantized
    block level could dominate its own superblock level and the nesting of the
    two bound layers would break.
    """
    if bits_superblock is None:
        bits_superblock = bits_block
    for bits in (bits_block, bits_superblock):
        if bits not in (4, 8):
            raise ValueError(f"level bits must be 4 or 8, got {bits}")
    if bits_superblock > bits_block:
        raise ValueError("bits_superblock must be <= bits_block to keep superblock bounds dominant")

    n_blocks = layout.num_blocks
    n_supers = layout.num_superblocks
    slots_per_super = layout.b * layout.c

    terms, weights, ptr = collection.flattened
    counts = np.diff(ptr)
    doc_of_entry = np.repeat(np.arange(len(collection)), counts)
    slot_of_entry = layout.slot_of_doc[doc_of_entry]
    block_of_entry = slot_of_entry // layout.b

    block_max: dict[int, np.ndarray] = {}
    sb_max: dict[int, np.ndarray] = {}
    sb_avg: dict[int, np.ndarray] | None = {} if with_avg else None

    if terms.size:
        by_term = np.argsort(terms, kind="stable")
        sorted_terms = terms[by_term]
        sorted_blocks = block_of_entry[by_term]
        sorted_weights = weights[by_term]
        bounds = np.flatnonzero(np.diff(sorted_terms)) + 1
        starts = np.concatenate([[0], bounds])
        ends = np.concatenate([bounds, [sorted_terms.size]])
        pad_blocks = n_supers * layout.c
        for s, e in zip(starts, ends):
            term = int(sorted_terms[s])
            blk = sorted_blocks[s:e]
            w = sorted_weights[s:e]
            bmax8 = np.zeros(n_blocks, dtype=np.int64)
            np.maximum.at(bmax8, blk, w)
            padded = np.zeros(pad_blocks, dtype=np.int64)
            padded[:n_blocks] = bmax8
            smax8 = padded.reshape(n_supers, layout.c).max(axis=1)
            block_max[term] = requantize_ceil(bmax8, bits_block)
            sb_max[term] = requantize_ceil(smax8, bits_superblock)
            if sb_avg is not None:
                sums = np.zeros(n_supers, dtype=np.int64)
                np.add.at(sums, blk // layout.c, w)
                # ceil(mean8 * (2^bits - 1) / 255), exact in integers
                num = sums * ((1 << bits_superblock) - 1)
                sb_avg[term] = -(-num // (255 * slots_per_super))

    block_lw = LevelWeights("block", "max", bits_block, n_blocks, block_max)
    sb_lw = LevelWeights("superblock", "max", bits_superblock, n_supers, sb_max)
    avg_lw = (
        LevelWeights("superblock", "avg", bits_superblock, n_supers, sb_avg)
        if sb_avg is not None
        else None
    )
    return block_lw, sb_lw, avg_lw
