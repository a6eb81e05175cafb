"""Top-k retrieval with two-level bound pruning (LSP0, LSP1, LSP2).

Traversal: compute a 16-bit saturating upper bound per superblock from the
pruned query, emit superblocks in non-increasing bound order under the active
variant's rules, then within each emitted superblock visit blocks in
non-increasing block-bound order, score surviving blocks with the full query,
and feed every real document to the threshold tracker.

Emission rules (theta is the current k-th best score, 0 until k docs scored):

* guaranteed phase (first ``gamma`` emissions, all variants): emit while
  ``sb_max >= theta``.
* LSP0 stops after the guaranteed phase.
* LSP1 keeps emitting while ``sb_max > theta / mu``.
* LSP2 scans the rest, pruning a superblock only when ``sb_max <= theta / mu``
  and ``sb_avg <= theta / eta`` both hold.

Blocks are skipped only when their bound is strictly below ``theta / eta``.
The strict comparison keeps ties at exactly theta visitable, which makes safe
mode reproduce a brute-force oracle bit-for-bit (ties broken by ascending
external id) and lets an underfull heap pull in zero-score documents. A bound
stuck at the 16-bit saturation cap is treated as unbounded and never prunes.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .codec import GROUP_SIZE, PackedWeightStore
from .sparse import SparseVector, prune_query, query_lookup

SATURATED = (1 << 16) - 1
VARIANTS = ("LSP0", "LSP1", "LSP2")


@dataclass(frozen=True)
class PruningConfig:
    """Retrieval-time knobs; fully determines traversal behavior."""

    k: int
    gamma: int
    mu: float = 1.0
    eta: float = 1.0
    beta: float = 1.0
    variant: str = "LSP0"

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0 < self.mu <= self.eta <= 1:
            raise ValueError(f"need 0 < mu <= eta <= 1, got mu={self.mu} eta={self.eta}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


def safe_config(k: int, beta: float = 1.0) -> PruningConfig:
    """Safe traversal rules: every superblock whose bound clears theta is visited.

    Rank-safe (bit-exact against a brute-force scan) at beta=1; a smaller beta
    keeps the traversal rules but makes candidate generation approximate.
    """
    return PruningConfig(k=k, gamma=1 << 31, mu=1.0, eta=1.0, beta=beta, variant="LSP0")


class ThresholdTracker:
    """Running top-k heap; theta is the exact k-th best score seen so far.

    Ordering is (score desc, external-id-rank asc); ranks are dense integers
    assigned by sorting external ids, so ties resolve identically to the
    brute-force oracle. theta never decreases.
    """

    __slots__ = ("k", "_heap")

    def __init__(self, k: int):
        if k <= 0:
            raise ValueError("k must be positive")
        self.k = k
        self._heap: list[tuple[int, int, int]] = []

    @property
    def full(self) -> bool:
        return len(self._heap) >= self.k

    @property
    def theta(self) -> int:
        return self._heap[0][0] if len(self._heap) >= self.k else 0

    def offer(self, score: int, tie_rank: int, payload: int) -> bool:
        entry = (score, -tie_rank, payload)
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, entry)
            return True
        root = self._heap[0]
        if (score, -tie_rank) > (root[0], root[1]):
            heapq.heapreplace(self._heap, entry)
            return True
        return False

    def drain(self) -> list[tuple[int, int]]:
        """(payload, score) pairs, best first."""
        ordered = sorted(self._heap, key=lambda e: (-e[0], -e[1]))
        return [(e[2], e[0]) for e in ordered]


@dataclass(eq=False)
class SuperblockScores:
    sb_max: np.ndarray  # u16, saturating
    sb_avg: np.ndarray | None = None


@dataclass
class SearchStats:
    superblocks_visited: int = 0
    blocks_visited: int = 0
    docs_scored: int = 0
    audit: list[tuple] = field(default_factory=list)


def accumulate_bounds(
    query: SparseVector,
    store: PackedWeightStore,
    start: int = 0,
    stop: int | None = None,
    *,
    cache: dict | None = None,
    saturate: bool = True,
) -> np.ndarray:
    """Sum of query weight times stored per-term level over units [start, stop).

    Stored levels are expanded back to the 8-bit document weight domain before
    accumulation so bounds and document scores share one integer scale. With
    ``saturate`` the result clamps to 65535 (never wraps); pass False for exact
    64-bit values in analysis code.
    """
    if stop is None:
        stop = store.num_units
    n = stop - start
    acc = np.zeros(max(n, 0), dtype=np.int64)
    if n <= 0 or len(query) == 0:
        return np.minimum(acc, SATURATED).astype(np.uint16) if saturate else acc
    g0 = start // GROUP_SIZE
    lo = start - g0 * GROUP_SIZE
    exp = store.expansion
    for t, qw in zip(query.terms.tolist(), query.weights.tolist()):
        pl = store.lists.get(t)
        if pl is None:
            continue
        g1 = min((stop - 1) // GROUP_SIZE, pl.num_groups - 1)
        if cache is None:
            groups = [pl.decode_group(g).astype(np.int64) for g in range(g0, g1 + 1)]
        else:
            groups = []
            for g in range(g0, g1 + 1):
                key = (id(store), t, g)
                vals = cache.get(key)
                if vals is None:
                    vals = pl.decode_group(g).astype(np.int64)
                    cache[key] = vals
                groups.append(vals)
        vals = groups[0] if len(groups) == 1 else np.concatenate(groups)
        acc += (qw * exp) * vals[lo : lo + n]
    if saturate:
        return np.minimum(acc, SATURATED).astype(np.uint16)
    return acc


def compute_sbmax(query: SparseVector, store: PackedWeightStore, *, cache: dict | None = None) -> np.ndarray:
    """Saturating superblock upper bounds for the (already pruned) query."""
    return accumulate_bounds(query, store, cache=cache, saturate=True)


def _clears(bound: int, threshold: float) -> bool:
    """True when a bound is at or above the threshold; saturated bounds always clear."""
    return bound >= SATURATED or bound >= threshold


def select_superblocks(scores: SuperblockScores, config: PruningConfig, tracker: ThresholdTracker,
                       stats: SearchStats | None = None):
    """Yield superblock ids in non-increasing bound order under the variant's rules.

    Pruning is dynamic: theta is re-read from the tracker at every emission
    decision, so earlier superblocks' documents tighten later decisions.
    """
    sb_max = scores.sb_max
    n = sb_max.size
    order = np.argsort(-sb_max.astype(np.int64), kind="stable")
    gamma = min(config.gamma, n)
    record = stats.audit.append if stats is not None else None
    for pos in range(n):
        x = int(order[pos])
        m = int(sb_max[x])
        theta = tracker.theta
        if pos < gamma:
            if not _clears(m, theta):
                if record:
                    for rest in order[pos:]:
                        record(("sb-skip", int(rest), int(sb_max[rest]), None, theta, "guard-stop"))
                return
        elif config.variant == "LSP0":
            if record:
                for rest in order[pos:]:
                    record(("sb-skip", int(rest), int(sb_max[rest]), None, theta, "lsp0-stop"))
            return
        elif config.variant == "LSP1":
            if not (m >= SATURATED or m > theta / config.mu):
                if record:
                    for rest in order[pos:]:
                        record(("sb-skip", int(rest), int(sb_max[rest]), None, theta, "lsp1-stop"))
                return
        else:  # LSP2: prune only when both the max and avg bounds fail to clear
            avg = int(scores.sb_avg[x])
            if (m < SATURATED and m <= theta / config.mu) and (avg < SATURATED and avg <= theta / config.eta):
                if record:
                    record(("sb-skip", x, m, avg, theta, "lsp2-prune"))
                continue
        if record:
            record(("sb-emit", x, m, theta, "guard" if pos < gamma else "extra"))
        yield x


def search(query: SparseVector, index, config: PruningConfig,
           stats: SearchStats | None = None) -> list[tuple[str, int]]:
    """Top-k documents as (external id, score), best first, length min(k, D).

    ``index`` is a built Index (see container.build_index). The pruned query
    drives candidate generation only; scoring always uses the full query.
    """
    if config.variant == "LSP2" and index.sb_avg_store is None:
        raise ValueError("LSP2 requires an index built with the average store (with_avg=True)")
    if len(query) == 0:
        return []
    layout = index.layout
    num_docs = layout.num_docs
    b = layout.b

    pruned = prune_query(query, config.beta)
    cache: dict = {}
    sb_scores = SuperblockScores(
        sb_max=compute_sbmax(pruned, index.sb_max_store, cache=cache),
        sb_avg=(compute_sbmax(pruned, index.sb_avg_store, cache=cache)
                if config.variant == "LSP2" else None),
    )
    tracker = ThresholdTracker(config.k)
    lookup = query_lookup(query)
    slot_tie = index.slot_tie
    doc_index = index.doc_index

    for x in select_superblocks(sb_scores, config, tracker, stats):
        if stats is not None:
            stats.superblocks_visited += 1
        b0, b1 = layout.superblock_blocks(x)
        bsums = accumulate_bounds(pruned, index.block_store, b0, b1, cache=cache)
        visit = np.argsort(-bsums.astype(np.int64), kind="stable")
        for j_pos, j in enumerate(visit):
            bs = int(bsums[j])
            theta = tracker.theta
            if bs < SATURATED and bs < theta / config.eta:
                # bounds are sorted and theta only rises: the rest are skippable too
                if stats is not None:
                    for rest in visit[j_pos:]:
                        stats.audit.append(("block-skip", b0 + int(rest), int(bsums[rest]), theta))
                break
            blk = b0 + int(j)
            if stats is not None:
                stats.blocks_visited += 1
            scores = doc_index.score_block(blk, query, lookup=lookup)
            start = blk * b
            nreal = min(b, num_docs - start)
            if stats is not None:
                stats.docs_scored += nreal
            if tracker.full:
                cand = np.flatnonzero(scores[:nreal] >= tracker.theta)
            else:
                cand = range(nreal)
            for i in cand:
                slot = start + int(i)
                tracker.offer(int(scores[i]), int(slot_tie[slot]), slot)

    ext_ids = index.ext_ids
    order = layout.order
    return [(ext_ids[order[slot]], score) for slot, score in tracker.drain()]
