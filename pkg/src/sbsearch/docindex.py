"""Per-block document storage and exact scoring in three interchangeable formats.

All formats score a block with the full query and return a dense array of one
score per slot (padded slots score zero), bit-identical across formats:

* compact: per-block inverted lists, term ids 2B, one-byte postings lengths.
* flat: one contiguous array of fixed-width posting records (term 2B, local
  doc id 1B, weight 1B) for the whole index, plus per-block start offsets.
* fwd: per-document parallel term/weight arrays with a document offset table.

Candidate generation elsewhere may use a pruned query; scoring here always
receives the full one.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Collection
from .partition import IndexLayout
from .sparse import SparseVector, query_lookup

FORMATS = ("compact", "flat", "fwd")
FORMAT_TAGS = {name: tag for tag, name in enumerate(FORMATS)}

_REC_DTYPE = np.dtype([("term", "<u2"), ("local", "u1"), ("weight", "u1")])


def _sorted_postings(collection: Collection, layout: IndexLayout):
    """(block, local, term, weight) arrays sorted by (block, term, local)."""
    terms, weights, ptr = collection.flattened
    doc_of_entry = np.repeat(np.arange(len(collection)), np.diff(ptr))
    slot = layout.slot_of_doc[doc_of_entry]
    block = slot // layout.b
    local = slot % layout.b
    order = np.lexsort((local, terms, block))
    return block[order], local[order], terms[order], weights[order]


def _scores_from_postings(term, local, weight, lookup, b) -> np.ndarray:
    contrib = lookup[term] * weight
    return np.bincount(local, weights=contrib, minlength=b).astype(np.int64)


@dataclass(eq=False)
class CompactInv:
    """Per-block inverted lists: terms sorted, postings (local, weight) per term."""

    b: int
    num_blocks: int
    block_terms: list[np.ndarray]  # sorted u16 terms per block
    block_offsets: list[np.ndarray]  # postings offsets per block, len terms+1
    block_locals: list[np.ndarray]
    block_weights: list[np.ndarray]
    format_name = "compact"

    def score_block(self, block: int, query: SparseVector, lookup: np.ndarray | None = None) -> np.ndarray:
        bterms = self.block_terms[block]
        if lookup is None:
            lookup = query_lookup(query)
        scores = np.zeros(self.b, dtype=np.int64)
        if bterms.size == 0 or len(query) == 0:
            return scores
        pos = np.searchsorted(bterms, query.terms)
        hit = (pos < bterms.size) & (bterms[np.minimum(pos, bterms.size - 1)] == query.terms)
        offsets = self.block_offsets[block]
        locals_ = self.block_locals[block]
        weights = self.block_weights[block]
        for p in pos[hit]:
            s, e = offsets[p], offsets[p + 1]
            seg_local = locals_[s:e]
            scores[seg_local] += lookup[bterms[p]] * weights[s:e]
        return scores

    def reconstruct(self, slot: int) -> SparseVector:
        block, local = divmod(slot, self.b)
        mask = self.block_locals[block] == local
        counts = np.diff(self.block_offsets[block])
        term_of_posting = np.repeat(self.block_terms[block], counts)
        return SparseVector.from_arrays(term_of_posting[mask], self.block_weights[block][mask])

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<BHI", FORMAT_TAGS[self.format_name], self.b, self.num_blocks)]
        for blk in range(self.num_blocks):
            bterms = self.block_terms[blk]
            offsets = self.block_offsets[blk]
            parts.append(struct.pack("<I", bterms.size))
            for i, t in enumerate(bterms):
                s, e = offsets[i], offsets[i + 1]
                # postings lists are never empty, so the byte stores length - 1
                parts.append(struct.pack("<HB", int(t), int(e - s - 1)))
                inter = np.empty((e - s, 2), dtype=np.uint8)
                inter[:, 0] = self.block_locals[blk][s:e]
                inter[:, 1] = self.block_weights[blk][s:e]
                parts.append(inter.tobytes())
        return b"".join(parts)

    @staticmethod
    def from_bytes(buf: bytes) -> "CompactInv":
        _, b, num_blocks = struct.unpack_from("<BHI", buf, 0)
        off = 7
        bt, bo, bl, bw = [], [], [], []
        for _ in range(num_blocks):
            (n_terms,) = struct.unpack_from("<I", buf, off)
            off += 4
            terms = np.empty(n_terms, dtype=np.int64)
            offsets = np.zeros(n_terms + 1, dtype=np.int64)
            loc_chunks, w_chunks = [], []
            for i in range(n_terms):
                t, lm1 = struct.unpack_from("<HB", buf, off)
                off += 3
                length = lm1 + 1
                inter = np.frombuffer(buf, dtype=np.uint8, count=2 * length, offset=off).reshape(-1, 2)
                off += 2 * length
                terms[i] = t
                offsets[i + 1] = offsets[i] + length
                loc_chunks.append(inter[:, 0].astype(np.int64))
                w_chunks.append(inter[:, 1].astype(np.int64))
            bt.append(terms)
            bo.append(offsets)
            bl.append(np.concatenate(loc_chunks) if loc_chunks else np.empty(0, np.int64))
            bw.append(np.concatenate(w_chunks) if w_chunks else np.empty(0, np.int64))
        return CompactInv(b=b, num_blocks=num_blocks, block_terms=bt, block_offsets=bo,
                          block_locals=bl, block_weights=bw)


@dataclass(eq=False)
class FlatInv:
    """Single posting-record array for the whole index, grouped by block then term."""

    b: int
    num_blocks: int
    records: np.ndarray  # _REC_DTYPE, uncompressed
    offsets: np.ndarray  # record index where each block starts, plus end sentinel
    format_name = "flat"

    def block_starts(self) -> np.ndarray:
        return self.offsets[:-1]

    def score_block(self, block: int, query: SparseVector, lookup: np.ndarray | None = None) -> np.ndarray:
        if lookup is None:
            lookup = query_lookup(query)
        s, e = self.offsets[block], self.offsets[block + 1]
        recs = self.records[s:e]
        if recs.size == 0:
            return np.zeros(self.b, dtype=np.int64)
        return _scores_from_postings(
            recs["term"].astype(np.int64), recs["local"], recs["weight"].astype(np.int64),
            lookup, self.b,
        )

    def reconstruct(self, slot: int) -> SparseVector:
        block, local = divmod(slot, self.b)
        recs = self.records[self.offsets[block] : self.offsets[block + 1]]
        recs = recs[recs["local"] == local]
        order = np.argsort(recs["term"], kind="stable")
        return SparseVector.from_arrays(
            recs["term"][order].astype(np.int64), recs["weight"][order].astype(np.int64)
        )

    def to_bytes(self) -> bytes:
        head = struct.pack("<BHIQ", FORMAT_TAGS[self.format_name], self.b, self.num_blocks,
                           self.records.size)
        return head + self.records.tobytes() + self.offsets.astype("<u4").tobytes()

    @staticmethod
    def from_bytes(buf: bytes) -> "FlatInv":
        _, b, num_blocks, n_recs = struct.unpack_from("<BHIQ", buf, 0)
        off = 15
        records = np.frombuffer(buf, dtype=_REC_DTYPE, count=n_recs, offset=off).copy()
        off += n_recs * _REC_DTYPE.itemsize
        offsets = np.frombuffer(buf, dtype="<u4", count=num_blocks + 1, offset=off).astype(np.int64)
        return FlatInv(b=b, num_blocks=num_blocks, records=records, offsets=offsets)


@dataclass(eq=False)
class FwdIndex:
    """Per-document term and weight arrays with a slot offset table."""

    b: int
    num_blocks: int
    terms: np.ndarray  # concatenated per-slot sorted term ids
    weights: np.ndarray
    offsets: np.ndarray  # len num_slots + 1; padded slots are empty
    format_name = "fwd"

    @property
    def num_slots(self) -> int:
        return self.offsets.size - 1

    def score_block(self, block: int, query: SparseVector, lookup: np.ndarray | None = None) -> np.ndarray:
        if lookup is None:
            lookup = query_lookup(query)
        s_slot = block * self.b
        offs = self.offsets[s_slot : s_slot + self.b + 1]
        s, e = offs[0], offs[-1]
        if s == e:
            return np.zeros(self.b, dtype=np.int64)
        local = np.repeat(np.arange(self.b), np.diff(offs))
        return _scores_from_postings(self.terms[s:e], local, self.weights[s:e], lookup, self.b)

    def reconstruct(self, slot: int) -> SparseVector:
        s, e = self.offsets[slot], self.offsets[slot + 1]
        return SparseVector.from_arrays(self.terms[s:e].copy(), self.weights[s:e].copy())

    def to_bytes(self) -> bytes:
        head = struct.pack("<BHIQ", FORMAT_TAGS[self.format_name], self.b, self.num_blocks,
                           self.terms.size)
        return (head + self.offsets.astype("<u4").tobytes()
                + self.terms.astype("<u2").tobytes() + self.weights.astype("u1").tobytes())

    @staticmethod
    def from_bytes(buf: bytes) -> "FwdIndex":
        _, b, num_blocks, n_entries = struct.unpack_from("<BHIQ", buf, 0)
        off = 15
        num_slots = num_blocks * b
        offsets = np.frombuffer(buf, dtype="<u4", count=num_slots + 1, offset=off).astype(np.int64)
        off += (num_slots + 1) * 4
        terms = np.frombuffer(buf, dtype="<u2", count=n_entries, offset=off).astype(np.int64)
        off += n_entries * 2
        weights = np.frombuffer(buf, dtype="u1", count=n_entries, offset=off).astype(np.int64)
        return FwdIndex(b=b, num_blocks=num_blocks, terms=terms, weights=weights, offsets=offsets)


DocIndex = CompactInv | FlatInv | FwdIndex


def build_doc_index(collection: Collection, layout: IndexLayout, fmt: str = "flat") -> DocIndex:
    """Transpose a collection into the requested per-block scoring structure."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown doc index format {fmt!r}, expected one of {FORMATS}")
    if fmt in ("compact", "flat") and layout.b > 256:
        raise ValueError("inverted formats require b <= 256")
    b, num_blocks = layout.b, layout.num_blocks

    if fmt == "fwd":
        terms, weights, ptr = collection.flattened
        counts = np.diff(ptr)
        num_slots = num_blocks * b
        slot_counts = np.zeros(num_slots, dtype=np.int64)
        slot_counts[layout.slot_of_doc] = counts
        offsets = np.concatenate([[0], np.cumsum(slot_counts)])
        doc_of_entry = np.repeat(np.arange(len(collection)), counts)
        order = np.lexsort((terms, layout.slot_of_doc[doc_of_entry]))
        return FwdIndex(b=b, num_blocks=num_blocks,
                        terms=terms[order], weights=weights[order], offsets=offsets)

    block, local, terms, weights = _sorted_postings(collection, layout)

    if fmt == "flat":
        records = np.empty(terms.size, dtype=_REC_DTYPE)
        records["term"] = terms
        records["local"] = local
        records["weight"] = weights
        offsets = np.searchsorted(block, np.arange(num_blocks + 1))
        return FlatInv(b=b, num_blocks=num_blocks, records=records, offsets=offsets.astype(np.int64))

    block_starts = np.searchsorted(block, np.arange(num_blocks + 1))
    bt, bo, bl, bw = [], [], [], []
    for blk in range(num_blocks):
        s, e = block_starts[blk], block_starts[blk + 1]
        seg_terms = terms[s:e]
        uniq, first = np.unique(seg_terms, return_index=True)
        offsets = np.concatenate([first, [seg_terms.size]])
        bt.append(uniq)
        bo.append(offsets)
        bl.append(local[s:e])
        bw.append(weights[s:e])
    return CompactInv(b=b, num_blocks=num_blocks, block_terms=bt, block_offsets=bo,
                      block_locals=bl, block_weights=bw)


def load_doc_index(buf: bytes) -> DocIndex:
    tag = buf[0]
    name = FORMATS[tag]
    cls = {"compact": CompactInv, "flat": FlatInv, "fwd": FwdIndex}[name]
    return cls.from_bytes(buf)
