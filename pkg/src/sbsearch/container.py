"""Build, serialize, and load the full retrieval index.

One little-endian container file holds the superblock/block weight stores, the
document index, and the doc-id map behind a fixed header and a section table.
Loading and re-serializing a container is byte-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .codec import PackedWeightStore, build_store
from .corpus import Collection
from .docindex import FORMAT_TAGS, FORMATS, DocIndex, build_doc_index, load_doc_index
from .partition import IndexLayout, assign_blocks, compute_level_weights
from .sparse import QuantizationParams

MAGIC = b"LSPI"
VERSION = 1
_HEADER = struct.Struct("<4sHBBHHIIIBBBxd")
_SECTION = struct.Struct("<BQQ")

SECTION_SB_MAX = 1
SECTION_SB_AVG = 2
SECTION_BLOCK = 3
SECTION_DOC_INDEX = 4
SECTION_DOC_ID_MAP = 5
SECTION_NAMES = {
    SECTION_SB_MAX: "superblock-max-store",
    SECTION_SB_AVG: "superblock-avg-store",
    SECTION_BLOCK: "block-store",
    SECTION_DOC_INDEX: "doc-index",
    SECTION_DOC_ID_MAP: "doc-id-map",
}


@dataclass(eq=False)
class Index:
    """A fully built index: layout, bound stores, doc index, and id maps."""

    params: QuantizationParams
    layout: IndexLayout
    sb_max_store: PackedWeightStore
    block_store: PackedWeightStore
    doc_index: DocIndex
    ext_ids: list[str]
    sb_avg_store: PackedWeightStore | None = None

    @cached_property
    def tie_rank(self) -> np.ndarray:
        """Dense rank of each internal doc id under ascending external id order."""
        order = np.argsort(np.array(self.ext_ids))
        ranks = np.empty(len(self.ext_ids), dtype=np.int64)
        ranks[order] = np.arange(len(self.ext_ids))
        return ranks

    @cached_property
    def slot_tie(self) -> np.ndarray:
        return self.tie_rank[self.layout.order]

    @cached_property
    def ext_to_slot(self) -> dict[str, int]:
        slot_of_doc = self.layout.slot_of_doc
        return {e: int(slot_of_doc[i]) for i, e in enumerate(self.ext_ids)}

    @property
    def num_docs(self) -> int:
        return self.layout.num_docs


def build_index(
    collection: Collection,
    b: int,
    c: int,
    *,
    doc_format: str = "flat",
    bits: int = 8,
    bits_superblock: int | None = None,
    with_avg: bool = False,
    strategy: str = "input-order",
    seed: int | None = None,
    layout: IndexLayout | None = None,
    n_clusters: int | None = None,
) -> Index:
    """Assemble an index; ``bits`` quantizes the block (and by default superblock) bounds."""
    if layout is None:
        layout = assign_blocks(collection, b, c, strategy, seed=seed, n_clusters=n_clusters)
    block_lw, sb_lw, avg_lw = compute_level_weights(
        collection, layout, bits_block=bits, bits_superblock=bits_superblock, with_avg=with_avg
    )
    return Index(
        params=collection.params,
        layout=layout,
        sb_max_store=build_store(sb_lw),
        block_store=build_store(block_lw),
        sb_avg_store=build_store(avg_lw) if avg_lw is not None else None,
        doc_index=build_doc_index(collection, layout, doc_format),
        ext_ids=list(collection.ext_ids),
    )


def _doc_id_map_bytes(index: Index) -> bytes:
    parts = [struct.pack("<I", len(index.ext_ids))]
    for e in index.ext_ids:
        raw = e.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(index.layout.order.astype("<u4").tobytes())
    return b"".join(parts)


def _parse_doc_id_map(buf: bytes) -> tuple[list[str], np.ndarray]:
    (n,) = struct.unpack_from("<I", buf, 0)
    off = 4
    ext_ids = []
    for _ in range(n):
        (ln,) = struct.unpack_from("<H", buf, off)
        off += 2
        ext_ids.append(buf[off : off + ln].decode("utf-8"))
        off += ln
    order = np.frombuffer(buf, dtype="<u4", count=n, offset=off).astype(np.int64)
    return ext_ids, order


def serialize_index(index: Index) -> bytes:
    sections: list[tuple[int, bytes]] = [
        (SECTION_SB_MAX, index.sb_max_store.to_bytes()),
    ]
    if index.sb_avg_store is not None:
        sections.append((SECTION_SB_AVG, index.sb_avg_store.to_bytes()))
    sections.append((SECTION_BLOCK, index.block_store.to_bytes()))
    sections.append((SECTION_DOC_INDEX, index.doc_index.to_bytes()))
    sections.append((SECTION_DOC_ID_MAP, _doc_id_map_bytes(index)))

    layout = index.layout
    flags = 1 if index.sb_avg_store is not None else 0
    header = _HEADER.pack(
        MAGIC, VERSION, FORMAT_TAGS[index.doc_index.format_name], flags,
        layout.b, layout.c, layout.num_docs, layout.num_blocks, layout.num_superblocks,
        index.block_store.bits, index.sb_max_store.bits, index.params.bits,
        index.params.global_max,
    )
    table_len = 1 + _SECTION.size * len(sections)
    offset = len(header) + table_len
    table = [struct.pack("<B", len(sections))]
    for kind, data in sections:
        table.append(_SECTION.pack(kind, offset, len(data)))
        offset += len(data)
    return b"".join([header, *table, *[data for _, data in sections]])


def save_index(index: Index, path: str | Path) -> None:
    Path(path).write_bytes(serialize_index(index))


def parse_header(buf: bytes) -> dict:
    if buf[:4] != MAGIC:
        raise ValueError("not an index container (bad magic)")
    (magic, version, fmt_tag, flags, b, c, num_docs, num_blocks, num_superblocks,
     bits_block, bits_superblock, doc_bits, global_max) = _HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    (n_sections,) = struct.unpack_from("<B", buf, _HEADER.size)
    sections = []
    for i in range(n_sections):
        kind, off, length = _SECTION.unpack_from(buf, _HEADER.size + 1 + i * _SECTION.size)
        sections.append({"kind": kind, "name": SECTION_NAMES[kind], "offset": off, "length": length})
    return {
        "version": version,
        "doc_format": FORMATS[fmt_tag],
        "has_avg_store": bool(flags & 1),
        "b": b,
        "c": c,
        "num_docs": num_docs,
        "num_blocks": num_blocks,
        "num_superblocks": num_superblocks,
        "bits_block": bits_block,
        "bits_superblock": bits_superblock,
        "doc_bits": doc_bits,
        "global_max": global_max,
        "header_len": _HEADER.size + 1 + n_sections * _SECTION.size,
        "sections": sections,
    }


def load_index(path: str | Path) -> Index:
    buf = Path(path).read_bytes()
    head = parse_header(buf)
    by_kind = {s["kind"]: buf[s["offset"] : s["offset"] + s["length"]] for s in head["sections"]}
    ext_ids, order = _parse_doc_id_map(by_kind[SECTION_DOC_ID_MAP])
    layout = IndexLayout(b=head["b"], c=head["c"], order=order)
    return Index(
        params=QuantizationParams(global_max=head["global_max"], bits=head["doc_bits"]),
        layout=layout,
        sb_max_store=PackedWeightStore.from_bytes(by_kind[SECTION_SB_MAX]),
        block_store=PackedWeightStore.from_bytes(by_kind[SECTION_BLOCK]),
        sb_avg_store=(PackedWeightStore.from_bytes(by_kind[SECTION_SB_AVG])
                      if SECTION_SB_AVG in by_kind else None),
        doc_index=load_doc_index(by_kind[SECTION_DOC_INDEX]),
        ext_ids=ext_ids,
    )


def inspect_index(path: str | Path) -> dict:
    """Header fields plus per-section byte sizes; sections sum to file size minus header."""
    buf = Path(path).read_bytes()
    head = parse_header(buf)
    head["file_size"] = len(buf)
    head["section_total"] = sum(s["length"] for s in head["sections"])
    return head
