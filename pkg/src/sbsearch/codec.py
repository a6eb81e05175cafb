"""Bit-packed, randomly accessible storage for per-term weight lists.

Values are packed in groups of 256 at a per-group bit width (0..16). All group
widths ("selectors", one byte each) sit at the head of the list, so any group
can be located from the selector prefix alone and decoded without touching
earlier payload. A width-0 group occupies no payload at all.

On-disk layout (little-endian): [u32 num_values][selector bytes][payload].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

GROUP_SIZE = 256
MAX_WIDTH = 16
_BIT_WEIGHTS = (1 << np.arange(MAX_WIDTH, dtype=np.uint32))


@dataclass(frozen=True, eq=False)
class PackedList:
    num_values: int
    selectors: np.ndarray  # one u8 width per group
    payload: bytes

    @property
    def num_groups(self) -> int:
        return int(self.selectors.size)

    @cached_property
    def group_offsets(self) -> np.ndarray:
        """Byte offset of each group's payload; derived from selectors only."""
        sizes = self.selectors.astype(np.int64) * (GROUP_SIZE // 8)
        return np.concatenate([[0], np.cumsum(sizes)])

    @property
    def payload_bits(self) -> int:
        return int(self.selectors.astype(np.int64).sum()) * GROUP_SIZE

    def decode_group(self, group: int) -> np.ndarray:
        """Exactly 256 u16 values; positions past num_values decode as zero."""
        if not 0 <= group < self.num_groups:
            raise IndexError(f"group {group} out of range [0, {self.num_groups})")
        width = int(self.selectors[group])
        if width == 0:
            return np.zeros(GROUP_SIZE, dtype=np.uint16)
        start, end = self.group_offsets[group], self.group_offsets[group + 1]
        raw = np.frombuffer(self.payload, dtype=np.uint8, count=end - start, offset=start)
        bits = np.unpackbits(raw, bitorder="little").reshape(GROUP_SIZE, width)
        return (bits.astype(np.uint32) * _BIT_WEIGHTS[:width]).sum(axis=1).astype(np.uint16)

    def decode_all(self) -> np.ndarray:
        """Concatenation of all group decodes (zero-padded to a group multiple)."""
        if self.num_groups == 0:
            return np.zeros(0, dtype=np.uint16)
        return np.concatenate([self.decode_group(g) for g in range(self.num_groups)])

    def to_bytes(self) -> bytes:
        return struct.pack("<I", self.num_values) + self.selectors.tobytes() + self.payload

    @staticmethod
    def from_bytes(buf: bytes, offset: int = 0) -> tuple["PackedList", int]:
        """Parse one list; returns (list, bytes consumed)."""
        (num_values,) = struct.unpack_from("<I", buf, offset)
        n_groups = -(-num_values // GROUP_SIZE)
        sel_off = offset + 4
        selectors = np.frombuffer(buf, dtype=np.uint8, count=n_groups, offset=sel_off).copy()
        payload_len = int(selectors.astype(np.int64).sum()) * (GROUP_SIZE // 8)
        pay_off = sel_off + n_groups
        payload = bytes(buf[pay_off : pay_off + payload_len])
        if len(payload) != payload_len:
            raise ValueError("truncated packed list")
        lst = PackedList(num_values=num_values, selectors=selectors, payload=payload)
        return lst, 4 + n_groups + payload_len


def encode_list(values) -> PackedList:
    """Pack an array of u16 values; round-trip exact."""
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= (1 << MAX_WIDTH)):
        raise ValueError("values must be unsigned 16-bit")
    num_values = int(values.size)
    n_groups = -(-num_values // GROUP_SIZE)
    padded = np.zeros(n_groups * GROUP_SIZE, dtype=np.uint32)
    padded[:num_values] = values
    selectors = np.zeros(n_groups, dtype=np.uint8)
    chunks: list[bytes] = []
    for g in range(n_groups):
        group = padded[g * GROUP_SIZE : (g + 1) * GROUP_SIZE]
        width = int(group.max()).bit_length()
        selectors[g] = width
        if width == 0:
            continue
        bits = ((group[:, None] >> np.arange(width, dtype=np.uint32)) & 1).astype(np.uint8)
        chunks.append(np.packbits(bits.reshape(-1), bitorder="little").tobytes())
    return PackedList(num_values=num_values, selectors=selectors, payload=b"".join(chunks))


@dataclass(frozen=True, eq=False)
class PackedWeightStore:
    """One PackedList per term at a single granularity (block or superblock).

    Terms with no list decode as all zeros. ``bits`` records the level
    quantization; ``expansion`` maps stored levels back to the 8-bit document
    weight domain (exactly 17 for 4-bit levels, 1 for 8-bit).
    """

    num_units: int
    bits: int
    lists: dict[int, PackedList]

    @property
    def expansion(self) -> int:
        return 255 // ((1 << self.bits) - 1)

    def values(self, term: int) -> np.ndarray:
        pl = self.lists.get(int(term))
        if pl is None:
            return np.zeros(self.num_units, dtype=np.uint16)
        return pl.decode_all()[: self.num_units]

    def decode(self, term: int, ordinal: int) -> int:
        if not 0 <= ordinal < self.num_units:
            raise IndexError(f"ordinal {ordinal} out of range")
        pl = self.lists.get(int(term))
        if pl is None:
            return 0
        return int(pl.decode_group(ordinal // GROUP_SIZE)[ordinal % GROUP_SIZE])

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<IIB", len(self.lists), self.num_units, self.bits)]
        for term in sorted(self.lists):
            parts.append(struct.pack("<H", term))
            parts.append(self.lists[term].to_bytes())
        return b"".join(parts)

    @staticmethod
    def from_bytes(buf: bytes) -> "PackedWeightStore":
        n_lists, num_units, bits = struct.unpack_from("<IIB", buf, 0)
        off = 9
        lists: dict[int, PackedList] = {}
        for _ in range(n_lists):
            (term,) = struct.unpack_from("<H", buf, off)
            off += 2
            pl, used = PackedList.from_bytes(buf, off)
            off += used
            lists[term] = pl
        return PackedWeightStore(num_units=num_units, bits=bits, lists=lists)


def build_store(level_weights) -> PackedWeightStore:
    """Encode a partition LevelWeights table into packed per-term lists."""
    lists = {term: encode_list(arr) for term, arr in level_weights.per_term.items()}
    return PackedWeightStore(num_units=level_weights.num_units, bits=level_weights.bits, lists=lists)
