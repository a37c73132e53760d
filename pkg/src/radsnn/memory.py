"""Bit-addressable synaptic crossbar.

Each (pre, post) entry is a 4-bit record: a 3-bit weight plus one mapping
bit that gates whether the weight participates in integration. The flat bit
index used by fault injection and dump files is

    bit = (pre * n_post + post) * 4 + k

with k = 0..2 addressing weight bit k (LSB first) and k = 3 the mapping bit.
For the default 256x256 crossbar this spans 262,144 bits.
"""

from __future__ import annotations

import hashlib

import numpy as np

BITS_PER_ENTRY = 4
WEIGHT_BITS = 3
W_MAX = (1 << WEIGHT_BITS) - 1


class SynapticMemory:
    """Dense crossbar of 4-bit synapse records, indexed (pre, post)."""

    def __init__(self, n_pre: int = 256, n_post: int = 256):
        if n_pre <= 0 or n_post <= 0:
            raise ValueError("crossbar dimensions must be positive")
        self.n_pre = n_pre
        self.n_post = n_post
        self.w = np.zeros((n_pre, n_post), dtype=np.uint8)
        self.m = np.zeros((n_pre, n_post), dtype=np.uint8)

    @property
    def total_bits(self) -> int:
        return self.n_pre * self.n_post * BITS_PER_ENTRY

    def copy(self) -> "SynapticMemory":
        out = SynapticMemory(self.n_pre, self.n_post)
        out.w[:] = self.w
        out.m[:] = self.m
        return out

    def same_geometry(self, other: "SynapticMemory") -> bool:
        return self.n_pre == other.n_pre and self.n_post == other.n_post

    # -- flat bit addressing -------------------------------------------------

    def decode_bit(self, bit: int) -> tuple[int, int, int]:
        """Flat bit index -> (pre, post, bit_in_record)."""
        if not 0 <= bit < self.total_bits:
            raise IndexError(f"bit index {bit} out of range [0, {self.total_bits})")
        entry, k = divmod(bit, BITS_PER_ENTRY)
        pre, post = divmod(entry, self.n_post)
        return pre, post, k

    def encode_bit(self, pre: int, post: int, k: int) -> int:
        """(pre, post, bit_in_record) -> flat bit index."""
        if not (0 <= pre < self.n_pre and 0 <= post < self.n_post and 0 <= k < BITS_PER_ENTRY):
            raise IndexError(f"record address ({pre}, {post}, {k}) out of range")
        return (pre * self.n_post + post) * BITS_PER_ENTRY + k

    def get_bit(self, bit: int) -> int:
        pre, post, k = self.decode_bit(bit)
        if k < WEIGHT_BITS:
            return (int(self.w[pre, post]) >> k) & 1
        return int(self.m[pre, post]) & 1

    def set_bit(self, bit: int, value: int) -> None:
        pre, post, k = self.decode_bit(bit)
        if k < WEIGHT_BITS:
            if value:
                self.w[pre, post] |= 1 << k
            else:
                self.w[pre, post] &= ~(1 << k) & 0xFF
        else:
            self.m[pre, post] = 1 if value else 0

    # -- whole-array views ---------------------------------------------------

    def bit_image(self) -> np.ndarray:
        """All bits as a flat uint8 0/1 array in flat-bit-index order."""
        n = self.n_pre * self.n_post
        bits = np.empty((n, BITS_PER_ENTRY), dtype=np.uint8)
        w = self.w.reshape(n)
        bits[:, 0] = w & 1
        bits[:, 1] = (w >> 1) & 1
        bits[:, 2] = (w >> 2) & 1
        bits[:, 3] = self.m.reshape(n) & 1
        return bits.reshape(-1)

    @classmethod
    def from_bit_image(cls, bits: np.ndarray, n_pre: int, n_post: int) -> "SynapticMemory":
        mem = cls(n_pre, n_post)
        rec = bits.reshape(n_pre * n_post, BITS_PER_ENTRY).astype(np.uint8)
        w = rec[:, 0] | (rec[:, 1] << 1) | (rec[:, 2] << 2)
        mem.w[:] = w.reshape(n_pre, n_post)
        mem.m[:] = rec[:, 3].reshape(n_pre, n_post)
        return mem

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.w).tobytes())
        h.update(np.ascontiguousarray(self.m).tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SynapticMemory):
            return NotImplemented
        return (
            self.same_geometry(other)
            and bool(np.array_equal(self.w, other.w))
            and bool(np.array_equal(self.m, other.m))
        )

    def __repr__(self) -> str:
        return f"SynapticMemory({self.n_pre}x{self.n_post}, {self.total_bits} bits)"
