"""Counter-based pseudo-random primitives (SplitMix64).

All randomness in the simulator flows through these helpers so that every
draw is a pure function of explicit 64-bit keys. Spike encoding is keyed by
(seed, sample, input, step) and never consumes shared state, which makes
sample encodings order-independent and safe to recompute from any worker.
Sequential draws (fault schedules, shuffles) use :class:`Stream`, seeded from
the same key-mixing chain.

The compiled and numpy kernels embed their own copies of the mixing
function; ``tests/test_kernels.py`` pins them against this reference.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# Domain tags keep independent purposes on disjoint key chains.
TAG_ENCODE = 0x656E636F64650001  # spike encoding draws
TAG_FAULT = 0x6661756C740002  # upset schedules
TAG_SHUFFLE = 0x7368756666030003  # dataset pass permutations


def splitmix64(x: int) -> int:
    """One SplitMix64 step: advance ``x`` by the golden gamma and finalize."""
    x = (x + _GAMMA) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*fields: int) -> int:
    """Fold an ordered tuple of u64 fields into one 64-bit key.

    ``mix(a, b)`` != ``mix(b, a)`` in general; order is part of the key.
    """
    h = 0
    for f in fields:
        h = splitmix64(h ^ (f & _MASK))
    return h


def encode_key(seed: int, sample_id: int, line: int, step: int) -> int:
    """Draw key for one (sample, input line, time step) encoding decision."""
    h = splitmix64(splitmix64(seed) ^ (sample_id & _MASK))
    return splitmix64(splitmix64(h ^ line) ^ step)


class Stream:
    """Sequential SplitMix64 stream for schedule-style draws."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def next_unit(self) -> float:
        """Uniform float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def next_exp(self, rate: float) -> float:
        """Exponential inter-arrival time for the given rate (events/s)."""
        # 1 - U avoids log(0); U in [0, 1).
        return -math.log(1.0 - self.next_unit()) / rate

    def shuffle(self, seq) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]


def stream_for(*fields: int) -> Stream:
    return Stream(mix(*fields))
