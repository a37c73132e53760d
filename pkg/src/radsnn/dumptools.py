"""Memory snapshots, dump diffing, and cross-section/fluence arithmetic.

Dump format ("ODMP"): a little-endian 27-byte header

    magic        4s   b"ODMP"
    version      u16  currently 1
    n_pre        u16
    n_post       u16
    bits_per_entry u8
    seed         u64  provenance tag, not used on load
    timestamp_s  u64  0 unless explicitly supplied (keeps dumps reproducible)

followed by the packed bit image: memory bit b sits at payload bit offset b,
bytes filled LSB-first, so a memory whose only set bit is 9 packs to
payload[1] == 0x02.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .memory import BITS_PER_ENTRY, SynapticMemory

MAGIC = b"ODMP"
VERSION = 1
_HEADER = struct.Struct("<4sHHHBQQ")


class DumpFormatError(ValueError):
    pass


@dataclass
class DumpFile:
    n_pre: int
    n_post: int
    bits_per_entry: int
    seed: int
    timestamp_s: int
    payload: bytes
    version: int = VERSION

    @property
    def total_bits(self) -> int:
        return self.n_pre * self.n_post * self.bits_per_entry

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            MAGIC, self.version, self.n_pre, self.n_post,
            self.bits_per_entry, self.seed, self.timestamp_s,
        )
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "DumpFile":
        if len(data) < _HEADER.size:
            raise DumpFormatError(f"dump too short: {len(data)} bytes")
        magic, version, n_pre, n_post, bpe, seed, ts = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise DumpFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise DumpFormatError(f"unsupported dump version {version}")
        payload = data[_HEADER.size:]
        expected = (n_pre * n_post * bpe + 7) // 8
        if len(payload) != expected:
            raise DumpFormatError(
                f"payload length {len(payload)} does not match geometry "
                f"{n_pre}x{n_post}x{bpe} ({expected} bytes expected)"
            )
        return cls(n_pre, n_post, bpe, seed, ts, payload, version)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(self.to_bytes())
        tmp.replace(path)

    @classmethod
    def read(cls, path: str | Path) -> "DumpFile":
        return cls.from_bytes(Path(path).read_bytes())

    def bit_array(self) -> np.ndarray:
        bits = np.unpackbits(np.frombuffer(self.payload, dtype=np.uint8), bitorder="little")
        return bits[: self.total_bits]


def dump(memory: SynapticMemory, seed: int = 0, timestamp_s: int = 0) -> DumpFile:
    """Snapshot a memory into a DumpFile (lossless round trip with load)."""
    bits = memory.bit_image()
    payload = np.packbits(bits, bitorder="little").tobytes()
    return DumpFile(memory.n_pre, memory.n_post, BITS_PER_ENTRY, seed, timestamp_s, payload)


def load(dumpfile: DumpFile) -> SynapticMemory:
    if dumpfile.bits_per_entry != BITS_PER_ENTRY:
        raise DumpFormatError(
            f"cannot load {dumpfile.bits_per_entry}-bit entries into "
            f"{BITS_PER_ENTRY}-bit records"
        )
    return SynapticMemory.from_bit_image(dumpfile.bit_array(), dumpfile.n_pre, dumpfile.n_post)


def diff(dump_a: DumpFile, dump_b: DumpFile) -> tuple[int, np.ndarray]:
    """Hamming distance and sorted flat indices of differing bits."""
    if (dump_a.n_pre, dump_a.n_post, dump_a.bits_per_entry) != (
        dump_b.n_pre, dump_b.n_post, dump_b.bits_per_entry,
    ):
        raise DumpFormatError(
            f"geometry mismatch: {dump_a.n_pre}x{dump_a.n_post}x{dump_a.bits_per_entry} "
            f"vs {dump_b.n_pre}x{dump_b.n_post}x{dump_b.bits_per_entry}"
        )
    xor = np.frombuffer(dump_a.payload, dtype=np.uint8) ^ np.frombuffer(
        dump_b.payload, dtype=np.uint8
    )
    bits = np.unpackbits(xor, bitorder="little")[: dump_a.total_bits]
    positions = np.flatnonzero(bits)
    return int(positions.size), positions


# -- beam-exposure arithmetic -------------------------------------------------


def cross_section(n_errors: int, fluence: float) -> float:
    """Upset cross-section in cm^2: observed errors per unit fluence."""
    if n_errors < 0:
        raise ValueError("error count must be non-negative")
    if fluence <= 0:
        raise ValueError("fluence must be positive")
    return n_errors / fluence


def relevant_fraction(
    enabled_neurons: int, n_pre: int = 256,
    bits_per_entry: int = BITS_PER_ENTRY, total_bits: int = 262144,
) -> float:
    """Fraction of the synaptic array actually used by the enabled neurons."""
    if enabled_neurons <= 0 or n_pre <= 0 or bits_per_entry <= 0 or total_bits <= 0:
        raise ValueError("all counts must be positive")
    return (n_pre * enabled_neurons * bits_per_entry) / total_bits


@dataclass
class LedgerEntry:
    config_name: str
    runtime_s: float
    fluence: float  # particles/cm^2

    def __post_init__(self):
        if self.runtime_s <= 0:
            raise ValueError(f"{self.config_name}: runtime must be positive")
        if self.fluence < 0:
            raise ValueError(f"{self.config_name}: fluence must be non-negative")

    @property
    def flux(self) -> float:
        return self.fluence / self.runtime_s


@dataclass
class FluenceLedger:
    entries: list[LedgerEntry] = field(default_factory=list)


# Measured beam-exposure bookkeeping shipped as the reference calibration:
# (configuration, runtime seconds, integrated fluence).
DEFAULT_LEDGER = FluenceLedger(
    [
        LedgerEntry("6k-learning", 7 * 3600 + 10 * 60, 1.14e11),
        LedgerEntry("6k-inference-only", 7 * 3600 + 10 * 60, 1.18e11),
        LedgerEntry("60k-learning", 27 * 3600 + 37 * 60, 4.03e11),
    ]
)


def fluence_report(ledger: FluenceLedger) -> list[dict]:
    """Per-entry table rows with the derived flux (particles/cm^2/s)."""
    return [
        {
            "config_name": e.config_name,
            "runtime_s": e.runtime_s,
            "fluence": e.fluence,
            "flux": e.flux,
        }
        for e in ledger.entries
    ]


def format_sci(x: float, sig: int = 3) -> str:
    """Scientific notation with ``sig`` significant digits and a bare
    exponent, e.g. 4.17e-9."""
    if x == 0:
        return "0"
    s = f"{x:.{sig - 1}e}"
    mantissa, exponent = s.split("e")
    return f"{mantissa}e{int(exponent)}"
