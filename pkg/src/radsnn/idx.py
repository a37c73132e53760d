"""IDX (MNIST) binary file parsing.

Layout: two zero bytes, a type code, a dimension count, then big-endian
u32 sizes for each dimension, then the row-major payload.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


class IdxParseError(ValueError):
    """Malformed IDX data; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def parse_idx(data: bytes) -> np.ndarray:
    """Parse raw IDX bytes into an ndarray with the header's shape."""
    if len(data) < 4:
        raise IdxParseError("truncated header, need 4 magic bytes", len(data))
    if data[0] != 0 or data[1] != 0:
        off = 0 if data[0] != 0 else 1
        raise IdxParseError(f"bad magic byte 0x{data[off]:02x}, expected 0x00", off)
    type_code, ndim = data[2], data[3]
    if type_code not in _DTYPES:
        raise IdxParseError(f"unknown type code 0x{type_code:02x}", 2)
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise IdxParseError(f"truncated dimension table, need {ndim} u32 sizes", len(data))
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    dtype = _DTYPES[type_code]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize if ndim else dtype.itemsize
    if len(data) - header_len != expected:
        raise IdxParseError(
            f"payload length {len(data) - header_len} does not match "
            f"dimensions {dims} ({expected} bytes expected)",
            header_len,
        )
    arr = np.frombuffer(data, dtype=dtype, count=int(np.prod(dims, dtype=np.int64)), offset=header_len)
    return arr.reshape(dims).astype(dtype.newbyteorder("=")) if ndim else arr


def load_idx(path: str | Path) -> np.ndarray:
    """Read an IDX file, transparently decompressing gzip."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_idx(raw)


@dataclass
class ImageSet:
    """Paired image grids and labels."""

    images: np.ndarray  # (n, rows, cols) uint8
    labels: np.ndarray  # (n,) uint8

    def __len__(self) -> int:
        return len(self.labels)


_SPLIT_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def find_split(data_dir: str | Path, split: str) -> tuple[Path, Path]:
    """Locate the standard image/label file pair for a split, accepting
    either plain or .gz files."""
    if split not in _SPLIT_FILES:
        raise ValueError(f"split must be one of {sorted(_SPLIT_FILES)}")
    data_dir = Path(data_dir)
    found = []
    for stem in _SPLIT_FILES[split]:
        for candidate in (data_dir / stem, data_dir / (stem + ".gz")):
            if candidate.exists():
                found.append(candidate)
                break
        else:
            raise FileNotFoundError(
                f"missing {stem}[.gz] in {data_dir} for split {split!r}"
            )
    return found[0], found[1]


def load_image_set(images_path: str | Path, labels_path: str | Path) -> ImageSet:
    images = load_idx(images_path)
    labels = load_idx(labels_path)
    if images.ndim != 3:
        raise IdxParseError(f"image file has {images.ndim} dimensions, expected 3", 3)
    if labels.ndim != 1:
        raise IdxParseError(f"label file has {labels.ndim} dimensions, expected 1", 3)
    if len(images) != len(labels):
        raise IdxParseError(
            f"image count {len(images)} does not match label count {len(labels)}", 4
        )
    return ImageSet(images.astype(np.uint8), labels.astype(np.uint8))
