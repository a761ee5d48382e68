"""On-disk tensor container: named float32 tensors, little-endian, versioned.

Layout (all integers little-endian):
  magic     8 bytes  b"CSILABTF"
  version   uint32   currently 1
  n_entries uint32
  entries, each:
    name_len uint16, name utf-8 bytes
    rank     uint32, dims uint32[rank]
    payload  float32[prod(dims)]

The format is deliberately trivial so other tooling can parse it with a few
lines of code. Values are stored single-precision; callers that need double
precision convert after loading.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"CSILABTF"
VERSION = 1


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named tensors; insertion order of the dict is preserved."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            data = np.ascontiguousarray(arr, dtype="<f4")
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated tensor file while reading {what}")
    return buf


def load_tensors(path) -> dict[str, np.ndarray]:
    """Read back the container; raises FormatError on any malformation."""
    path = Path(path)
    with open(path, "rb") as fh:
        if _read_exact(fh, 8, "magic") != MAGIC:
            raise FormatError(f"{path}: bad magic, not a csilab tensor file")
        version, n_entries = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(n_entries):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, "rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, "dims"))
            count = int(np.prod(dims, dtype=np.int64)) if rank else 1
            payload = _read_exact(fh, 4 * count, f"payload of {name!r}")
            out[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
        trailing = fh.read(1)
        if trailing:
            raise FormatError(f"{path}: trailing bytes after declared entries")
    return out
