"""Binary checkpoint format for ordered, named parameter tensors.

Each record is: name length (u32), UTF-8 name bytes, rank (u32), one u32
per extent, then the row-major payload as little-endian float64.  Records
repeat until end of file; order is preserved.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import GraphError


def save_checkpoint(path, named_tensors) -> None:
    """Write an ordered iterable of (name, array) pairs."""
    with open(path, "wb") as fh:
        for name, arr in named_tensors:
            data = np.asarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.tobytes(order="C"))


def load_checkpoint(path) -> list[tuple[str, np.ndarray]]:
    """Read records back in file order as float64 arrays."""
    out: list[tuple[str, np.ndarray]] = []
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = 0

    def take(count: int) -> bytes:
        nonlocal pos
        if pos + count > len(blob):
            raise GraphError(f"{path}: truncated checkpoint record at byte {pos}")
        chunk = blob[pos:pos + count]
        pos += count
        return chunk

    while pos < len(blob):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}I", take(4 * rank)) if rank else ()
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        payload = take(8 * count)
        arr = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
        out.append((name, arr))
    return out
