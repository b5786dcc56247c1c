"""Writer for the PLEMB embedding container consumed by the analysis CLI.

Layout: magic b"PLEMB001", little-endian u32 dim, little-endian u64 count,
then per row a little-endian u64 id followed by dim float32 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PLEMB001"
_HEADER = struct.Struct("<8sIQ")


def write_plemb(path: str | Path, ids: list[int], vectors: np.ndarray) -> None:
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or len(ids) != vectors.shape[0]:
        raise ValueError("ids and vector rows must match")
    dim = vectors.shape[1]
    records = np.empty(len(ids), dtype=np.dtype([("id", "<u8"), ("vec", "<f4", (dim,))]))
    records["id"] = np.asarray(ids, dtype=np.uint64)
    records["vec"] = vectors
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, dim, len(ids)))
        f.write(records.tobytes())
