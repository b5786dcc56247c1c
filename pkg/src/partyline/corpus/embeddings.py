"""PLEMB binary embedding container.

Layout: magic b"PLEMB001" (8 bytes), little-endian u32 dim, little-endian u64
count, then `count` records of (little-endian u64 tweet_id, dim little-endian
IEEE-754 float32 values).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError, FormatError, TruncationError

MAGIC = b"PLEMB001"
_HEADER = struct.Struct("<8sIQ")


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("id", "<u8"), ("vec", "<f4", (dim,))])


@dataclass
class EmbeddingStore:
    """Dense matrix of float32 sentence embeddings keyed by tweet id.

    Immutable after construction; safe for shared read-only access.
    """

    dim: int
    ids: np.ndarray        # uint64, shape (n,)
    vectors: np.ndarray    # float32, shape (n, dim)
    normalized: bool = False
    _row_of: dict[int, int] = field(init=False, repr=False)
    _unit: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.ids = np.ascontiguousarray(self.ids, dtype=np.uint64)
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.dim <= 0:
            raise DataError(f"dim must be positive, got {self.dim}")
        if self.vectors.ndim != 2 or self.vectors.shape != (len(self.ids), self.dim):
            raise DataError(
                f"vector matrix shape {self.vectors.shape} does not match "
                f"{len(self.ids)} ids x dim {self.dim}"
            )
        if len(np.unique(self.ids)) != len(self.ids):
            raise DataError("duplicate tweet ids in embedding store")
        zero = ~self.vectors.any(axis=1)
        if zero.any():
            bad = int(self.ids[int(np.argmax(zero))])
            raise DataError(f"all-zero embedding row for tweet id {bad}")
        self._row_of = {int(i): r for r, i in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, tweet_id: int) -> bool:
        return tweet_id in self._row_of

    def row_of(self, tweet_id: int) -> int:
        try:
            return self._row_of[tweet_id]
        except KeyError:
            raise DataError(f"no embedding row for tweet id {tweet_id}") from None

    def rows_for(self, tweet_ids: Sequence[int]) -> list[int]:
        return [self.row_of(i) for i in tweet_ids]

    def vector(self, tweet_id: int) -> np.ndarray:
        return self.vectors[self.row_of(tweet_id)]

    def unit_matrix(self) -> np.ndarray:
        """Float64 copy of the vectors with every row scaled to unit length.

        Computed once and cached; the store is immutable so this is safe.
        """
        if self._unit is None:
            v = self.vectors.astype(np.float64)
            norms = np.linalg.norm(v, axis=1, keepdims=True)
            self._unit = v / norms
        return self._unit


def load_embeddings(path: str | Path, normalize: bool = False) -> EmbeddingStore:
    """Read a PLEMB file.

    With `normalize`, rows are scaled to unit length on load (after which
    every dot product downstream is a cosine). Validation order: magic,
    header/size consistency, zero rows, duplicate ids.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for PLEMB header")
    magic, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if dim == 0:
        raise FormatError(f"{path}: dim must be positive")
    expected = _HEADER.size + count * (8 + 4 * dim)
    if len(raw) != expected:
        raise TruncationError(
            f"{path}: declared {count} rows x dim {dim} needs {expected} bytes, "
            f"file has {len(raw)}"
        )
    records = np.frombuffer(raw, dtype=_record_dtype(dim), count=count, offset=_HEADER.size)
    ids = records["id"].copy()
    vectors = records["vec"].copy()
    store = EmbeddingStore(dim=dim, ids=ids, vectors=vectors)
    if normalize:
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True)
        store = EmbeddingStore(
            dim=dim, ids=ids, vectors=(vectors / norms).astype(np.float32), normalized=True
        )
    return store


def store_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write a store to a PLEMB file; inverse of load_embeddings (bytes round-trip
    when normalization was off)."""
    records = np.empty(len(store), dtype=_record_dtype(store.dim))
    records["id"] = store.ids
    records["vec"] = store.vectors
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, store.dim, len(store)))
        f.write(records.tobytes())
