"""Manifesto ground truth: per-party category salience vectors and their
Euclidean distance matrix.

Input is a counts CSV with header ``party,category,count`` where each party
additionally carries a ``__length__`` row giving the number of annotated
quasi-sentences of its manifesto. Salience is count divided by that length.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distances import DistanceMatrix
from .errors import DataError

LENGTH_KEY = "__length__"

# Standard category scheme shipped as the default codebook: seven policy
# domains, main codes plus handbook-5 subcategories. Counts CSVs may carry
# additional codes (codebook revisions drift); those warn instead of failing.
_MAIN_CODES = (
    [f"{c}" for c in range(101, 111)]
    + [f"{c}" for c in range(201, 205)]
    + [f"{c}" for c in range(301, 306)]
    + [f"{c}" for c in range(401, 417)]
    + [f"{c}" for c in range(501, 508)]
    + [f"{c}" for c in range(601, 609)]
    + [f"{c}" for c in range(701, 707)]
)
_SUB_CODES = [
    "103.1", "103.2",
    "201.1", "201.2",
    "202.1", "202.2", "202.3", "202.4",
    "305.1", "305.2", "305.3", "305.4", "305.5", "305.6",
    "416.1", "416.2",
    "601.1", "601.2",
    "602.1", "602.2",
    "605.1", "605.2",
    "606.1", "606.2",
    "607.1", "607.2", "607.3",
    "608.1", "608.2", "608.3",
    "703.1", "703.2",
]
DEFAULT_CODEBOOK = frozenset(_MAIN_CODES) | frozenset(_SUB_CODES) | {"000"}


class UnknownCategoryWarning(UserWarning):
    """A counts row used a category code outside the declared codebook."""


@dataclass(frozen=True)
class CMPVector:
    """Per-party category salience: counts normalized by manifesto length."""

    party: str
    salience: dict[str, float]
    length: int


def load_codebook(path: str | Path) -> frozenset[str]:
    """Read a codebook file: one category code per line, '#' comments allowed."""
    codes = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            codes.add(line)
    return frozenset(codes)


def build_cmp_vectors(
    path: str | Path, codebook: frozenset[str] | None = DEFAULT_CODEBOOK
) -> list[CMPVector]:
    """Parse a counts CSV into salience vectors, in first-seen party order.

    Unknown category codes warn (UnknownCategoryWarning) and are kept; pass
    ``codebook=None`` to accept any code silently.
    """
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != ["party", "category", "count"]:
        raise DataError(f"{path}: expected header 'party,category,count'")

    counts: dict[str, dict[str, int]] = {}
    lengths: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        party, category, count_str = (c.strip() for c in row)
        try:
            count = int(count_str)
        except ValueError:
            raise DataError(f"{path}:{lineno}: count {count_str!r} is not an integer") from None
        if count < 0:
            raise DataError(f"{path}:{lineno}: negative count {count}")
        if category == LENGTH_KEY:
            if party in lengths:
                raise DataError(f"{path}:{lineno}: duplicate {LENGTH_KEY} row for {party!r}")
            lengths[party] = count
            counts.setdefault(party, {})
            continue
        if codebook is not None and category not in codebook:
            warnings.warn(
                f"{path}:{lineno}: unknown category code {category!r} for {party!r}",
                UnknownCategoryWarning,
                stacklevel=2,
            )
        per_party = counts.setdefault(party, {})
        if category in per_party:
            raise DataError(f"{path}:{lineno}: duplicate category {category!r} for {party!r}")
        per_party[category] = count

    vectors = []
    for party, per_party in counts.items():
        if party not in lengths:
            raise DataError(f"missing {LENGTH_KEY} row for party {party!r}")
        length = lengths[party]
        if length <= 0:
            raise DataError(f"party {party!r} has non-positive manifesto length {length}")
        salience = {c: n / length for c, n in sorted(per_party.items())}
        vectors.append(CMPVector(party=party, salience=salience, length=length))
    return vectors


def cmp_distance_matrix(vectors: list[CMPVector]) -> DistanceMatrix:
    """Pairwise Euclidean distances between salience vectors.

    The category universe is the union of all keys; absent categories count
    as zero salience.
    """
    if len(vectors) < 2:
        raise DataError("need at least 2 parties for a distance matrix")
    parties = [v.party for v in vectors]
    if len(set(parties)) != len(parties):
        raise DataError("duplicate party in CMP vectors")
    categories = sorted({c for v in vectors for c in v.salience})
    mat = np.zeros((len(vectors), len(categories)))
    for i, v in enumerate(vectors):
        for j, c in enumerate(categories):
            mat[i, j] = v.salience.get(c, 0.0)
    diff = mat[:, None, :] - mat[None, :, :]
    values = np.sqrt(np.sum(diff * diff, axis=2))
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(parties, values)
