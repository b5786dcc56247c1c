"""Inter-party distance computation.

Per-topic distance is the mean cosine distance over all cross pairs of two
tweet sets; party distance averages those per-topic values over the shared
hashtags. The fast path rewrites the mean pairwise cosine as a single dot
product of the two sets' unit-row centroids:

    mean_{i,j} dot(u_i, v_j) = dot(mean_i u_i, mean_j v_j)

which is exact and turns O(n*m*d) into O((n+m)*d). The pairwise form is kept
as a reference path and test oracle. A hashtag-free quasi-metric based on
nearest cross-party neighbors is provided for corpora without hashtags.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus.embeddings import EmbeddingStore
from .errors import DataError, DegenerateCorpusError
from ._parallel import parallel_chunks


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine similarity of two nonzero vectors, clamped to [-1, 1]."""
    ua = np.asarray(u, dtype=np.float64)
    va = np.asarray(v, dtype=np.float64)
    if ua.shape != va.shape:
        raise DataError(f"dimension mismatch: {ua.shape} vs {va.shape}")
    nu = np.linalg.norm(ua)
    nv = np.linalg.norm(va)
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(ua @ va) / (nu * nv))))


def _unit_rows(store: EmbeddingStore, indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.intp)
    return store.unit_matrix()[idx]


def topic_distance_bruteforce(
    ca: Sequence[int], cb: Sequence[int], store: EmbeddingStore
) -> float:
    """Mean cosine distance over all |ca| x |cb| cross pairs, computed pairwise.

    Reference path: evaluates every pairwise cosine, in row blocks so memory
    stays bounded on large sets.
    """
    if len(ca) == 0 or len(cb) == 0:
        raise DataError("topic distance needs nonempty tweet sets on both sides")
    ua = _unit_rows(store, ca)
    ub = _unit_rows(store, cb)
    block = max(1, (1 << 22) // max(1, len(cb)))
    total = 0.0
    for start in range(0, len(ca), block):
        sims = ua[start : start + block] @ ub.T
        total += float(np.sum(1.0 - sims))
    return total / (len(ca) * len(cb))


def topic_distance_fast(
    ca: Sequence[int], cb: Sequence[int], store: EmbeddingStore
) -> float:
    """Centroid form of the mean pairwise cosine distance; exact rewrite."""
    if len(ca) == 0 or len(cb) == 0:
        raise DataError("topic distance needs nonempty tweet sets on both sides")
    cen_a = _unit_rows(store, ca).mean(axis=0)
    cen_b = _unit_rows(store, cb).mean(axis=0)
    return float(1.0 - cen_a @ cen_b)


@dataclass(frozen=True)
class TopicSlice:
    """One hashtag's tweets split by party, as embedding row indices."""

    hashtag: str
    per_party: Mapping[str, Sequence[int]]


@dataclass
class DistanceMatrix:
    """Symmetric labeled party x party matrix with zero diagonal."""

    labels: list[str]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise DataError("duplicate labels in distance matrix")
        if self.values.shape != (n, n):
            raise DataError(f"matrix shape {self.values.shape} does not match {n} labels")
        if not np.all(np.isfinite(self.values)):
            raise DataError("distance matrix has non-finite entries")
        if np.max(np.abs(self.values - self.values.T), initial=0.0) > 1e-12:
            raise DataError("distance matrix is not symmetric")
        if np.any(np.diag(self.values) != 0.0):
            raise DataError("distance matrix diagonal must be zero")

    @property
    def n(self) -> int:
        return len(self.labels)

    def entry(self, a: str, b: str) -> float:
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def reorder(self, labels: Sequence[str]) -> "DistanceMatrix":
        """Same matrix with rows/columns rearranged to `labels`."""
        if set(labels) != set(self.labels):
            raise DataError(
                f"cannot reorder to labels {sorted(labels)}: have {sorted(self.labels)}"
            )
        perm = [self.labels.index(l) for l in labels]
        return DistanceMatrix(list(labels), self.values[np.ix_(perm, perm)])

    def to_csv(self, path: str | Path) -> None:
        """Header row of party labels, labeled rows, 9 significant digits."""
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["party", *self.labels])
            for label, row in zip(self.labels, self.values):
                w.writerow([label, *(format(v, ".9g") for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "DistanceMatrix":
        with open(path, "r", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        if not rows or not rows[0] or rows[0][0] != "party":
            raise DataError(f"{path}: not a distance matrix CSV (expected 'party' header)")
        labels = rows[0][1:]
        body = rows[1:]
        if len(body) != len(labels):
            raise DataError(f"{path}: {len(labels)} labels but {len(body)} rows")
        values = np.zeros((len(labels), len(labels)))
        for i, row in enumerate(body):
            if row[0] != labels[i]:
                raise DataError(f"{path}: row label {row[0]!r} does not match header order")
            try:
                values[i] = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}: bad value in row {row[0]!r}: {exc}") from None
        return cls(labels, values)


def _party_centroids(
    slice_: TopicSlice, parties: Sequence[str], store: EmbeddingStore
) -> np.ndarray:
    cents = np.empty((len(parties), store.dim))
    for k, p in enumerate(parties):
        rows = slice_.per_party.get(p)
        if not rows:
            raise DataError(f"hashtag {slice_.hashtag!r} has no tweets for party {p!r}")
        cents[k] = _unit_rows(store, sorted(rows)).mean(axis=0)
    return cents


def _slice_distances(
    sl: TopicSlice, parties: Sequence[str], store: EmbeddingStore, bruteforce: bool
) -> np.ndarray:
    n = len(parties)
    out = np.zeros((n, n))
    if bruteforce:
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = topic_distance_bruteforce(
                    sorted(sl.per_party[parties[i]]),
                    sorted(sl.per_party[parties[j]]),
                    store,
                )
    else:
        cents = _party_centroids(sl, parties, store)
        sims = cents @ cents.T
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = 1.0 - sims[i, j]
    return out


def aggregate_topics(
    slices: Sequence[TopicSlice],
    parties: Sequence[str],
    store: EmbeddingStore,
    bruteforce: bool = False,
    threads: int = 1,
) -> DistanceMatrix:
    """Average the per-hashtag distances over all shared hashtags.

    Deterministic reduction: slices are processed in sorted hashtag order and
    party tweet lists in sorted row order, so results are reproducible
    bit-for-bit across runs and sampling paths. Per-slice work may run on a
    thread pool; partial results are combined in hashtag order, so the output
    matches the sequential reduction exactly.
    """
    if not slices:
        raise DataError("no shared hashtags: cannot aggregate topic distances")
    parties = list(parties)
    ordered = sorted(slices, key=lambda s: s.hashtag)
    partials = parallel_chunks(
        lambda sl: _slice_distances(sl, parties, store, bruteforce), ordered, threads
    )
    total = np.zeros((len(parties), len(parties)))
    for partial in partials:
        total += partial
    total /= len(ordered)
    total = total + total.T
    np.fill_diagonal(total, 0.0)
    return DistanceMatrix(parties, total)


def average_baseline(
    party_sets: Mapping[str, Sequence[int]],
    store: EmbeddingStore,
    parties: Sequence[str] | None = None,
) -> DistanceMatrix:
    """Mean cosine distance over all cross tweet pairs of each party pair,
    with no hashtag split."""
    parties = list(parties) if parties is not None else sorted(party_sets)
    for p in parties:
        if not party_sets.get(p):
            raise DataError(f"party {p!r} has no tweets")
    cents = np.empty((len(parties), store.dim))
    for k, p in enumerate(parties):
        cents[k] = _unit_rows(store, sorted(party_sets[p])).mean(axis=0)
    sims = cents @ cents.T
    values = 1.0 - sims
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(parties, values)


def twin(s: Sequence[float], candidates: Sequence[int], store: EmbeddingStore) -> int:
    """Row index in `candidates` whose vector has maximal cosine with `s`.

    Ties break toward the numerically smallest row index.
    """
    if len(candidates) == 0:
        raise DataError("twin needs a nonempty candidate set")
    sv = np.asarray(s, dtype=np.float64)
    ns = np.linalg.norm(sv)
    if ns == 0.0:
        raise DataError("cosine of a zero vector is undefined")
    ordered = sorted(candidates)
    dots = _unit_rows(store, ordered) @ (sv / ns)
    return int(ordered[int(np.argmax(dots))])


def max_intra_sim(members: Sequence[int], store: EmbeddingStore) -> float:
    """Maximum cosine over all distinct index pairs of one party's tweets."""
    if len(members) < 2:
        raise DataError("max intra-party similarity needs at least 2 tweets")
    u = _unit_rows(store, sorted(members))
    block = max(1, (1 << 22) // len(u))
    best = -np.inf
    for start in range(0, len(u), block):
        sims = u[start : start + block] @ u.T
        rows, cols = np.indices(sims.shape)
        sims[rows + start == cols] = -np.inf  # mask self-pairs
        best = max(best, float(sims.max()))
    return min(1.0, best)


def _directed_twin_sim(
    u1: np.ndarray, u2: np.ndarray, denom: float
) -> float:
    # sum over rows of u1 of the best cosine into u2, normalized; blocked so
    # the pairwise matrix never materializes in full
    block = max(1, (1 << 22) // max(1, len(u2)))
    parts = []
    for start in range(0, len(u1), block):
        best = (u1[start : start + block] @ u2.T).max(axis=1)
        parts.append(math.fsum(np.minimum(1.0, best)))
    return math.fsum(parts) / (len(u1) * denom)


def twin_distance(
    p1: Sequence[int], p2: Sequence[int], store: EmbeddingStore
) -> float:
    """Hashtag-free quasi-metric from nearest cross-party neighbors.

    Each tweet is matched to its most similar tweet in the other party; the
    directed similarities are normalized by the parties' maximal intra-party
    similarities and symmetrized. Identical index sets give exactly 0.
    Multisets are iterated by index, so duplicate rows contribute separately.
    """
    if len(p1) < 2 or len(p2) < 2:
        raise DataError("twin distance needs at least 2 tweets per party")
    if sorted(p1) == sorted(p2):
        return 0.0
    c1 = max_intra_sim(p1, store)
    c2 = max_intra_sim(p2, store)
    denom = c1 + c2
    if denom <= 0.0:
        raise DegenerateCorpusError(
            f"twin similarity normalizer C(P1)+C(P2) = {denom:.6g} is not positive"
        )
    u1 = _unit_rows(store, sorted(p1))
    u2 = _unit_rows(store, sorted(p2))
    sim12 = _directed_twin_sim(u1, u2, denom)
    sim21 = _directed_twin_sim(u2, u1, denom)
    return 1.0 - (sim12 + sim21) / 2.0


def twin_matrix(
    party_sets: Mapping[str, Sequence[int]],
    store: EmbeddingStore,
    parties: Sequence[str] | None = None,
) -> DistanceMatrix:
    """Pairwise twin_distance over full party tweet sets."""
    parties = list(parties) if parties is not None else sorted(party_sets)
    n = len(parties)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = twin_distance(
                party_sets[parties[i]], party_sets[parties[j]], store
            )
    values = values + values.T
    return DistanceMatrix(parties, values)
