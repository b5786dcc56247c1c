"""Balanced positive/negative training pairs from hashtag co-occurrence.

Positive pairs come from the cross-product of tweets sharing a hashtag;
negative pairs combine a tweet carrying the hashtag with a tweet whose
hashtag set is fully disjoint from it. Budgets are allocated per hashtag
proportionally to the hashtag's positive cross-product size, and draws are
made without replacement inside per-hashtag counter-based RNG streams, so
output is deterministic for a given seed and independent of scheduling.

Cross-products are never materialized at scale: pair indices are sampled and
decoded combinatorially, with exact enumeration only below a size cutoff.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus.index import HashtagIndex
from .corpus.records import TweetRecord
from .errors import ConfigError, DataError

_ENUM_CAP = 100_000          # below this, candidate spaces are enumerated exactly
_REJECT_FACTOR = 60          # attempt multiplier for rejection sampling


class PairLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class TrainingPair:
    id_a: int
    id_b: int
    label: PairLabel

    def __post_init__(self) -> None:
        if self.id_a == self.id_b:
            raise DataError(f"training pair with identical ids {self.id_a}")


@dataclass(frozen=True)
class PairConfig:
    max_examples: int = 2_500_000
    seed: int = 0
    window_years: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.max_examples <= 0 or self.max_examples % 2 != 0:
            raise ConfigError("max_examples must be a positive even number")
        if self.window_years is not None:
            start, end = self.window_years
            if start > end:
                raise ConfigError("window_years start must not exceed end")


def _stream(seed: int, label: str, hashtag: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{label}:{hashtag}".encode(), digest_size=8).digest()
    key = np.array([seed, int.from_bytes(digest, "little")], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _decode_pair(k: int, n: int) -> tuple[int, int]:
    """k-th unordered index pair of n items in row-major (i<j) order."""
    lo, hi = 0, n - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid * (n - 1) - mid * (mid - 1) // 2 <= k:
            lo = mid
        else:
            hi = mid - 1
    offset = lo * (n - 1) - lo * (lo - 1) // 2
    return lo, lo + 1 + (k - offset)


def _draw_new(rng: np.random.Generator, cap: int, want: int, taken: set[int]) -> list[int]:
    """Up to `want` indices from [0, cap) not in `taken`; marks them taken."""
    want = min(want, cap - len(taken))
    if want <= 0:
        return []
    if cap <= _ENUM_CAP:
        remaining = [v for v in range(cap) if v not in taken]
        picks = rng.choice(len(remaining), size=want, replace=False)
        chosen = [remaining[int(i)] for i in picks]
    else:
        chosen = []
        attempts = 0
        budget = _REJECT_FACTOR * want + 100
        while len(chosen) < want and attempts < budget:
            batch = rng.integers(0, cap, size=want - len(chosen) + 16)
            attempts += len(batch)
            for v in batch.tolist():
                if v not in taken:
                    taken.add(v)
                    chosen.append(v)
                    if len(chosen) == want:
                        break
        return chosen
    taken.update(chosen)
    return chosen


def _allocate(weights: dict[str, int], total: int, spare: dict[str, int]) -> dict[str, int]:
    """Largest-remainder proportional split of `total`, capped by spare capacity."""
    alloc = {h: 0 for h in weights}
    remaining = min(total, sum(spare.values()))
    while remaining > 0:
        open_keys = [h for h in sorted(weights) if spare[h] - alloc[h] > 0]
        if not open_keys:
            break
        wsum = sum(weights[h] for h in open_keys)
        fractions = []
        given = 0
        for h in open_keys:
            exact = remaining * weights[h] / wsum
            take = min(int(exact), spare[h] - alloc[h])
            alloc[h] += take
            given += take
            fractions.append((-(exact - int(exact)), h))
        leftover = remaining - given
        fractions.sort()
        for _, h in fractions:
            if leftover == 0:
                break
            if spare[h] - alloc[h] > 0:
                alloc[h] += 1
                leftover -= 1
        if remaining - leftover == 0:
            break
        remaining = leftover
    return alloc


def _in_window(tweet: TweetRecord, window: tuple[int, int] | None) -> bool:
    return window is None or window[0] <= tweet.timestamp.year <= window[1]


def sample_pairs(
    tweets: Sequence[TweetRecord],
    index: HashtagIndex,
    hashtags: Iterable[str],
    cfg: PairConfig,
) -> list[TrainingPair]:
    """Sample a balanced set of at most cfg.max_examples pairs.

    Emits min(cfg.max_examples, available) pairs where available is twice the
    smaller of the two labels' attainable counts. Within a label no unordered
    pair repeats; output is sorted by (hashtag, id_a, id_b) and byte-stable
    for a given seed.
    """
    by_id = {t.id: t for t in tweets}
    eligible = {t.id for t in tweets if _in_window(t, cfg.window_years)}
    if len(eligible) < 2:
        raise DataError("need at least 2 tweets in the sampling window")
    tagsets = {i: by_id[i].hashtags for i in eligible}

    members: dict[str, list[int]] = {}
    pos_cap: dict[str, int] = {}
    for h in sorted(set(hashtags)):
        ids = [i for i in index.postings.get(h, ()) if i in eligible]
        if len(ids) >= 2:
            members[h] = ids
            pos_cap[h] = len(ids) * (len(ids) - 1) // 2
    if not members:
        raise DataError("no eligible hashtag with at least 2 tweets in the window")

    target = cfg.max_examples // 2
    all_ids = sorted(eligible)

    positives = _sample_positives(members, pos_cap, target, cfg.seed)
    negatives = _sample_negatives(
        members, pos_cap, tagsets, all_ids, min(target, len(positives)), cfg.seed
    )

    keep = min(len(positives), len(negatives), target)
    positives.sort()
    negatives.sort()
    merged = [
        TrainingPair(a, b, PairLabel.POSITIVE) for (_, a, b) in positives[:keep]
    ] + [
        TrainingPair(a, b, PairLabel.NEGATIVE) for (_, a, b) in negatives[:keep]
    ]
    return merged


def _sample_positives(
    members: dict[str, list[int]],
    pos_cap: dict[str, int],
    target: int,
    seed: int,
) -> list[tuple[str, int, int]]:
    rngs = {h: _stream(seed, "positive", h) for h in members}
    taken: dict[str, set[int]] = {h: set() for h in members}
    seen: set[tuple[int, int]] = set()
    out: list[tuple[str, int, int]] = []
    need = target
    while need > 0:
        spare = {h: pos_cap[h] - len(taken[h]) for h in members}
        if sum(spare.values()) == 0:
            break
        quotas = _allocate(pos_cap, need, spare)
        drew_any = False
        for h in sorted(members):
            if quotas[h] == 0:
                continue
            ids = members[h]
            for k in _draw_new(rngs[h], pos_cap[h], quotas[h], taken[h]):
                drew_any = True
                i, j = _decode_pair(k, len(ids))
                key = (min(ids[i], ids[j]), max(ids[i], ids[j]))
                if key not in seen:
                    seen.add(key)
                    out.append((h, key[0], key[1]))
                    need -= 1
        if not drew_any:
            break
    return out


def _sample_negatives(
    members: dict[str, list[int]],
    weights: dict[str, int],
    tagsets: dict[int, frozenset[str]],
    all_ids: list[int],
    target: int,
    seed: int,
) -> list[tuple[str, int, int]]:
    rngs = {h: _stream(seed, "negative", h) for h in members}
    seen: set[tuple[int, int]] = set()
    out: list[tuple[str, int, int]] = []
    stalled: set[str] = set()
    # For small candidate spaces the disjoint cross-product is enumerated
    # exactly; large ones fall back to bounded rejection sampling.
    enum_pool: dict[str, list[tuple[int, int]]] = {}
    for h, ids in members.items():
        if len(ids) * len(all_ids) <= _ENUM_CAP:
            pool = []
            for a in ids:
                for b in all_ids:
                    if a != b and not (tagsets[a] & tagsets[b]):
                        pool.append((min(a, b), max(a, b)))
            enum_pool[h] = sorted(set(pool))

    need = target
    while need > 0:
        open_hs = {
            h: (len(enum_pool[h]) if h in enum_pool else weights[h])
            for h in members
            if h not in stalled
        }
        open_hs = {h: w for h, w in open_hs.items() if w > 0}
        if not open_hs:
            break
        quotas = _allocate(
            {h: weights[h] for h in open_hs},
            need,
            {h: need for h in open_hs},
        )
        for h in sorted(open_hs):
            if quotas[h] == 0 or need <= 0:
                continue
            got = 0
            if h in enum_pool:
                fresh = [p for p in enum_pool[h] if p not in seen]
                if not fresh:
                    stalled.add(h)
                    continue
                picks = rngs[h].choice(len(fresh), size=min(quotas[h], len(fresh)), replace=False)
                for idx in picks.tolist():
                    key = fresh[idx]
                    seen.add(key)
                    out.append((h, key[0], key[1]))
                    need -= 1
                    got += 1
            else:
                ids = members[h]
                attempts = 0
                budget = _REJECT_FACTOR * quotas[h] + 100
                while got < quotas[h] and attempts < budget:
                    attempts += 1
                    a = ids[int(rngs[h].integers(0, len(ids)))]
                    b = all_ids[int(rngs[h].integers(0, len(all_ids)))]
                    if a == b or (tagsets[a] & tagsets[b]):
                        continue
                    key = (min(a, b), max(a, b))
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append((h, key[0], key[1]))
                    need -= 1
                    got += 1
                if got == 0:
                    stalled.add(h)
            if got == 0 and h in enum_pool:
                stalled.add(h)
    return out


def write_pairs(
    pairs: Iterable[TrainingPair],
    texts: Mapping[int, str],
    path: str | Path,
) -> None:
    """CSV `text_a,text_b,label` with RFC-4180 quoting; label 1=positive.

    Order of `pairs` is preserved. Missing or empty text raises naming the id.
    """
    def text_for(tweet_id: int) -> str:
        text = texts.get(tweet_id)
        if not text:
            raise DataError(f"no text available for tweet id {tweet_id}")
        return text

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["text_a", "text_b", "label"])
        for pair in pairs:
            w.writerow(
                [
                    text_for(pair.id_a),
                    text_for(pair.id_b),
                    1 if pair.label is PairLabel.POSITIVE else 0,
                ]
            )
