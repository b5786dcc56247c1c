"""Inverted hashtag index with per-party coverage counts."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError
from .records import TweetRecord


@dataclass
class HashtagIndex:
    """hashtag -> sorted tweet ids, plus per-(hashtag, party) counts.

    Immutable after build_index; `party_of` maps every indexed tweet id to the
    party of its candidacy for the index year.
    """

    year: int
    postings: dict[str, list[int]] = field(default_factory=dict)
    party_coverage: dict[str, dict[str, int]] = field(default_factory=dict)
    party_of: dict[int, str] = field(default_factory=dict)

    def parties(self) -> set[str]:
        return set(self.party_of.values())


def build_index(tweets: list[TweetRecord], year: int) -> HashtagIndex:
    """Index tweets whose author has a candidacy for `year`; others are excluded."""
    postings: dict[str, list[int]] = {}
    coverage: dict[str, dict[str, int]] = {}
    party_of: dict[int, str] = {}
    for t in tweets:
        cand = t.candidacy_for(year)
        if cand is None:
            continue
        party_of[t.id] = cand.party
        for h in t.hashtags:
            postings.setdefault(h, []).append(t.id)
            per_party = coverage.setdefault(h, {})
            per_party[cand.party] = per_party.get(cand.party, 0) + 1
    for ids in postings.values():
        ids.sort()
    return HashtagIndex(year=year, postings=postings, party_coverage=coverage, party_of=party_of)


def eval_hashtags(index: HashtagIndex, parties: set[str]) -> set[str]:
    """Hashtags used at least once by every party in `parties`.

    Recomputed per experiment subset: coverage is a property of the sample,
    not of the full corpus.
    """
    if not parties:
        raise ConfigError("parties must be nonempty")
    return {
        h
        for h, cov in index.party_coverage.items()
        if all(cov.get(p, 0) >= 1 for p in parties)
    }


def training_hashtags(index: HashtagIndex, min_parties: int = 3, min_total: int = 50) -> set[str]:
    """Hashtags spanning at least `min_parties` parties and used at least
    `min_total` times across parties."""
    return {
        h
        for h, cov in index.party_coverage.items()
        if len(cov) >= min_parties and len(index.postings[h]) >= min_total
    }
