"""Candidate, temporal and group filters over tweet lists."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from ..errors import ConfigError
from .records import Candidacy, TweetRecord


class Group(str, Enum):
    """Politician group by election outcome for the analysis year."""

    NEW = "new"              # elected, not incumbent
    CONTINUING = "continuing"  # elected, incumbent
    OLD = "old"              # not elected, incumbent
    ALL = "all"


def _matches_group(cand: Candidacy, group: Group) -> bool:
    if group is Group.NEW:
        return cand.elected and not cand.incumbent
    if group is Group.CONTINUING:
        return cand.elected and cand.incumbent
    if group is Group.OLD:
        return (not cand.elected) and cand.incumbent
    return True


@dataclass(frozen=True)
class CorpusFilter:
    """Conjunction of optional criteria; empty filter is the identity."""

    year: int | None = None
    party_set: frozenset[str] | None = None
    date_range: tuple[datetime, datetime] | None = None  # [start, end) UTC
    group: Group | None = None
    require_hashtag: bool = False

    def __post_init__(self) -> None:
        if self.date_range is not None:
            start, end = self.date_range
            if not start < end:
                raise ConfigError("date_range start must be before end")
        if self.group is not None and self.group is not Group.ALL and self.year is None:
            raise ConfigError(f"group filter {self.group.value!r} requires a year")

    def keeps(self, tweet: TweetRecord) -> bool:
        cand = tweet.candidacy_for(self.year) if self.year is not None else None
        if self.year is not None and cand is None:
            return False
        if self.party_set is not None:
            if cand is not None:
                if cand.party not in self.party_set:
                    return False
            elif not any(c.party in self.party_set for c in tweet.candidacies):
                return False
        if self.date_range is not None:
            start, end = self.date_range
            if not (start <= tweet.timestamp < end):
                return False
        if self.group is not None and cand is not None:
            if not _matches_group(cand, self.group):
                return False
        if self.require_hashtag and not tweet.hashtags:
            return False
        return True


def apply_filter(tweets: list[TweetRecord], flt: CorpusFilter) -> list[TweetRecord]:
    """Keep tweets satisfying all present criteria, preserving order.

    Idempotent: applying the same filter twice equals applying it once.
    """
    return [t for t in tweets if flt.keeps(t)]
