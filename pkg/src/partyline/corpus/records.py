"""Tweet records: parsing line-delimited JSON, hashtag normalization, timestamps."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

from ..errors import DataError

# '#' followed by one or more word characters (Unicode letters, digits,
# underscore). Trailing punctuation is excluded by construction.
_HASHTAG_RE = re.compile(r"#(\w+)", re.UNICODE)


def extract_hashtags(text: str) -> set[str]:
    """Extract the set of normalized hashtags from a text.

    Tokens are case-folded with '#' stripped; duplicates collapse. Diacritics
    are kept (folding them would merge distinct German words).
    """
    return {m.group(1).casefold() for m in _HASHTAG_RE.finditer(text)}


def normalize_hashtag(tag: str) -> str:
    """Normalize a single hashtag: strip one leading '#', case-fold.

    Raises DataError if the result is empty or contains whitespace.
    """
    cleaned = tag[1:] if tag.startswith("#") else tag
    cleaned = cleaned.casefold()
    if not cleaned or any(c.isspace() for c in cleaned):
        raise DataError(f"invalid hashtag {tag!r}")
    return cleaned


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 instant into an aware UTC datetime."""
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"bad timestamp {value!r}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Render an aware datetime as a Z-suffixed UTC ISO-8601 string."""
    dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return dt.isoformat() + "Z"


@dataclass(frozen=True)
class Candidacy:
    year: int
    party: str
    elected: bool = False
    incumbent: bool = False

    def __post_init__(self) -> None:
        if not (1000 <= self.year <= 9999):
            raise DataError(f"candidacy year must be four digits, got {self.year}")


@dataclass(frozen=True)
class TweetRecord:
    """One post with author, timestamps, normalized hashtags and candidacy metadata."""

    id: int
    text: str
    author_id: str
    timestamp: datetime
    hashtags: frozenset[str] = field(default_factory=frozenset)
    candidacies: tuple[Candidacy, ...] = ()

    def candidacy_for(self, year: int) -> Candidacy | None:
        """First candidacy matching `year`, or None."""
        for c in self.candidacies:
            if c.year == year:
                return c
        return None

    def party_for(self, year: int) -> str | None:
        c = self.candidacy_for(year)
        return c.party if c is not None else None


def _require(obj: dict, key: str, lineno: int):
    if key not in obj:
        raise DataError(f"line {lineno}: missing required field {key!r}")
    return obj[key]


def _record_from_json(obj: dict, lineno: int) -> TweetRecord:
    tweet_id = _require(obj, "id", lineno)
    if isinstance(tweet_id, bool) or not isinstance(tweet_id, int) or tweet_id < 0:
        raise DataError(f"line {lineno}: id must be an unsigned integer, got {tweet_id!r}")
    author = _require(obj, "author_id", lineno)
    if not isinstance(author, str):
        raise DataError(f"line {lineno}: author_id must be a string")
    try:
        ts = parse_timestamp(_require(obj, "timestamp", lineno))
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from None

    text = obj.get("text", "")
    if "hashtags" in obj:
        if not isinstance(obj["hashtags"], list):
            raise DataError(f"line {lineno}: hashtags must be a list")
        try:
            tags = frozenset(normalize_hashtag(t) for t in obj["hashtags"])
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    else:
        tags = frozenset(extract_hashtags(text))

    cands = []
    for c in obj.get("candidacies", []) or []:
        if "year" not in c or "party" not in c:
            raise DataError(f"line {lineno}: candidacy needs year and party")
        try:
            cands.append(
                Candidacy(
                    year=int(c["year"]),
                    party=str(c["party"]),
                    elected=bool(c.get("elected", False)),
                    incumbent=bool(c.get("incumbent", False)),
                )
            )
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return TweetRecord(
        id=tweet_id,
        text=text,
        author_id=author,
        timestamp=ts,
        hashtags=tags,
        candidacies=tuple(cands),
    )


def iter_tweets(lines: Iterable[str] | IO[str]) -> Iterator[TweetRecord]:
    """Stream TweetRecords out of line-delimited JSON, in input order.

    Raises DataError naming the 1-based line number for malformed JSON,
    missing required fields, and duplicate ids.
    """
    seen: set[int] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: malformed JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise DataError(f"line {lineno}: expected a JSON object")
        rec = _record_from_json(obj, lineno)
        if rec.id in seen:
            raise DataError(f"line {lineno}: duplicate tweet id {rec.id}")
        seen.add(rec.id)
        yield rec


def parse_tweets(lines: Iterable[str] | IO[str]) -> list[TweetRecord]:
    """Parse a whole line-delimited JSON stream into a list of records."""
    return list(iter_tweets(lines))


def tweet_to_json(rec: TweetRecord) -> str:
    """Serialize one record back to its JSONL form."""
    obj = {
        "id": rec.id,
        "text": rec.text,
        "author_id": rec.author_id,
        "timestamp": format_timestamp(rec.timestamp),
        "hashtags": sorted(rec.hashtags),
        "candidacies": [
            {"year": c.year, "party": c.party, "elected": c.elected, "incumbent": c.incumbent}
            for c in rec.candidacies
        ],
    }
    return json.dumps(obj, ensure_ascii=False)
