"""Experiment harness: full evaluation, random subsampling, temporal and
group-based sampling, politician centroid export, and a synthetic-corpus
generator used by the test suite.

Every run is a pure function of (corpus, store, config, seed). Failed runs
(e.g. a small slice with no cross-party hashtag) are recorded as first-class
report entries rather than crashing the experiment.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus.embeddings import EmbeddingStore
from .corpus.filters import CorpusFilter, Group, apply_filter
from .corpus.index import build_index, eval_hashtags
from .corpus.records import Candidacy, TweetRecord
from .distances import DistanceMatrix, TopicSlice, aggregate_topics, average_baseline
from .errors import ConfigError, DataError
from .mantel import MantelResult, Tail, mantel_test
from ._parallel import parallel_chunks


@dataclass
class RunRecord:
    config_summary: str
    n_tweets: int
    n_hashtags: int
    mantel: MantelResult | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "config_summary": self.config_summary,
            "n_tweets": self.n_tweets,
            "n_hashtags": self.n_hashtags,
            "mantel": self.mantel.to_dict() if self.mantel else None,
            "error": self.error,
            "extra": self.extra,
        }


@dataclass
class ExperimentReport:
    name: str
    runs: list[RunRecord]
    seed_set: list[int]
    aggregates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed_set": self.seed_set,
            "runs": [r.to_dict() for r in self.runs],
            "aggregates": self.aggregates,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def csv_rows(self) -> list[list]:
        rows = [["experiment", "config", "n_tweets", "n_hashtags", "r", "p", "error"]]
        for run in self.runs:
            rows.append(
                [
                    self.name,
                    run.config_summary,
                    run.n_tweets,
                    run.n_hashtags,
                    format(run.mantel.r, ".9g") if run.mantel else "",
                    format(run.mantel.p_value, ".9g") if run.mantel else "",
                    run.error or "",
                ]
            )
        return rows

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerows(self.csv_rows())


@dataclass
class EvalOutcome:
    mantel: MantelResult
    n_tweets: int
    n_hashtags: int
    matrix: DistanceMatrix
    contributing_ids: list[int]
    party_counts: dict[str, int]


def year_bounds(year: int) -> tuple[datetime, datetime]:
    return (
        datetime(year, 1, 1, tzinfo=timezone.utc),
        datetime(year + 1, 1, 1, tzinfo=timezone.utc),
    )


def year_pool(tweets: Sequence[TweetRecord], year: int) -> list[TweetRecord]:
    """Tweets by candidates of `year`, timestamped within that year."""
    return apply_filter(list(tweets), CorpusFilter(year=year, date_range=year_bounds(year)))


def evaluate_tweets(
    pool: Sequence[TweetRecord],
    store: EmbeddingStore,
    reference: DistanceMatrix,
    year: int,
    permutations: int = 10_000,
    seed: int = 0,
    tail: Tail = Tail.GREATER,
    bruteforce: bool = False,
) -> EvalOutcome:
    """Hashtag-aggregated distances for one tweet sample, tested against the
    reference matrix. Eval hashtags are re-derived on the sample."""
    parties = list(reference.labels)
    index = build_index(list(pool), year)
    missing = [p for p in parties if p not in index.parties()]
    if missing:
        raise DataError(f"no tweets for parties: {', '.join(missing)}")
    shared = eval_hashtags(index, set(parties))
    if not shared:
        raise DataError("no hashtag present across all parties in this sample")

    slices = []
    contributing: set[int] = set()
    for h in sorted(shared):
        per_party: dict[str, list[int]] = {p: [] for p in parties}
        for tweet_id in index.postings[h]:
            party = index.party_of[tweet_id]
            if party in per_party:
                per_party[party].append(store.row_of(tweet_id))
                contributing.add(tweet_id)
        slices.append(TopicSlice(hashtag=h, per_party=per_party))

    matrix = aggregate_topics(slices, parties, store, bruteforce=bruteforce)
    result = mantel_test(
        matrix, reference, permutations=permutations, seed=seed, tail=tail
    )
    party_counts: dict[str, int] = {p: 0 for p in parties}
    for tweet_id in contributing:
        party_counts[index.party_of[tweet_id]] += 1
    return EvalOutcome(
        mantel=result,
        n_tweets=len(contributing),
        n_hashtags=len(shared),
        matrix=matrix,
        contributing_ids=sorted(contributing),
        party_counts=party_counts,
    )


def _failed_run(config: str, n_tweets: int, exc: Exception) -> RunRecord:
    return RunRecord(
        config_summary=config, n_tweets=n_tweets, n_hashtags=0, error=str(exc)
    )


def run_full(
    tweets: Sequence[TweetRecord],
    store: EmbeddingStore,
    reference: DistanceMatrix,
    year: int,
    permutations: int = 10_000,
    seed: int = 0,
    tail: Tail = Tail.GREATER,
    bruteforce: bool = False,
) -> ExperimentReport:
    """Full-dataset evaluation plus the plain-average baseline comparison."""
    pool = year_pool(tweets, year)
    outcome = evaluate_tweets(
        pool, store, reference, year,
        permutations=permutations, seed=seed, tail=tail, bruteforce=bruteforce,
    )
    runs = [
        RunRecord(
            config_summary=f"year={year} method=topic-aggregation",
            n_tweets=outcome.n_tweets,
            n_hashtags=outcome.n_hashtags,
            mantel=outcome.mantel,
            extra={
                "matrix": {
                    "labels": outcome.matrix.labels,
                    "values": outcome.matrix.values.tolist(),
                },
                "party_counts": outcome.party_counts,
            },
        )
    ]

    index = build_index(pool, year)
    contributing = set(outcome.contributing_ids)
    party_sets: dict[str, list[int]] = {p: [] for p in reference.labels}
    for tweet_id in sorted(contributing):
        party = index.party_of[tweet_id]
        if party in party_sets:
            party_sets[party].append(store.row_of(tweet_id))
    try:
        baseline = average_baseline(party_sets, store, parties=list(reference.labels))
        baseline_mantel = mantel_test(
            baseline, reference, permutations=permutations, seed=seed, tail=tail
        )
        runs.append(
            RunRecord(
                config_summary=f"year={year} method=average-baseline",
                n_tweets=outcome.n_tweets,
                n_hashtags=outcome.n_hashtags,
                mantel=baseline_mantel,
                extra={
                    "matrix": {
                        "labels": baseline.labels,
                        "values": baseline.values.tolist(),
                    }
                },
            )
        )
    except DataError as exc:
        runs.append(_failed_run(f"year={year} method=average-baseline", outcome.n_tweets, exc))
    return ExperimentReport(name="full", runs=runs, seed_set=[seed])


def _subsample_stream(seed: int, fraction: float) -> np.random.Generator:
    digest = hashlib.blake2b(f"subsample:{fraction:.6f}".encode(), digest_size=8).digest()
    key = np.array([seed, int.from_bytes(digest, "little")], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


DEFAULT_FRACTIONS = (0.875, 0.75, 0.625, 0.5, 0.375, 0.25, 0.125)


def run_subsample(
    tweets: Sequence[TweetRecord],
    store: EmbeddingStore,
    reference: DistanceMatrix,
    year: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seeds: Sequence[int] = (1, 2, 3, 4, 5),
    permutations: int = 10_000,
    tail: Tail = Tail.GREATER,
    threads: int = 1,
) -> ExperimentReport:
    """Uniform tweet subsampling at the given fractions, several seeds each.

    The sampling pool is the full-year evaluation tweet set (tweets carrying
    at least one cross-party hashtag); each sample re-derives its own eval
    hashtag set.
    """
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise ConfigError(f"fraction {f} outside (0, 1]")
    pool = year_pool(tweets, year)
    full = evaluate_tweets(
        pool, store, reference, year,
        permutations=permutations, seed=seeds[0], tail=tail,
    )
    eligible = full.contributing_ids
    by_id = {t.id: t for t in pool}

    def one_run(task: tuple[float, int]) -> RunRecord:
        fraction, run_seed = task
        rng = _subsample_stream(run_seed, fraction)
        k = round(fraction * len(eligible))
        picks = rng.choice(len(eligible), size=k, replace=False)
        sample = [by_id[eligible[int(i)]] for i in sorted(picks.tolist())]
        config = f"year={year} fraction={fraction} seed={run_seed}"
        try:
            outcome = evaluate_tweets(
                sample, store, reference, year,
                permutations=permutations, seed=run_seed, tail=tail,
            )
        except DataError as exc:
            return _failed_run(config, len(sample), exc)
        return RunRecord(
            config_summary=config,
            n_tweets=outcome.n_tweets,
            n_hashtags=outcome.n_hashtags,
            mantel=outcome.mantel,
            extra={"sample_size": len(sample), "party_counts": outcome.party_counts},
        )

    tasks = [(f, s) for f in fractions for s in seeds]
    runs = parallel_chunks(one_run, tasks, threads)

    aggregates: dict[str, dict] = {}
    for fraction in fractions:
        rs = [
            run.mantel.r
            for run, task in zip(runs, tasks)
            if task[0] == fraction and run.ok
        ]
        aggregates[f"{fraction}"] = {
            "mean_r": float(np.mean(rs)) if rs else None,
            "std_r": float(np.std(rs)) if rs else None,
            "n_ok": len(rs),
            "n_failed": sum(
                1 for run, task in zip(runs, tasks) if task[0] == fraction and not run.ok
            ),
        }
    aggregates["full"] = {"r": full.mantel.r, "n_tweets": full.n_tweets}
    return ExperimentReport(
        name="subsample", runs=runs, seed_set=list(seeds), aggregates=aggregates
    )


def standard_windows(year: int) -> list[tuple[str, datetime, datetime]]:
    """Election-run-up windows ending Oct 1 (September election month)."""
    oct1 = datetime(year, 10, 1, tzinfo=timezone.utc)
    return [
        ("Jan-Sep", datetime(year, 1, 1, tzinfo=timezone.utc), oct1),
        ("Mar-Sep", datetime(year, 3, 1, tzinfo=timezone.utc), oct1),
        ("Jun-Sep", datetime(year, 6, 1, tzinfo=timezone.utc), oct1),
    ]


def month_windows(year: int) -> list[tuple[str, datetime, datetime]]:
    out = []
    for month in range(1, 10):
        start = datetime(year, month, 1, tzinfo=timezone.utc)
        end = datetime(year, month + 1, 1, tzinfo=timezone.utc)
        out.append((start.strftime("%b"), start, end))
    return out


def run_temporal(
    tweets: Sequence[TweetRecord],
    store: EmbeddingStore,
    reference: DistanceMatrix,
    year: int,
    mode: str = "windows",
    windows: Sequence[tuple[str, datetime, datetime]] | None = None,
    permutations: int = 10_000,
    seed: int = 0,
    tail: Tail = Tail.GREATER,
) -> ExperimentReport:
    """Evaluate restricted time spans: run-up windows or individual months.

    Window boundaries are [start, end) in UTC.
    """
    if windows is None:
        if mode == "windows":
            windows = standard_windows(year)
        elif mode == "months":
            windows = month_windows(year)
        else:
            raise ConfigError(f"unknown temporal mode {mode!r}")
    pool = year_pool(tweets, year)
    runs = []
    for label, start, end in windows:
        subset = apply_filter(pool, CorpusFilter(date_range=(start, end)))
        config = f"year={year} window={label}"
        try:
            outcome = evaluate_tweets(
                subset, store, reference, year,
                permutations=permutations, seed=seed, tail=tail,
            )
        except DataError as exc:
            runs.append(_failed_run(config, len(subset), exc))
            continue
        runs.append(
            RunRecord(
                config_summary=config,
                n_tweets=outcome.n_tweets,
                n_hashtags=outcome.n_hashtags,
                mantel=outcome.mantel,
                extra={"window": [label, start.isoformat(), end.isoformat()]},
            )
        )
    return ExperimentReport(name=f"temporal-{mode}", runs=runs, seed_set=[seed])


def run_groups(
    tweets: Sequence[TweetRecord],
    store: EmbeddingStore,
    reference: DistanceMatrix,
    year: int,
    permutations: int = 10_000,
    seed: int = 0,
    tail: Tail = Tail.GREATER,
) -> ExperimentReport:
    """Evaluate newly elected, re-elected incumbent, not re-elected incumbent,
    and all candidates of the year."""
    pool = year_pool(tweets, year)
    runs = []
    for group in (Group.NEW, Group.CONTINUING, Group.OLD, Group.ALL):
        subset = apply_filter(pool, CorpusFilter(year=year, group=group))
        config = f"year={year} group={group.value}"
        try:
            outcome = evaluate_tweets(
                subset, store, reference, year,
                permutations=permutations, seed=seed, tail=tail,
            )
        except DataError as exc:
            runs.append(_failed_run(config, len(subset), exc))
            continue
        runs.append(
            RunRecord(
                config_summary=config,
                n_tweets=outcome.n_tweets,
                n_hashtags=outcome.n_hashtags,
                mantel=outcome.mantel,
                extra={"party_counts": outcome.party_counts},
            )
        )
    return ExperimentReport(name="groups", runs=runs, seed_set=[seed])


def export_centroids(
    tweets: Sequence[TweetRecord],
    store: EmbeddingStore,
    year: int,
    path: str | Path,
) -> int:
    """CSV of per-politician tweet centroids (mean of unit rows) for `year`.

    Returns the number of exported politicians. Candidates of the year with
    no in-year tweet are skipped and counted in a footer comment.
    """
    pool = year_pool(tweets, year)
    candidates: dict[str, str] = {}
    for t in tweets:
        cand = t.candidacy_for(year)
        if cand is not None:
            candidates.setdefault(t.author_id, cand.party)
    rows_by_author: dict[str, list[int]] = {}
    for t in pool:
        rows_by_author.setdefault(t.author_id, []).append(store.row_of(t.id))

    unit = store.unit_matrix()
    exported = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["author_id", "party", "n_tweets", *(f"c{i}" for i in range(store.dim))])
        for author in sorted(rows_by_author):
            rows = sorted(rows_by_author[author])
            centroid = unit[rows].mean(axis=0)
            w.writerow(
                [author, candidates.get(author, ""), len(rows)]
                + [format(v, ".9g") for v in centroid]
            )
            exported += 1
        skipped = len(set(candidates) - set(rows_by_author))
        f.write(f"# skipped politicians with no tweets in {year}: {skipped}\n")
    return exported


def generate_synthetic(
    n_parties: int = 6,
    n_politicians: int = 30,
    n_tweets: int = 200,
    dim: int = 32,
    separation: float = 5.0,
    seed: int = 0,
    year: int = 2021,
    topic_pool: int = 24,
) -> tuple[list[TweetRecord], EmbeddingStore, DistanceMatrix]:
    """Planted-geometry corpus for end-to-end checks.

    Party mean vectors sit at `separation` times random unit directions;
    tweet embeddings are unit-normalized Gaussian perturbations (scale 1) of
    their party mean. Hashtags come from a shared topic pool assigned
    independently of party (each party cycles through all topics, so every
    hashtag spans all parties); the ideological signal lives only in the
    embeddings. Ground truth is the Euclidean distance between party means.
    """
    if separation < 0:
        raise DataError("separation must be non-negative")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0x53594E], dtype=np.uint64)))
    parties = [f"P{i:02d}" for i in range(n_parties)]
    directions = rng.standard_normal((n_parties, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = separation * directions
    diff = means[:, None, :] - means[None, :, :]
    truth_values = np.sqrt(np.sum(diff * diff, axis=2))
    truth_values = (truth_values + truth_values.T) / 2.0
    np.fill_diagonal(truth_values, 0.0)
    truth = DistanceMatrix(parties, truth_values)

    per_party = n_politicians * n_tweets
    topics = [f"topic{k:02d}" for k in range(topic_pool)]
    tweets: list[TweetRecord] = []
    ids = []
    vectors = np.empty((n_parties * per_party, dim), dtype=np.float32)
    tweet_id = 0
    for p_idx, party in enumerate(parties):
        noise = rng.standard_normal((per_party, dim))
        raw = means[p_idx][None, :] + noise
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        months = rng.integers(1, 10, size=per_party)
        days = rng.integers(1, 29, size=per_party)
        hours = rng.integers(0, 24, size=per_party)
        n_extra = rng.integers(0, 3, size=per_party)
        extra_tags = rng.integers(0, topic_pool, size=(per_party, 2))
        for j in range(n_politicians):
            author = f"{party}-pol{j:03d}"
            flags = [(True, False), (True, True), (False, True)][j % 3]
            cand = Candidacy(year=year, party=party, elected=flags[0], incumbent=flags[1])
            for k in range(n_tweets):
                serial = j * n_tweets + k
                tags = {topics[serial % topic_pool]}
                tags.update(topics[int(t)] for t in extra_tags[serial, : int(n_extra[serial])])
                tweet_id += 1
                ts = datetime(
                    year, int(months[serial]), int(days[serial]), int(hours[serial]),
                    tzinfo=timezone.utc,
                )
                text = f"synthetic post {tweet_id} " + " ".join(
                    f"#{t}" for t in sorted(tags)
                )
                tweets.append(
                    TweetRecord(
                        id=tweet_id,
                        text=text,
                        author_id=author,
                        timestamp=ts,
                        hashtags=frozenset(tags),
                        candidacies=(cand,),
                    )
                )
                ids.append(tweet_id)
                vectors[tweet_id - 1] = raw[serial]
    store = EmbeddingStore(dim=dim, ids=np.array(ids, dtype=np.uint64), vectors=vectors)
    return tweets, store, truth
