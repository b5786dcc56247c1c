from datetime import datetime, timezone

import numpy as np
import pytest

from partyline.corpus import Candidacy, EmbeddingStore, TweetRecord


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Expose each phase's report to fixtures (acceptance pass/fail lines)."""
    outcome = yield
    report = outcome.get_result()
    setattr(item, "rep_" + report.when, report)


ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for number, status, description in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(f"[ACCEPTANCE {number}] {status} - {description}")


def make_store(vectors, ids=None) -> EmbeddingStore:
    vectors = np.asarray(vectors, dtype=np.float32)
    if ids is None:
        ids = np.arange(1, len(vectors) + 1, dtype=np.uint64)
    return EmbeddingStore(dim=vectors.shape[1], ids=np.asarray(ids, dtype=np.uint64), vectors=vectors)


def make_tweet(
    tweet_id,
    hashtags=(),
    party=None,
    year=2021,
    author=None,
    text=None,
    timestamp=None,
    elected=True,
    incumbent=False,
):
    cands = ()
    if party is not None:
        cands = (Candidacy(year=year, party=party, elected=elected, incumbent=incumbent),)
    return TweetRecord(
        id=tweet_id,
        text=text if text is not None else f"post {tweet_id} " + " ".join(f"#{h}" for h in hashtags),
        author_id=author or f"author{tweet_id}",
        timestamp=timestamp or datetime(year, 5, 10, 12, tzinfo=timezone.utc),
        hashtags=frozenset(hashtags),
        candidacies=cands,
    )


@pytest.fixture(scope="session")
def synthetic_corpus():
    """Acceptance-scale planted-geometry corpus, built once per session."""
    from partyline.experiments import generate_synthetic

    return generate_synthetic(
        n_parties=6, n_politicians=30, n_tweets=200, dim=32, separation=5.0, seed=42
    )
