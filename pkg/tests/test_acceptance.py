"""Acceptance suite: every criterion runs at its stated tolerance and prints
one PASS/FAIL line (run with `pytest tests/test_acceptance.py -v`)."""

import itertools
import math
import time
from datetime import datetime, timezone

import numpy as np
import pytest
from scipy import stats as scipy_stats

import conftest

from partyline.corpus import build_index
from partyline.distances import (
    DistanceMatrix,
    topic_distance_bruteforce,
    topic_distance_fast,
    twin_distance,
)
from partyline.errors import DegenerateCorpusError
from partyline.experiments import (
    generate_synthetic,
    run_full,
    run_groups,
    run_subsample,
    run_temporal,
)
from partyline.groundtruth import CMPVector, build_cmp_vectors, cmp_distance_matrix
from partyline.mantel import Tail, mantel_test, upper_triangle
from partyline.pairgen import PairConfig, PairLabel, sample_pairs, write_pairs

from conftest import make_store, make_tweet

SQ2 = math.sqrt(2.0) / 2.0


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    yield
    report = getattr(request.node, "rep_call", None)
    status = "PASS" if report is not None and report.passed else "FAIL"
    number, description = marker.args
    conftest.ACCEPTANCE_RESULTS.append((number, status, description))


@pytest.fixture(scope="module")
def low_separation_corpus():
    return generate_synthetic(
        n_parties=6, n_politicians=30, n_tweets=200, dim=32, separation=0.1, seed=42
    )


@pytest.mark.criterion(1, "centroid identity matches brute force within 1e-9 (200 draws, <1s)")
def test_criterion_1_centroid_identity(criterion):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(200):
        dim = int(rng.integers(2, 65))
        pool = int(rng.integers(2, 120))
        store = make_store(rng.standard_normal((pool, dim)))
        n = int(rng.integers(1, min(51, pool)))
        m = int(rng.integers(1, min(51, pool)))
        ca = rng.choice(pool, size=n, replace=False).tolist()
        cb = rng.choice(pool, size=m, replace=False).tolist()
        fast = topic_distance_fast(ca, cb, store)
        brute = topic_distance_bruteforce(ca, cb, store)
        assert abs(fast - brute) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


def _random_matrix(n, rng, labels=None):
    raw = rng.random((n, n))
    values = (raw + raw.T) / 2
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(labels or [f"p{i}" for i in range(n)], values)


def _enumeration_oracle(a, b, tail):
    """Independent exhaustive oracle built on scipy's Pearson."""
    n = a.n
    iu = np.triu_indices(n, k=1)
    x = a.values[iu]
    observed = scipy_stats.pearsonr(x, b.values[iu]).statistic
    hits = 0
    for perm in itertools.permutations(range(n)):
        perm = list(perm)
        r = scipy_stats.pearsonr(x, b.values[np.ix_(perm, perm)][iu]).statistic
        if tail is Tail.GREATER:
            hits += r >= observed
        elif tail is Tail.LESS:
            hits += r <= observed
        else:
            hits += abs(r) >= abs(observed)
    return hits / math.factorial(n)


@pytest.mark.criterion(2, "mantel: r matches Pearson 1e-12; sampled vs exhaustive p; minimal p (<5s)")
def test_criterion_2_mantel_correctness(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(202)

    # (a) r equals the direct Pearson correlation of the upper triangles
    a = _random_matrix(7, rng)
    b = _random_matrix(7, rng)
    result = mantel_test(a, b, permutations=100, seed=0, exhaustive=False)
    direct = scipy_stats.pearsonr(upper_triangle(a), upper_triangle(b)).statistic
    assert abs(result.r - direct) <= 1e-12

    # (b) sampled p at 10,000 permutations vs exhaustive enumeration
    for n in (4, 5):
        a = _random_matrix(n, rng)
        b = _random_matrix(n, rng)
        exact = mantel_test(a, b, permutations=10_000, seed=0).p_value
        sampled = mantel_test(a, b, permutations=10_000, seed=33, exhaustive=False).p_value
        assert abs(sampled - exact) <= 0.02
    # exhaustive mode is exact against an independent enumeration for n <= 7
    for n in (4, 5, 6, 7):
        a = _random_matrix(n, rng)
        b = _random_matrix(n, rng)
        ours = mantel_test(a, b, permutations=math.factorial(n), exhaustive=True)
        assert ours.p_value == _enumeration_oracle(a, b, Tail.GREATER)

    # (c) identical matrices: r = 1 and the minimal achievable p
    m = _random_matrix(6, rng)
    identical = mantel_test(m, m, permutations=10_000, seed=1)
    assert identical.r == pytest.approx(1.0, abs=1e-12)
    assert identical.exhaustive and identical.p_value == 1.0 / 720.0
    # sampled minimal p needs n large enough that the identity permutation
    # is (with this frozen seed) never redrawn
    big = _random_matrix(10, rng)
    sampled = mantel_test(big, big, permutations=9_999, seed=1, exhaustive=False)
    assert sampled.r == pytest.approx(1.0, abs=1e-12)
    assert sampled.p_value == 1.0 / 10_000.0

    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


def _loop_twin_oracle(store, p1, p2):
    vectors = store.vectors.astype(np.float64)

    def cos(i, j):
        u, v = vectors[i], vectors[j]
        return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))

    def c_of(group):
        return max(
            cos(a, b)
            for ai, a in enumerate(group)
            for bi, b in enumerate(group)
            if ai != bi
        )

    if sorted(p1) == sorted(p2):
        return 0.0
    denom = c_of(p1) + c_of(p2)
    sim12 = math.fsum(max(cos(s, t) for t in p2) for s in p1) / (len(p1) * denom)
    sim21 = math.fsum(max(cos(s, t) for t in p1) for s in p2) / (len(p2) * denom)
    return 1.0 - (sim12 + sim21) / 2.0


@pytest.mark.criterion(3, "twin quasi-metric: zero on identity, symmetric, worked example, guard")
def test_criterion_3_twin_quasi_metric(criterion):
    # dist(P, P) = 0 exactly, any ordering
    rng = np.random.default_rng(303)
    store = make_store(rng.standard_normal((30, 8)))
    p = rng.choice(30, size=7, replace=False).tolist()
    assert twin_distance(p, list(reversed(p)), store) == 0.0

    # exact symmetry
    for _ in range(10):
        p1 = rng.choice(30, size=int(rng.integers(2, 10)), replace=False).tolist()
        p2 = rng.choice(30, size=int(rng.integers(2, 10)), replace=False).tolist()
        assert twin_distance(p1, p2, store) == twin_distance(p2, p1, store)

    # the worked example against an independent brute-force oracle
    worked = make_store([[1.0, 0.0], [SQ2, SQ2], [0.0, 1.0]])
    value = twin_distance([0, 1], [2, 1], worked)
    assert value == pytest.approx(0.39644661, abs=1e-6)
    assert value == pytest.approx(_loop_twin_oracle(worked, [0, 1], [2, 1]), abs=1e-9)

    # all-orthogonal parties: the normalizer is zero and must raise
    degenerate = make_store([[1, 0], [0, 1], [1, 0], [0, 1]])
    with pytest.raises(DegenerateCorpusError):
        twin_distance([0, 1], [2, 3], degenerate)


@pytest.mark.criterion(4, "synthetic end-to-end: sep 5 gives r>=0.9 p<0.05; sep 0.1 gives r<0.5 (<30s)")
def test_criterion_4_synthetic_end_to_end(criterion, synthetic_corpus, low_separation_corpus):
    start = time.perf_counter()
    tweets, store, truth = synthetic_corpus
    report = run_full(tweets, store, truth, 2021, seed=1)
    main = report.runs[0]
    assert main.ok
    assert main.mantel.r >= 0.9
    assert main.mantel.exhaustive and main.mantel.permutations == 720
    assert main.mantel.p_value < 0.05

    weak_tweets, weak_store, weak_truth = low_separation_corpus
    weak = run_full(weak_tweets, weak_store, weak_truth, 2021, seed=1)
    assert weak.runs[0].mantel.r < 0.5
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


@pytest.mark.criterion(5, "subsampling robustness: fraction 0.5 within 0.1 of full; std grows as samples shrink")
def test_criterion_5_subsample_robustness(criterion, synthetic_corpus):
    tweets, store, truth = synthetic_corpus
    report = run_subsample(
        tweets, store, truth, 2021,
        fractions=[0.875, 0.5, 0.125], seeds=[1, 2, 3, 4, 5],
    )
    full_r = report.aggregates["full"]["r"]
    half = report.aggregates["0.5"]
    assert half["n_ok"] == 5
    assert abs(half["mean_r"] - full_r) <= 0.1
    assert report.aggregates["0.125"]["std_r"] > report.aggregates["0.875"]["std_r"]


def _random_pair_corpus(rng, n_tweets=60, n_tags=6, n_parties=3):
    tweets = []
    for i in range(1, n_tweets + 1):
        k = int(rng.integers(0, 3))
        tags = rng.choice(n_tags, size=k, replace=False)
        tweets.append(
            make_tweet(
                i,
                [f"t{int(v)}" for v in tags],
                party=f"P{int(rng.integers(n_parties))}",
            )
        )
    return tweets


@pytest.mark.criterion(6, "pair generator: balanced, capped, label-correct, byte-identical reruns")
def test_criterion_6_pair_generator(criterion, tmp_path):
    for trial in range(10):
        rng = np.random.default_rng(600 + trial)
        tweets = _random_pair_corpus(rng)
        index = build_index(tweets, 2021)
        hashtags = {h for h, ids in index.postings.items() if len(ids) >= 2}
        if not hashtags:
            continue
        cap = int(rng.choice([6, 20, 100]))
        cfg = PairConfig(max_examples=cap, seed=trial)
        pairs = sample_pairs(tweets, index, hashtags, cfg)
        tags = {t.id: t.hashtags for t in tweets}
        pos = [p for p in pairs if p.label is PairLabel.POSITIVE]
        neg = [p for p in pairs if p.label is PairLabel.NEGATIVE]
        assert len(pos) == len(neg)
        assert len(pairs) <= cap
        assert all(tags[p.id_a] & tags[p.id_b] for p in pos)
        assert all(not (tags[p.id_a] & tags[p.id_b]) for p in neg)
        texts = {t.id: t.text for t in tweets}
        first, second = tmp_path / f"{trial}a.csv", tmp_path / f"{trial}b.csv"
        write_pairs(pairs, texts, first)
        write_pairs(sample_pairs(tweets, index, hashtags, cfg), texts, second)
        assert first.read_bytes() == second.read_bytes()


@pytest.mark.criterion(7, "ground truth: 3-4-5 exact, metric properties, scaling invariance 1e-12")
def test_criterion_7_ground_truth(criterion, tmp_path):
    matrix = cmp_distance_matrix(
        [CMPVector("a", {"101": 0.0, "102": 0.0}, 1), CMPVector("b", {"101": 3.0, "102": 4.0}, 1)]
    )
    assert matrix.entry("a", "b") == 5.0

    rng = np.random.default_rng(700)
    for _ in range(10):
        n = int(rng.integers(3, 8))
        cats = [str(c) for c in range(101, 101 + int(rng.integers(2, 10)))]
        vectors = [
            CMPVector(f"p{i}", {c: float(rng.random()) for c in cats}, 1)
            for i in range(n)
        ]
        values = cmp_distance_matrix(vectors).values
        np.testing.assert_array_equal(values, values.T)
        assert np.all(np.diag(values) == 0.0)
        for i, j, k in itertools.product(range(n), repeat=3):
            assert values[i, j] <= values[i, k] + values[k, j] + 1e-12

    base = tmp_path / "base.csv"
    scaled = tmp_path / "scaled.csv"
    base.write_text(
        "party,category,count\nX,101,4\nX,102,6\nX,__length__,10\n"
        "Y,101,1\nY,__length__,2\n",
        encoding="utf-8",
    )
    scaled.write_text(
        "party,category,count\nX,101,28\nX,102,42\nX,__length__,70\n"
        "Y,101,1\nY,__length__,2\n",
        encoding="utf-8",
    )
    m1 = cmp_distance_matrix(build_cmp_vectors(base))
    m2 = cmp_distance_matrix(build_cmp_vectors(scaled))
    assert np.max(np.abs(m1.values - m2.values)) <= 1e-12


@pytest.mark.criterion(8, "fraction 1.0, group all, full-year window reproduce run_full bit for bit")
def test_criterion_8_consistency(criterion, synthetic_corpus):
    tweets, store, truth = synthetic_corpus
    full_r = run_full(tweets, store, truth, 2021, seed=1).runs[0].mantel.r

    sub = run_subsample(tweets, store, truth, 2021, fractions=[1.0], seeds=[1])
    assert sub.runs[0].mantel.r == full_r

    groups = run_groups(tweets, store, truth, 2021, seed=1)
    all_run = next(r for r in groups.runs if r.config_summary.endswith("group=all"))
    assert all_run.mantel.r == full_r

    start = datetime(2021, 1, 1, tzinfo=timezone.utc)
    end = datetime(2022, 1, 1, tzinfo=timezone.utc)
    temporal = run_temporal(
        tweets, store, truth, 2021, windows=[("full-year", start, end)], seed=1
    )
    assert temporal.runs[0].mantel.r == full_r
