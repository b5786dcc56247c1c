"""End-to-end acceptance for the bridge: its files must drive the analysis
CLI unchanged, and the toy fine-tune must actually learn. The analysis
pipeline is exercised strictly through subprocess calls and on-disk formats."""

import json
import shutil
import subprocess
import time

import numpy as np
import pytest

from plbridge import NullEncoder, TrainSpec, finetune, load_encoder
from plbridge.embed import embed_file

from conftest import topic_text_maker, write_topic_pairs

PARTYLINE = shutil.which("partyline")

pytestmark = pytest.mark.skipif(
    PARTYLINE is None, reason="partyline CLI not installed in this environment"
)


def _write_political_jsonl(path, n_parties=6, n_politicians=3, n_tweets=20, n_topics=8):
    """Toy candidate corpus: every hashtag occurs for every party."""
    parties = [f"P{i:02d}" for i in range(n_parties)]
    tweet_id = 0
    lines = []
    for party in parties:
        for politician in range(n_politicians):
            for k in range(n_tweets):
                tweet_id += 1
                serial = politician * n_tweets + k
                tag = f"topic{serial % n_topics:02d}"
                lines.append(
                    json.dumps(
                        {
                            "id": tweet_id,
                            "text": f"{party} post {tweet_id} about #{tag}",
                            "author_id": f"{party}-pol{politician}",
                            "timestamp": f"2021-{(k % 9) + 1:02d}-10T12:00:00Z",
                            "hashtags": [tag],
                            "candidacies": [
                                {"year": 2021, "party": party, "elected": True,
                                 "incumbent": politician % 2 == 0}
                            ],
                        }
                    )
                )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return parties


def _write_counts_csv(path, parties):
    rows = ["party,category,count"]
    for i, party in enumerate(parties):
        rows.append(f"{party},101,{(i + 1) * 3}")
        rows.append(f"{party},504,{(len(parties) - i) * 2}")
        rows.append(f"{party},__length__,20")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def test_criterion_9_round_trip_and_toy_finetune(tmp_path):
    start = time.perf_counter()

    # embed the toy corpus with the null encoder
    tweets_path = tmp_path / "tweets.jsonl"
    parties = _write_political_jsonl(tweets_path)
    emb_path = tmp_path / "tweets.plemb"
    count = embed_file(tweets_path, NullEncoder(dim=64, seed=0), emb_path)
    assert count == 360

    counts_path = tmp_path / "cmp.csv"
    _write_counts_csv(counts_path, parties)

    # the embedding file passes the pipeline's own validation
    validate = subprocess.run(
        [PARTYLINE, "validate", str(tweets_path), str(emb_path), str(counts_path)],
        capture_output=True,
        text=True,
    )
    assert validate.returncode == 0, validate.stderr
    assert "embeddings: 360 rows" in validate.stdout
    assert "cross-check" in validate.stdout

    # and drives the full-evaluation pipeline unchanged
    report_path = tmp_path / "report.json"
    experiment = subprocess.run(
        [
            PARTYLINE, "experiment", "full",
            "--tweets", str(tweets_path),
            "--embeddings", str(emb_path),
            "--cmp", str(counts_path),
            "--year", "2021",
            "--seed", "1",
            "--out-json", str(report_path),
        ],
        capture_output=True,
        text=True,
    )
    assert experiment.returncode == 0, experiment.stderr
    report = json.loads(report_path.read_text())
    main_run = report["runs"][0]
    assert main_run["error"] is None
    assert np.isfinite(main_run["mantel"]["r"])
    assert main_run["n_hashtags"] == 8

    # toy fine-tune: 1k pairs, 2 epochs, strictly decreasing epoch loss
    pairs_path = tmp_path / "pairs.csv"
    write_topic_pairs(pairs_path, 1000, seed=1)
    spec = TrainSpec(epochs=2, batch_size=32, warmup_steps=10,
                     learning_rate=1e-2, seed=0)
    log = finetune(pairs_path, tmp_path / "tuned", spec)
    losses = [e["train_loss"] for e in log["epochs"]]
    assert len(losses) == 2
    assert losses[1] < losses[0]

    # held-out positive pairs get closer under the tuned encoder
    rng = np.random.default_rng(99)
    make = topic_text_maker(rng)
    held = []
    for _ in range(200):
        topic = int(rng.integers(10))
        held.append((make(topic), make(topic)))
    base = NullEncoder(dim=64, seed=0)
    tuned = load_encoder(tmp_path / "tuned")

    def mean_positive_cosine(encoder):
        left = encoder.encode([a for a, _ in held])
        right = encoder.encode([b for _, b in held])
        return float(np.mean(np.sum(left * right, axis=1)))

    assert mean_positive_cosine(tuned) > mean_positive_cosine(base)

    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"took {elapsed:.1f}s"
    print(f"[ACCEPTANCE 9] PASS - bridge round trip and toy finetune ({elapsed:.1f}s)")
