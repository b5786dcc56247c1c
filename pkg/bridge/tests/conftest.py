import csv

import numpy as np
import pytest


def topic_text_maker(rng, n_topics=10, vocab_per_topic=8, noise_vocab=300):
    """Texts drawn from per-topic vocabularies plus shared noise words."""
    topics = [
        [f"topic{t}word{w}" for w in range(vocab_per_topic)] for t in range(n_topics)
    ]
    noise = [f"noise{w}" for w in range(noise_vocab)]

    def make(topic: int) -> str:
        words = list(rng.choice(topics[topic], size=3, replace=False))
        words += list(rng.choice(noise, size=3, replace=False))
        return " ".join(words)

    return make


def write_topic_pairs(path, n_pairs, seed, n_topics=10):
    """Balanced pair CSV: positives share a topic, negatives cross topics."""
    rng = np.random.default_rng(seed)
    make = topic_text_maker(rng, n_topics=n_topics)
    rows = []
    for _ in range(n_pairs // 2):
        topic = int(rng.integers(n_topics))
        rows.append((make(topic), make(topic), 1))
        first = int(rng.integers(n_topics))
        second = (first + 1 + int(rng.integers(n_topics - 1))) % n_topics
        rows.append((make(first), make(second), 0))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["text_a", "text_b", "label"])
        writer.writerows(rows)
    return rows


@pytest.fixture
def toy_pairs(tmp_path):
    path = tmp_path / "pairs.csv"
    write_topic_pairs(path, 1000, seed=1)
    return path
