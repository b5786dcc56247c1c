"""Sentence encoders behind a uniform interface.

The built-in null encoder hashes tokens into a fixed number of signed
feature slots (a sparse random projection realized by the hash) and applies
a trainable linear head, identity at first. It needs no downloads, embeds
deterministically, and is what CI trains. Model names of any other shape are
forwarded to sentence-transformers when that package is installed.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_BIAS_TOKEN = "<s>"  # guarantees no text embeds to the zero vector

CONFIG_FILE = "config.json"
HEAD_FILE = "head.npy"
LOG_FILE = "training_log.json"


def tokenize(text: str) -> list[str]:
    return [_BIAS_TOKEN] + _TOKEN_RE.findall(text.casefold())


class NullEncoder:
    """Deterministic hashed-feature encoder with a linear head."""

    def __init__(self, dim: int = 64, seed: int = 0, head: np.ndarray | None = None):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.seed = seed
        self.head = np.eye(dim, dtype=np.float32) if head is None else head.astype(np.float32)
        if self.head.shape != (dim, dim):
            raise ValueError(f"head shape {self.head.shape} does not match dim {dim}")

    def _slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(
            token.encode(), digest_size=8, salt=str(self.seed).encode()[:16]
        ).digest()
        value = int.from_bytes(digest, "little")
        return value % self.dim, 1.0 if (value >> 62) & 1 else -1.0

    def features(self, texts: list[str]) -> np.ndarray:
        """Unit-normalized hashed bag-of-token features, before the head."""
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            for token in tokenize(text):
                slot, sign = self._slot(token)
                out[row, slot] += sign
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        return out / norms

    def encode(self, texts: list[str]) -> np.ndarray:
        projected = self.features(texts) @ self.head.T
        norms = np.linalg.norm(projected, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return projected / norms

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        config = {"type": "null", "dim": self.dim, "seed": self.seed}
        (path / CONFIG_FILE).write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
        np.save(path / HEAD_FILE, self.head)


class TransformerEncoder:
    """Thin adapter over sentence-transformers; requires the package and a
    downloadable or local model."""

    def __init__(self, name: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover
            raise RuntimeError(
                f"model {name!r} needs the sentence-transformers package"
            ) from exc
        self.name = name
        try:
            self.model = SentenceTransformer(name)
        except Exception as exc:
            raise RuntimeError(f"could not load encoder model {name!r}: {exc}") from exc
        self.dim = self.model.get_sentence_embedding_dimension()

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self.model.encode(texts, convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float32,
        )


def _parse_null_name(name: str) -> NullEncoder | None:
    if name == "null":
        return NullEncoder()
    if name.startswith("null-") or name.startswith("null:"):
        parts = name.replace("null-", "null:").split(":")[1:]
        dim = int(parts[0]) if parts and parts[0] else 64
        seed = int(parts[1]) if len(parts) > 1 else 0
        return NullEncoder(dim=dim, seed=seed)
    return None


def load_encoder(model: str | Path):
    """Resolve a model spec: 'null[-dim[:seed]]', a saved model directory,
    or a sentence-transformers name."""
    null = _parse_null_name(str(model))
    if null is not None:
        return null
    path = Path(model)
    if (path / CONFIG_FILE).is_file():
        config = json.loads((path / CONFIG_FILE).read_text(encoding="utf-8"))
        if config.get("type") != "null":
            raise ValueError(f"unsupported saved model type {config.get('type')!r}")
        head = np.load(path / HEAD_FILE)
        return NullEncoder(dim=config["dim"], seed=config["seed"], head=head)
    return TransformerEncoder(str(model))
