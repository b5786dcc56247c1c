"""Batch-embed tweet texts into a PLEMB file."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .plemb import write_plemb

_BATCH = 512


def read_texts(path: str | Path) -> tuple[list[int], list[str]]:
    """Tweet JSONL (id + text fields) or a plain text file, one text per line
    with ids numbered from 1."""
    path = Path(path)
    ids: list[int] = []
    texts: list[str] = []
    if path.suffix == ".jsonl":
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from None
                if "id" not in obj:
                    raise ValueError(f"{path}:{lineno}: missing id")
                ids.append(int(obj["id"]))
                texts.append(obj.get("text", ""))
    else:
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            ids.append(lineno)
            texts.append(line)
    if not texts:
        raise ValueError(f"{path}: no texts to embed")
    return ids, texts


def embed_file(in_path: str | Path, encoder, out_path: str | Path) -> int:
    """Embed every input text and write one PLEMB row per id. Returns the
    row count."""
    ids, texts = read_texts(in_path)
    chunks = [
        encoder.encode(texts[start : start + _BATCH])
        for start in range(0, len(texts), _BATCH)
    ]
    write_plemb(out_path, ids, np.vstack(chunks))
    return len(ids)
