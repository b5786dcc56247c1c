"""Contrastive fine-tuning of an encoder on a pair CSV.

The pair file has header text_a,text_b,label with label 1 for topically
related pairs and 0 for unrelated ones. Training minimizes the contrastive
loss over cosine distance, holds out a validation split, and keeps the
checkpoint with the best validation loss.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .encoders import LOG_FILE, NullEncoder

MARGIN = 0.5
VAL_FRACTION = 0.1


@dataclass(frozen=True)
class TrainSpec:
    base_model: str = "null-64"
    epochs: int = 2
    batch_size: int = 32
    warmup_steps: int = 1000
    learning_rate: float = 2e-5
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.epochs, self.batch_size, self.warmup_steps + 1, 1) <= 0:
            raise ValueError("epochs, batch_size must be positive; warmup_steps non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def read_pairs(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["text_a", "text_b", "label"]:
            raise ValueError(f"{path}: expected header text_a,text_b,label")
        text_a, text_b, labels = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != 3 or row[2] not in ("0", "1"):
                raise ValueError(f"{path}: bad pair row {row!r}")
            text_a.append(row[0])
            text_b.append(row[1])
            labels.append(int(row[2]))
    if not labels:
        raise ValueError(f"{path}: no training pairs")
    labels = np.asarray(labels, dtype=np.float32)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if abs(n_pos - n_neg) > 0.01 * len(labels):
        warnings.warn(
            f"{path}: unbalanced pairs ({n_pos} positive vs {n_neg} negative)",
            UserWarning,
            stacklevel=2,
        )
    return text_a, text_b, labels


def contrastive_loss(u: torch.Tensor, v: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """0.5 * (y * D^2 + (1-y) * relu(margin - D)^2) over cosine distance D."""
    distance = 1.0 - torch.nn.functional.cosine_similarity(u, v)
    positive = y * distance.pow(2)
    negative = (1.0 - y) * torch.clamp(MARGIN - distance, min=0.0).pow(2)
    return 0.5 * (positive + negative).mean()


def _warmup_constant(step: int, warmup: int) -> float:
    return min(1.0, (step + 1) / warmup) if warmup > 0 else 1.0


def finetune(pairs_path: str | Path, out_dir: str | Path, spec: TrainSpec = TrainSpec()) -> dict:
    """Fine-tune the base encoder's head on a pair CSV; returns the training
    log (also written to the model directory)."""
    from .encoders import load_encoder

    encoder = load_encoder(spec.base_model)
    if not isinstance(encoder, NullEncoder):
        raise ValueError(
            "finetune drives the hashed null encoder; fine-tune transformer "
            "models with their own training stack"
        )

    text_a, text_b, labels = read_pairs(pairs_path)
    features_a = encoder.features(text_a)
    features_b = encoder.features(text_b)

    rng = np.random.Generator(np.random.Philox(key=np.array([spec.seed, 0xF17], dtype=np.uint64)))
    order = rng.permutation(len(labels))
    n_val = max(1, int(round(VAL_FRACTION * len(labels))))
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        raise ValueError("too few pairs to split off a validation set")

    torch.manual_seed(spec.seed)
    device = torch.device("cpu")
    fa = torch.from_numpy(features_a).to(device)
    fb = torch.from_numpy(features_b).to(device)
    y = torch.from_numpy(labels).to(device)

    head = torch.nn.Linear(encoder.dim, encoder.dim, bias=False).to(device)
    with torch.no_grad():
        head.weight.copy_(torch.from_numpy(encoder.head))
    optimizer = torch.optim.AdamW(head.parameters(), lr=spec.learning_rate)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: _warmup_constant(step, spec.warmup_steps)
    )

    def val_loss() -> float:
        head.eval()
        with torch.no_grad():
            loss = contrastive_loss(head(fa[val_idx]), head(fb[val_idx]), y[val_idx])
        head.train()
        return float(loss)

    log: dict = {"spec": asdict(spec), "epochs": []}
    best = {"val_loss": float("inf"), "epoch": 0, "head": encoder.head.copy()}
    train_tensor = torch.from_numpy(train_idx.copy())
    for epoch in range(1, spec.epochs + 1):
        perm = rng.permutation(len(train_idx))
        epoch_losses = []
        for start in range(0, len(train_idx), spec.batch_size):
            batch = train_tensor[perm[start : start + spec.batch_size]]
            optimizer.zero_grad()
            loss = contrastive_loss(head(fa[batch]), head(fb[batch]), y[batch])
            loss.backward()
            optimizer.step()
            scheduler.step()
            epoch_losses.append(loss.item())
        entry = {
            "epoch": epoch,
            "train_loss": float(np.mean(epoch_losses)),
            "val_loss": val_loss(),
        }
        log["epochs"].append(entry)
        if entry["val_loss"] < best["val_loss"]:
            best = {
                "val_loss": entry["val_loss"],
                "epoch": epoch,
                "head": head.weight.detach().numpy().copy(),
            }
    log["best_epoch"] = best["epoch"]
    log["best_val_loss"] = best["val_loss"]

    tuned = NullEncoder(dim=encoder.dim, seed=encoder.seed, head=best["head"])
    out_dir = Path(out_dir)
    tuned.save(out_dir)
    (out_dir / LOG_FILE).write_text(json.dumps(log, indent=2) + "\n", encoding="utf-8")
    return log
