"""Training: binary cross-entropy + AdamW, early stop on a perfect
validation epoch streak, deterministic given the seed."""

from __future__ import annotations

import random
import time
import warnings
from dataclasses import dataclass

import torch
from torch import nn

from .data import load_dataset, normalization_stats
from .models import build_model, pad_batch


class NonConvergence(UserWarning):
    pass


@dataclass
class TrainConfig:
    architecture: str = "lstm"
    hidden_size: int = 64  # lstm hidden
    d_model: int = 64  # transformer width
    nhead: int = 2
    num_layers: int = 2
    dropout: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_steps: int = 50_000
    perfect_epochs_to_stop: int = 3
    val_fraction: float = 0.1
    seed: int = 0
    max_len: int = 64

    def __post_init__(self):
        if self.architecture == "lstm" and not (64 <= self.hidden_size <= 256):
            raise ValueError("lstm hidden size must lie in 64..256")
        if self.architecture == "transformer":
            if not (2 <= self.nhead <= 4):
                raise ValueError("transformer heads must lie in 2..4")
            if not (2 <= self.num_layers <= 6):
                raise ValueError("transformer layers must lie in 2..6")
            if not (64 <= self.d_model <= 128):
                raise ValueError("transformer width must lie in 64..128")


def _batches(indices, batch_size, rng):
    order = list(indices)
    rng.shuffle(order)
    for i in range(0, len(order), batch_size):
        yield order[i: i + batch_size]


@torch.no_grad()
def _accuracy(model, sequences, labels, indices, stats, batch_size=256):
    model.eval()
    correct = 0
    for i in range(0, len(indices), batch_size):
        chunk = indices[i: i + batch_size]
        x, lengths = pad_batch([sequences[j] for j in chunk], stats["mean"], stats["std"])
        logits = model(x, lengths)
        predicted = (torch.sigmoid(logits) >= 0.5).long()
        target = torch.tensor([labels[j] for j in chunk], dtype=torch.long)
        correct += int((predicted == target).sum().item())
    return correct / max(len(indices), 1)


def train(data_path, cfg: TrainConfig, out_path=None):
    """Train and return the bundle dict; writes it with torch.save when
    out_path is given. The bundle carries weights, normalization stats and a
    manifest (dataset digest, seed, metrics)."""
    torch.manual_seed(cfg.seed)
    random.seed(cfg.seed)
    torch.set_num_threads(max(torch.get_num_threads(), 1))

    sequences, labels, digest = load_dataset(data_path)
    rng = random.Random(cfg.seed)
    indices = list(range(len(sequences)))
    rng.shuffle(indices)
    val_count = max(1, int(len(indices) * cfg.val_fraction))
    val_idx = indices[:val_count]
    train_idx = indices[val_count:]
    stats = normalization_stats([sequences[i] for i in train_idx])

    model = build_model(
        cfg.architecture,
        hidden_size=cfg.hidden_size,
        d_model=cfg.d_model,
        nhead=cfg.nhead,
        num_layers=cfg.num_layers,
        dropout=cfg.dropout,
        max_len=cfg.max_len,
    )
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()

    steps = 0
    perfect_streak = 0
    started = time.monotonic()
    epochs = 0
    val_accuracy = 0.0
    while steps < cfg.max_steps:
        epochs += 1
        model.train()
        for batch in _batches(train_idx, cfg.batch_size, rng):
            x, lengths = pad_batch([sequences[j] for j in batch], stats["mean"], stats["std"])
            target = torch.tensor([float(labels[j]) for j in batch])
            optimizer.zero_grad()
            loss = loss_fn(model(x, lengths), target)
            loss.backward()
            optimizer.step()
            steps += 1
            if steps >= cfg.max_steps:
                break
        val_accuracy = _accuracy(model, sequences, labels, val_idx, stats)
        perfect_streak = perfect_streak + 1 if val_accuracy == 1.0 else 0
        if perfect_streak >= cfg.perfect_epochs_to_stop:
            break
    if perfect_streak < cfg.perfect_epochs_to_stop:
        warnings.warn(
            f"stopped at {steps} steps with validation accuracy {val_accuracy:.4f}",
            NonConvergence,
        )
    bundle = {
        "format": "oracle-service-bundle/1",
        "architecture": cfg.architecture,
        "config": {
            "hidden_size": cfg.hidden_size,
            "d_model": cfg.d_model,
            "nhead": cfg.nhead,
            "num_layers": cfg.num_layers,
            "dropout": cfg.dropout,
            "max_len": cfg.max_len,
        },
        "state_dict": model.state_dict(),
        "normalization": stats,
        "manifest": {
            "dataset_sha256": digest,
            "seed": cfg.seed,
            "epochs": epochs,
            "steps": steps,
            "val_accuracy": val_accuracy,
            "train_samples": len(train_idx),
            "val_samples": len(val_idx),
            "elapsed_seconds": round(time.monotonic() - started, 3),
        },
    }
    if out_path:
        torch.save(bundle, out_path)
    return bundle
