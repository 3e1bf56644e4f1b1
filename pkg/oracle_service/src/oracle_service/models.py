"""Small LSTM and transformer-encoder binary classifiers for rational
sequences (fed as normalized floats, one scalar per position)."""

from __future__ import annotations

import torch
from torch import nn


class LstmClassifier(nn.Module):
    def __init__(self, hidden_size=64, num_layers=2, dropout=0.1):
        super().__init__()
        self.lstm = nn.LSTM(
            input_size=1,
            hidden_size=hidden_size,
            num_layers=num_layers,
            batch_first=True,
            dropout=dropout if num_layers > 1 else 0.0,
        )
        self.head = nn.Linear(hidden_size, 1)

    def forward(self, x, lengths):
        # x: (batch, time, 1); take the output at each sequence's last step
        out, _state = self.lstm(x)
        idx = (lengths - 1).clamp(min=0).view(-1, 1, 1).expand(-1, 1, out.size(-1))
        last = out.gather(1, idx).squeeze(1)
        return self.head(last).squeeze(-1)


class TransformerClassifier(nn.Module):
    def __init__(self, d_model=64, nhead=2, num_layers=2, dropout=0.1, max_len=64):
        super().__init__()
        self.input_proj = nn.Linear(1, d_model)
        self.pos = nn.Embedding(max_len, d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=nhead,
            dim_feedforward=2 * d_model,
            dropout=dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=num_layers)
        self.head = nn.Linear(d_model, 1)
        self.max_len = max_len

    def forward(self, x, lengths):
        batch, time, _ = x.shape
        positions = torch.arange(time, device=x.device).unsqueeze(0).expand(batch, -1)
        h = self.input_proj(x) + self.pos(positions)
        mask = positions >= lengths.unsqueeze(1)  # True = padding
        h = self.encoder(h, src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).float()
        pooled = (h * keep).sum(1) / keep.sum(1).clamp(min=1.0)
        return self.head(pooled).squeeze(-1)


def build_model(architecture: str, **kwargs) -> nn.Module:
    if architecture == "lstm":
        return LstmClassifier(
            hidden_size=kwargs.get("hidden_size", 64),
            num_layers=kwargs.get("num_layers", 2),
            dropout=kwargs.get("dropout", 0.1),
        )
    if architecture == "transformer":
        return TransformerClassifier(
            d_model=kwargs.get("d_model", 64),
            nhead=kwargs.get("nhead", 2),
            num_layers=kwargs.get("num_layers", 2),
            dropout=kwargs.get("dropout", 0.1),
            max_len=kwargs.get("max_len", 64),
        )
    raise ValueError(f"unknown architecture {architecture!r}")


def pad_batch(sequences, mean: float, std: float):
    lengths = torch.tensor([len(s) for s in sequences], dtype=torch.long)
    time = int(lengths.max().item())
    x = torch.zeros(len(sequences), time, 1)
    for i, seq in enumerate(sequences):
        for j, value in enumerate(seq):
            x[i, j, 0] = (value - mean) / std
    return x, lengths
