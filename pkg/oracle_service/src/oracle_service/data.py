"""Dataset loading: the regrobust JSONL sample format.

Rational letters ("num/den" strings) are converted to floats here; this is
the only place the system crosses from exact rationals into floating point,
and it is inherent to feeding a neural network.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction


class DataFormatError(ValueError):
    pass


def _letter(value) -> float:
    if isinstance(value, str):
        if "/" in value:
            num, den = value.split("/", 1)
            return float(Fraction(int(num), int(den)))
        return float(Fraction(value))
    if isinstance(value, (int, float)):
        return float(value)
    raise DataFormatError(f"bad letter {value!r}")


def load_dataset(path):
    """Returns (sequences, labels, sha256 digest of the raw file)."""
    sequences = []
    labels = []
    hasher = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    hasher.update(raw)
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            seq = [_letter(x) for x in doc["seq"]]
            label = int(doc["label"])
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        if not seq:
            raise DataFormatError(f"{path}:{lineno}: empty sequence")
        if label not in (0, 1):
            raise DataFormatError(f"{path}:{lineno}: label must be 0 or 1")
        sequences.append(seq)
        labels.append(label)
    if not sequences:
        raise DataFormatError(f"{path}: no samples")
    return sequences, labels, hasher.hexdigest()


def normalization_stats(sequences):
    values = [x for seq in sequences for x in seq]
    mean = sum(values) / len(values)
    var = sum((x - mean) ** 2 for x in values) / max(len(values) - 1, 1)
    std = var ** 0.5 or 1.0
    return {"mean": mean, "std": std}
