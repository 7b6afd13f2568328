"""Random noise injection on a fraction of the records."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset, round_half_up


class NoiseMode(str, Enum):
    FEATURE_AWGN = "awgn"
    LABEL_FLIP = "flip"


@dataclass(frozen=True)
class NoiseSpec:
    fraction: float
    mode: NoiseMode = NoiseMode.FEATURE_AWGN
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.fraction) <= 1.0:
            raise ValueError(f"noise fraction must lie in [0, 1], got {self.fraction}")
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("noise seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {"fraction": float(self.fraction), "mode": self.mode.value, "seed": int(self.seed)}


def mean_power(dataset) -> float:
    """Mean of the squared feature values over all records and columns."""
    x = dataset.features if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    if x.size == 0:
        raise ValueError("mean power of an empty dataset is undefined")
    return float(np.mean(x * x))


def corrupted_rows(n: int, spec: NoiseSpec) -> np.ndarray:
    """Sorted indices of the ``round(fraction * n)`` rows chosen by ``spec.seed``."""
    count = round_half_up(spec.fraction * n)
    rng = np.random.default_rng(int(spec.seed))
    return np.sort(rng.choice(n, size=count, replace=False))


def inject(dataset: Dataset, spec: NoiseSpec) -> Dataset:
    """Corrupt an exact fraction of the records.

    ``FEATURE_AWGN`` adds independent zero-mean Gaussian noise to every
    feature of the chosen rows, with standard deviation the square root of
    the pre-injection mean power. ``LABEL_FLIP`` toggles their labels instead.
    """
    rows = corrupted_rows(len(dataset), spec)
    feats = np.array(dataset.features)
    labels = np.array(dataset.labels)
    meta = {"noise": spec.to_dict(), "n_corrupted": int(rows.size)}
    if spec.mode is NoiseMode.FEATURE_AWGN:
        sigma = np.sqrt(mean_power(dataset)) if len(dataset) else 0.0
        # the row draw consumed the first part of the stream; noise uses a child
        rng = np.random.default_rng([int(spec.seed), 1])
        feats[rows] += rng.normal(0.0, sigma, size=(rows.size, feats.shape[1]))
        meta["sigma"] = float(sigma)
    else:
        labels[rows] = 1 - labels[rows]
    return Dataset(feats, labels, {**dataset.meta, **meta})
