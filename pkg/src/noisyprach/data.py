"""Dataset container, label coding and the record CSV format."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

FEATURE_NAMES = ("amplitude", "variance", "threshold", "snr")

# class order is fixed everywhere: column 0 of a posterior is FalsePeak
FALSE_PEAK = 0
PEAK = 1
LABEL_NAMES = ("FalsePeak", "Peak")


class DataError(ValueError):
    """Malformed or unusable data (bad CSV, wrong shape, missing class...)."""


def label_name(code: int) -> str:
    return LABEL_NAMES[int(code)]


def parse_label(text: str) -> int:
    try:
        return LABEL_NAMES.index(text.strip())
    except ValueError:
        raise DataError(f"unknown label {text!r}; expected Peak or FalsePeak") from None


def round_half_up(x: float) -> int:
    """Rounding used for every count derived from a fraction."""
    return int(np.floor(x + 0.5))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature table, one row per detection candidate.

    ``features`` is ``(N, 4)`` in ``FEATURE_NAMES`` order and ``labels`` holds
    ``FALSE_PEAK``/``PEAK`` codes. ``meta`` records provenance (generator
    seed, noise spec, ...).
    """

    features: np.ndarray
    labels: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if feats.ndim != 2 or feats.shape[1] != len(FEATURE_NAMES):
            raise DataError(f"features must be (N, {len(FEATURE_NAMES)}), got {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise DataError("labels must be a vector aligned with the feature rows")
        if not np.all((labels == FALSE_PEAK) | (labels == PEAK)):
            raise DataError("labels must be FalsePeak (0) or Peak (1)")
        if not np.all(np.isfinite(feats)):
            raise DataError("features must be finite")
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_peaks(self) -> int:
        return int(np.sum(self.labels == PEAK))

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(self.features[index], self.labels[index], self.meta)

    def with_meta(self, **extra) -> "Dataset":
        meta = dict(self.meta)
        meta.update(extra)
        return Dataset(self.features, self.labels, meta)

    def equals(self, other: "Dataset") -> bool:
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def mean_normalize(features: np.ndarray) -> np.ndarray:
    """``(x - mean) / (max - min)`` per column; constant columns are only centred."""
    x = np.asarray(features, dtype=np.float64)
    mean = x.mean(axis=0)
    span = x.max(axis=0) - x.min(axis=0)
    span[span == 0] = 1.0
    out = (x - mean) / span
    # re-centre to remove the rounding residue of the division
    return out - out.mean(axis=0)


def format_float(x: float) -> str:
    # repr round-trips exactly (17 significant digits when needed)
    return repr(float(x))


def write_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*FEATURE_NAMES, "label"])
        for row, lab in zip(dataset.features, dataset.labels):
            w.writerow([*(format_float(v) for v in row), label_name(lab)])


def read_csv(path, meta: Mapping[str, Any] | None = None) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != [*FEATURE_NAMES, "label"]:
            raise DataError(f"{path}: unexpected header {header}")
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(FEATURE_NAMES) + 1:
                raise DataError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                feats.append([float(v) for v in row[:-1]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            labels.append(parse_label(row[-1]))
    if meta is None:
        meta = read_sidecar(path)
    return Dataset(np.array(feats, dtype=np.float64).reshape(-1, len(FEATURE_NAMES)),
                   np.array(labels, dtype=np.int8), meta)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_sidecar(dataset: Dataset, path) -> Path:
    side = sidecar_path(path)
    side.write_text(json.dumps(dict(dataset.meta), indent=2, sort_keys=True) + "\n")
    return side


def read_sidecar(path) -> dict:
    side = sidecar_path(path)
    if side.exists():
        return json.loads(side.read_text())
    return {}
