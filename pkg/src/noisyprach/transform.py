"""Feature spaces: raw, phase space reconstruction (delay embedding) and PCA."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import FEATURE_NAMES, DataError, Dataset, format_float, label_name, parse_label


class Space(str, Enum):
    RAW = "raw"
    PSR = "psr"
    PCA = "pca"


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    space: Space = Space.RAW
    columns: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int8)
        if values.ndim != 2:
            raise DataError("feature matrix must be 2-D")
        if labels.shape != (values.shape[0],):
            raise DataError("labels length must equal the row count")
        cols = tuple(self.columns) or tuple(f"f{j}" for j in range(values.shape[1]))
        if len(cols) != values.shape[1]:
            raise DataError("one column name per feature column is required")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "space", Space(self.space))
        object.__setattr__(self, "columns", cols)

    @property
    def shape(self):
        return self.values.shape

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "FeatureMatrix":
        return cls(dataset.features, dataset.labels, Space.RAW, FEATURE_NAMES)

    def to_csv(self, path) -> None:
        lines = [",".join([*self.columns, "label"])]
        for row, lab in zip(self.values, self.labels):
            lines.append(",".join([*(format_float(v) for v in row), label_name(lab)]))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path, space=Space.RAW) -> "FeatureMatrix":
        text = Path(path).read_text().splitlines()
        if not text:
            raise DataError(f"{path}: empty file")
        header = text[0].split(",")
        if header[-1] != "label":
            raise DataError(f"{path}: last column must be 'label'")
        rows = [line.split(",") for line in text[1:] if line]
        values = np.array([[float(v) for v in r[:-1]] for r in rows], dtype=np.float64)
        labels = np.array([parse_label(r[-1]) for r in rows], dtype=np.int8)
        return cls(values.reshape(len(rows), len(header) - 1), labels, space, tuple(header[:-1]))


@dataclass(frozen=True)
class PsrConfig:
    embed_dim: int = 7
    time_lag: int = 1

    def __post_init__(self):
        if self.embed_dim < 1 or self.time_lag < 1:
            raise ValueError("embed_dim and time_lag must be positive")


def psr_embed(series, cfg: PsrConfig = PsrConfig()) -> np.ndarray:
    """Delay embedding: row ``i`` is ``[s[i], s[i+lag], ..., s[i+(m-1)*lag]]``."""
    s = np.asarray(series, dtype=np.float64)
    m, lag = cfg.embed_dim, cfg.time_lag
    span = (m - 1) * lag + 1
    if s.ndim != 1 or s.size < span:
        raise ValueError(f"series of length {s.size} too short for m={m}, lag={lag}")
    return np.array(sliding_window_view(s, span)[:, ::lag])


def psr_features(data, cfg: PsrConfig = PsrConfig()) -> FeatureMatrix:
    """Column-wise delay embedding over the row order, ``4*m`` columns.

    The tail of each column is padded with its last value so every record
    keeps exactly one embedded row.
    """
    fm = data if isinstance(data, FeatureMatrix) else FeatureMatrix.from_dataset(data)
    if len(fm) == 0:
        raise ValueError("cannot embed an empty dataset")
    pad = (cfg.embed_dim - 1) * cfg.time_lag
    blocks, names = [], []
    for j, name in enumerate(fm.columns):
        col = fm.values[:, j]
        padded = np.concatenate([col, np.repeat(col[-1:], pad)])
        blocks.append(psr_embed(padded, cfg))
        names.extend(f"{name}_d{t}" for t in range(cfg.embed_dim))
    return FeatureMatrix(np.hstack(blocks), fm.labels, Space.PSR, tuple(names))


EIG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    eigenvalues: np.ndarray  # (k,), descending
    total_variance: float = float("nan")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def explained_variance_ratio(self) -> float:
        return float(self.eigenvalues.sum() / self.total_variance)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "total_variance": self.total_variance,
        }

    @classmethod
    def from_dict(cls, d) -> "PcaModel":
        return cls(np.array(d["mean"], dtype=float), np.array(d["components"], dtype=float),
                   np.array(d["eigenvalues"], dtype=float), float(d["total_variance"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _as_values(matrix) -> np.ndarray:
    if isinstance(matrix, FeatureMatrix):
        return matrix.values
    if isinstance(matrix, Dataset):
        return matrix.features
    return np.asarray(matrix, dtype=np.float64)


def pca_fit(matrix, k: int = 2) -> PcaModel:
    """Top-``k`` eigenvectors of the sample covariance.

    Takes the feature values only, never labels. Each component is signed so
    that its largest-magnitude entry is positive; equal eigenvalues are
    ordered by the axis their eigenvector loads on most.
    """
    x = _as_values(matrix)
    n, d = x.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if not 1 <= k <= d:
        raise ValueError(f"k={k} must be in [1, {d}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    vals, vecs = np.linalg.eigh(cov)
    vals = np.maximum(vals, 0.0)
    vecs = vecs.T  # rows are eigenvectors
    lead = np.argmax(np.abs(vecs), axis=1)
    # quantise so near-equal eigenvalues tie and fall back to axis order
    key = np.round(vals / EIG_TOL)
    order = np.lexsort((lead, -key))
    vals, vecs, lead = vals[order], vecs[order], lead[order]
    signs = np.sign(vecs[np.arange(d), lead])
    vecs = vecs * signs[:, None]
    return PcaModel(mean, vecs[:k].copy(), vals[:k].copy(), float(np.trace(cov)))


def pca_project(model: PcaModel, matrix) -> FeatureMatrix:
    x = _as_values(matrix)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValueError(f"expected {model.mean.shape[0]} columns, got {x.shape}")
    labels = matrix.labels if hasattr(matrix, "labels") else np.zeros(x.shape[0], dtype=np.int8)
    values = (x - model.mean) @ model.components.T
    names = tuple(f"pc{j + 1}" for j in range(model.n_components))
    return FeatureMatrix(values, labels, Space.PCA, names)
