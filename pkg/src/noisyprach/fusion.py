"""Decision-level fusion of the PSR-stream and PCA-stream classifiers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .classifiers import ClassifierSpec, Kind, NbModel, argmax_labels, fit
from .data import FALSE_PEAK, PEAK, label_name


class FusionMode(str, Enum):
    WEIGHTED_AVERAGE = "weighted"
    META_NB = "meta_nb"


class FusionError(ValueError):
    pass


def _check_posterior(p, name):
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    if p.shape[1] != 2:
        raise FusionError(f"{name} must have two columns, got shape {p.shape}")
    if np.any(p < -1e-12) or not np.allclose(p.sum(axis=1), 1.0, atol=1e-9):
        raise FusionError(f"{name} rows must be nonnegative and sum to 1")
    return p


def normalize_weights(weights) -> tuple[float, float]:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (2,) or np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
        raise FusionError(f"weights must be two nonnegative numbers with a positive sum, got {weights}")
    w = w / w.sum()
    return float(w[0]), float(w[1])


def fuse_weighted(p_psr, p_pca, weights=(0.5, 0.5)) -> np.ndarray:
    """Argmax of the weighted mean posterior; ties go to FalsePeak."""
    p_psr = _check_posterior(p_psr, "PSR posterior")
    p_pca = _check_posterior(p_pca, "PCA posterior")
    if p_psr.shape != p_pca.shape:
        raise FusionError("stream posteriors must have the same shape")
    w1, w2 = normalize_weights(weights)
    return argmax_labels(w1 * p_psr + w2 * p_pca)


def weights_from_scores(score_psr: float, score_pca: float) -> tuple[float, float]:
    """Weights proportional to validation F1; equal weights if both are zero."""
    if score_psr + score_pca <= 0:
        return 0.5, 0.5
    return normalize_weights([score_psr, score_pca])


@dataclass(frozen=True, eq=False)
class FusionModel:
    mode: FusionMode
    weights: tuple = (0.5, 0.5)
    meta: NbModel | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", FusionMode(self.mode))
        object.__setattr__(self, "weights", normalize_weights(self.weights))


def meta_features(p_psr, p_pca) -> np.ndarray:
    """Peak posterior of each stream, side by side."""
    return np.column_stack([np.asarray(p_psr)[:, PEAK], np.asarray(p_pca)[:, PEAK]])


def fit_meta_nb(stream_posteriors, y, var_floor: float = 1e-9) -> FusionModel:
    """Gaussian naive Bayes on the ``(N, 2)`` stream Peak posteriors."""
    Z = np.asarray(stream_posteriors, dtype=np.float64)
    y = np.asarray(y)
    if Z.ndim != 2 or Z.shape[1] != 2 or Z.shape[0] != y.shape[0]:
        raise FusionError("meta features must be (N, 2) and aligned with the labels")
    if Z.shape[0] < 2 or np.unique(y).size < 2:
        raise FusionError("meta-learner needs both classes")
    meta = fit(ClassifierSpec(Kind.NB, {"var_floor": var_floor}), Z, y)
    return FusionModel(FusionMode.META_NB, (0.5, 0.5), meta)


def fuse_predict(model: FusionModel, p_psr, p_pca) -> np.ndarray:
    p_psr = _check_posterior(p_psr, "PSR posterior")
    p_pca = _check_posterior(p_pca, "PCA posterior")
    if model.mode is FusionMode.WEIGHTED_AVERAGE:
        return fuse_weighted(p_psr, p_pca, model.weights)
    if model.meta is None:
        raise FusionError("meta-learner fusion model is not fitted")
    return model.meta.predict(meta_features(p_psr, p_pca))


def write_decisions_csv(path, p_psr, p_pca, decisions, y_true=None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["psr_false_peak", "psr_peak", "pca_false_peak", "pca_peak", "decision",
                    "label"])
        for i in range(len(decisions)):
            w.writerow([repr(float(p_psr[i, FALSE_PEAK])), repr(float(p_psr[i, PEAK])),
                        repr(float(p_pca[i, FALSE_PEAK])), repr(float(p_pca[i, PEAK])),
                        label_name(decisions[i]),
                        "" if y_true is None else label_name(y_true[i])])
