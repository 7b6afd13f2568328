"""Informative-instance selection and the self-training loop.

A pool row is informative when it sits in a dense region of the pool and
the current model is unsure about it. Both scores are min-max scaled over
the remaining pool each cycle and multiplied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .classifiers import (ClassifierSpec, ElmModel, FitError, Kind, KnnModel, TrainedModel,
                          argmax_labels, elm_targets, fit)
from .data import FALSE_PEAK, PEAK, round_half_up

EPS = 1e-9
# scores closer than this are equal; keeps round-off out of the ranking
SCORE_TOL = 1e-12
UNCERTAINTY_MEASURES = ("least_confident", "margin", "entropy")


@dataclass(frozen=True)
class SamplingConfig:
    initial_fraction: float = 0.10
    J: int = 20
    k_density: int = 5
    seed: int = 0
    uncertainty: str = "least_confident"
    pseudo_labels: bool = True

    def __post_init__(self):
        if not 0.0 < self.initial_fraction < 1.0:
            raise ValueError("initial_fraction must lie in (0, 1)")
        if int(self.J) < 1:
            raise ValueError("J must be >= 1")
        if int(self.k_density) < 1:
            raise ValueError("k_density must be >= 1")
        if self.uncertainty not in UNCERTAINTY_MEASURES:
            raise ValueError(f"uncertainty must be one of {UNCERTAINTY_MEASURES}")

    def to_dict(self) -> dict:
        return {"initial_fraction": self.initial_fraction, "J": int(self.J),
                "k_density": int(self.k_density), "seed": int(self.seed),
                "uncertainty": self.uncertainty, "pseudo_labels": bool(self.pseudo_labels)}


@dataclass(frozen=True)
class ScoredInstance:
    """Scores of one pool row; density and uncertainty are the scaled values."""

    row_index: int
    density: float
    uncertainty: float
    informativeness: float
    raw_density: float = float("nan")


class SelfTrainError(FitError):
    def __init__(self, cycle: int, cause: Exception):
        super().__init__(f"fit failed at cycle {cycle}: {cause}")
        self.cycle = cycle


# -- scores ----------------------------------------------------------------


def knn_density(x, pool, k: int) -> float:
    """``1 / (EPS + mean distance to the k nearest pool rows)``."""
    pool = np.asarray(getattr(pool, "values", pool), dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if pool.shape[0] < k:
        raise ValueError(f"pool has {pool.shape[0]} rows, need at least k={k}")
    d, _ = kernels.knn_search(x, pool, k)
    return float(1.0 / (EPS + d[0].mean()))


def pool_densities(pool, k: int) -> np.ndarray:
    """Density of every pool row against the rest of the pool.

    ``k`` is capped at ``len(pool) - 1``; a lone row gets density 1.
    """
    pool = np.asarray(getattr(pool, "values", pool), dtype=np.float64)
    n = pool.shape[0]
    if n <= 1:
        return np.ones(n)
    d, _ = kernels.knn_search(pool, pool, min(k, n - 1), exclude_self=True)
    return 1.0 / (EPS + d.mean(axis=1))


def uncertainty_from_posterior(post, measure: str = "least_confident") -> np.ndarray:
    """Binary uncertainty in [0, 1]: 0 for a one-hot posterior, 1 at (0.5, 0.5).

    Values are snapped to a ``SCORE_TOL`` grid so that mirror-image
    posteriors such as (1/3, 2/3) and (2/3, 1/3) score exactly the same.
    """
    post = np.asarray(post, dtype=np.float64)
    if measure == "least_confident":
        u = (1.0 - post.max(axis=1)) / 0.5
    elif measure == "margin":
        u = 1.0 - np.abs(post[:, PEAK] - post[:, FALSE_PEAK])
    elif measure == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            u = -np.where(post > 0, post * np.log2(post), 0.0).sum(axis=1)
    else:
        raise ValueError(f"unknown uncertainty measure {measure!r}")
    return np.clip(np.round(u / SCORE_TOL) * SCORE_TOL, 0.0, 1.0)


def uncertainty(model: TrainedModel, X, measure: str = "least_confident") -> np.ndarray:
    return uncertainty_from_posterior(model.posterior(X), measure)


def _minmax(v: np.ndarray) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi - lo <= SCORE_TOL * max(1.0, abs(hi)):
        return np.ones_like(v)
    return (v - lo) / (hi - lo)


def rank_informative(row_ids, density, unc, J: int) -> list[ScoredInstance]:
    """Top ``J`` rows by scaled density x uncertainty, lower row id first on ties."""
    row_ids = np.asarray(row_ids)
    if row_ids.size == 0:
        return []
    dn = _minmax(np.asarray(density, dtype=np.float64))
    un = _minmax(np.asarray(unc, dtype=np.float64))
    score = dn * un
    order = np.lexsort((row_ids, -score))[: min(int(J), row_ids.size)]
    return [ScoredInstance(int(row_ids[i]), float(dn[i]), float(un[i]), float(score[i]),
                           float(density[i])) for i in order]


def select_informative(pool, model: TrainedModel, cfg: SamplingConfig) -> list[ScoredInstance]:
    """Score every pool row and return the ``min(J, len(pool))`` best."""
    pool = np.asarray(getattr(pool, "values", pool), dtype=np.float64)
    if pool.shape[0] == 0:
        return []
    dens = pool_densities(pool, cfg.k_density)
    unc = uncertainty(model, pool, cfg.uncertainty)
    return rank_informative(np.arange(pool.shape[0]), dens, unc, cfg.J)


# -- incremental machinery used inside the loop ----------------------------


class _DensityTracker:
    """Pool densities under row removal, from cached sorted neighbour lists."""

    def __init__(self, pool: np.ndarray, k: int, width: int = 32):
        self.pool = pool
        self.k = k
        n = pool.shape[0]
        self.active = np.ones(n, dtype=bool)
        self.width = min(n - 1, max(width, 4 * k)) if n > 1 else 0
        if self.width > 0:
            self.cand_d, self.cand_i = kernels.knn_search(pool, pool, self.width, exclude_self=True)
        else:
            self.cand_d = np.empty((n, 0))
            self.cand_i = np.empty((n, 0), dtype=np.int64)

    def remove(self, rows) -> None:
        self.active[rows] = False

    def densities(self, rows: np.ndarray) -> np.ndarray:
        n_active = int(self.active.sum())
        if n_active <= 1:
            return np.ones(rows.size)
        k = min(self.k, n_active - 1)
        mean_d = kernels.active_knn_mean(self.cand_d[rows], self.cand_i[rows], self.active, k)
        stale = np.flatnonzero(np.isnan(mean_d))
        if stale.size:
            self._refresh(rows[stale])
            mean_d[stale] = kernels.active_knn_mean(self.cand_d[rows[stale]],
                                                    self.cand_i[rows[stale]], self.active, k)
        return 1.0 / (EPS + mean_d)

    def _refresh(self, rows: np.ndarray) -> None:
        live = np.flatnonzero(self.active)
        width = min(self.width, live.size - 1)
        for r in rows:
            others = live[live != r]
            d, i = kernels.knn_search(self.pool[r:r + 1], self.pool[others], width)
            self.cand_d[r, :] = np.inf
            self.cand_i[r, :] = -1
            self.cand_d[r, :width] = d[0]
            self.cand_i[r, :width] = others[i[0]]


class _Learner:
    """Refit-from-scratch learner used for kinds without an incremental path."""

    def __init__(self, spec, X0, y0, pool_X):
        self.spec = spec
        self.X = X0
        self.y = y0
        self.pool_X = pool_X
        self.model = fit(spec, X0, y0)

    def pool_posterior(self, rows):
        return self.model.posterior(self.pool_X[rows])

    def add(self, rows, labels, remaining):
        self.X = np.vstack([self.X, self.pool_X[rows]])
        self.y = np.concatenate([self.y, labels])
        self.model = fit(self.spec, self.X, self.y)


class _ElmLearner(_Learner):
    """Hidden features are fixed by the seed, so only the readout is updated."""

    def __init__(self, spec, X0, y0, pool_X):
        super().__init__(spec, X0, y0, pool_X)
        self.H_pool = self.model.hidden(pool_X)

    def add(self, rows, labels, remaining):
        self.X = np.vstack([self.X, self.pool_X[rows]])
        self.y = np.concatenate([self.y, labels])
        self.model = self.model.with_rows(self.H_pool[rows], elm_targets(labels))
        if not np.all(np.isfinite(self.model.beta)):
            raise FitError("ELM readout is not finite")

    def pool_posterior(self, rows):
        return self.model.posterior_from_hidden(self.H_pool[rows])


class _KnnLearner(_Learner):
    """Keeps each pool row's k nearest training rows and merges new ones in."""

    def __init__(self, spec, X0, y0, pool_X):
        super().__init__(spec, X0, y0, pool_X)
        self.best_d, self.best_i = self.model.neighbours(pool_X)

    def add(self, rows, labels, remaining):
        offset = self.X.shape[0]
        k_before = self.model.k
        self.X = np.vstack([self.X, self.pool_X[rows]])
        self.y = np.concatenate([self.y, labels])
        self.model = KnnModel(self.spec, self.X, self.y)
        if self.model.k != k_before:
            self.best_d, self.best_i = self.model.neighbours(self.pool_X)
            return
        bd = np.ascontiguousarray(self.best_d[remaining])
        bi = np.ascontiguousarray(self.best_i[remaining])
        kernels.knn_merge(bd, bi, self.pool_X[remaining], self.pool_X[rows], offset)
        self.best_d[remaining] = bd
        self.best_i[remaining] = bi

    def pool_posterior(self, rows):
        return self.model.posterior_from_neighbours(self.best_i[rows])


def _make_learner(spec, X0, y0, pool_X):
    if spec.kind is Kind.ELM:
        return _ElmLearner(spec, X0, y0, pool_X)
    if spec.kind is Kind.KNN:
        return _KnnLearner(spec, X0, y0, pool_X)
    return _Learner(spec, X0, y0, pool_X)


# -- the loop --------------------------------------------------------------


@dataclass
class CycleRecord:
    cycle: int
    moved: list
    mean_informativeness: float
    train_size: int
    n_pseudo_peak: int
    n_label_disagreements: int | None = None


@dataclass
class SelfTrainResult:
    model: TrainedModel
    log: list = field(default_factory=list)
    X: np.ndarray | None = None  # final training matrix (train0 then moved pool rows)
    y: np.ndarray | None = None  # labels used for training (pseudo-labels for pool rows)
    pool_labels: np.ndarray | None = None  # label assigned to each pool row
    n_fits: int = 0

    @property
    def n_cycles(self) -> int:
        return len(self.log)


def initial_split(y, fraction: float, seed: int):
    """Stratified ``fraction`` of rows for the initial labelled set.

    Every class present gets at least one row. Returns sorted
    ``(train0_idx, pool_idx)``.
    """
    y = np.asarray(y)
    rng = np.random.default_rng(int(seed))
    picked = []
    for c in (FALSE_PEAK, PEAK):
        idx = np.flatnonzero(y == c)
        if idx.size == 0:
            continue
        n = min(idx.size, max(1, round_half_up(idx.size * fraction)))
        picked.append(idx[rng.permutation(idx.size)[:n]])
    train0 = np.sort(np.concatenate(picked)) if picked else np.empty(0, dtype=np.int64)
    mask = np.ones(y.size, dtype=bool)
    mask[train0] = False
    return train0, np.flatnonzero(mask)


def self_train(train_X, train_y, pool_X, spec: ClassifierSpec, cfg: SamplingConfig,
               pool_y=None) -> SelfTrainResult:
    """Grow the training set from the pool, ``J`` informative rows per cycle.

    Each cycle pseudo-labels the remaining pool with the current model, moves
    the top-``J`` rows (with their pseudo-labels) into the training set and
    refits, until the pool is empty. ``pool_y`` is used only for the audit
    log, or as the labels themselves when ``cfg.pseudo_labels`` is off.
    """
    train_X = np.asarray(getattr(train_X, "values", train_X), dtype=np.float64)
    pool_X = np.ascontiguousarray(getattr(pool_X, "values", pool_X), dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int8)
    if train_X.shape[0] == 0:
        raise ValueError("initial training set is empty")
    if pool_y is not None:
        pool_y = np.asarray(pool_y, dtype=np.int8)
    if not cfg.pseudo_labels and pool_y is None:
        raise ValueError("pool labels are required when pseudo-labelling is off")

    try:
        learner = _make_learner(spec, train_X, train_y, pool_X)
    except FitError as exc:
        raise SelfTrainError(0, exc) from exc
    n_fits = 1
    n_pool = pool_X.shape[0]
    active = np.ones(n_pool, dtype=bool)
    pool_labels = np.full(n_pool, -1, dtype=np.int8)
    tracker = _DensityTracker(pool_X, int(cfg.k_density)) if n_pool else None
    log = []
    cycle = 0
    while active.any():
        cycle += 1
        rows = np.flatnonzero(active)
        post = learner.pool_posterior(rows)
        unc = uncertainty_from_posterior(post, cfg.uncertainty)
        dens = tracker.densities(rows)
        chosen = rank_informative(rows, dens, unc, cfg.J)
        moved = np.array([s.row_index for s in chosen], dtype=np.int64)
        pos = np.searchsorted(rows, moved)
        pseudo = argmax_labels(post[pos])
        labels = pseudo if cfg.pseudo_labels else pool_y[moved]
        pool_labels[moved] = labels
        active[moved] = False
        tracker.remove(moved)
        try:
            learner.add(moved, labels, np.flatnonzero(active))
        except FitError as exc:
            raise SelfTrainError(cycle, exc) from exc
        n_fits += 1
        log.append(CycleRecord(
            cycle=cycle,
            moved=moved.tolist(),
            mean_informativeness=float(np.mean([s.informativeness for s in chosen])),
            train_size=int(learner.X.shape[0]),
            n_pseudo_peak=int(np.sum(pseudo == PEAK)),
            n_label_disagreements=None if pool_y is None else int(np.sum(pseudo != pool_y[moved])),
        ))
    return SelfTrainResult(learner.model, log, learner.X, learner.y, pool_labels, n_fits)


def write_audit_csv(log, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cycle", "train_size", "n_moved", "mean_informativeness",
                    "n_pseudo_peak", "n_label_disagreements", "moved"])
        for rec in log:
            w.writerow([rec.cycle, rec.train_size, len(rec.moved), repr(rec.mean_informativeness),
                        rec.n_pseudo_peak,
                        "" if rec.n_label_disagreements is None else rec.n_label_disagreements,
                        ";".join(str(i) for i in rec.moved)])
