"""Decision tree, k-NN, extreme learning machine and Gaussian naive Bayes.

All models share one surface: ``posterior(X)`` returns an ``(N, 2)`` matrix
with columns ``[FalsePeak, Peak]`` whose rows sum to one, and ``predict(X)``
is its argmax with ties going to FalsePeak.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import kernels
from .data import FALSE_PEAK, PEAK
from .metrics import f1_score


class Kind(str, Enum):
    TREE = "tree"
    KNN = "knn"
    ELM = "elm"
    NB = "nb"


class FitError(RuntimeError):
    """A classifier could not be fitted."""


class DegenerateInputError(FitError):
    """Training labels do not contain both classes."""


class DimensionError(ValueError):
    """Feature dimension does not match what the model was fitted on."""


DEFAULT_PARAMS: dict[Kind, dict[str, Any]] = {
    Kind.TREE: {"max_depth": None, "min_leaf": 1},
    Kind.KNN: {"k": 5},
    Kind.ELM: {"hidden_units": 128, "ridge": 1e-3, "activation": "sigmoid",
               "seed": 0, "input_scale": 1.0, "squash": 4.0},
    Kind.NB: {"var_floor": 1e-9},
}

DEFAULT_GRIDS: dict[Kind, list[dict[str, Any]]] = {
    Kind.TREE: [{"max_depth": d} for d in (3, 5, 10, None)],
    Kind.KNN: [{"k": k} for k in (1, 3, 5, 11)],
    Kind.ELM: [{"hidden_units": h, "ridge": r}
               for h, r in product((32, 128, 512), (1e-5, 1e-3, 1e-1))],
    Kind.NB: [{"var_floor": 1e-9}],
}

_ACTIVATIONS = ("sigmoid", "tanh", "relu")


def _check_params(kind: Kind, p: Mapping[str, Any]) -> None:
    if kind is Kind.TREE:
        if p["max_depth"] is not None and int(p["max_depth"]) < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if int(p["min_leaf"]) < 1:
            raise ValueError("min_leaf must be >= 1")
    elif kind is Kind.KNN:
        if int(p["k"]) < 1:
            raise ValueError("k must be >= 1")
    elif kind is Kind.ELM:
        if int(p["hidden_units"]) < 1:
            raise ValueError("hidden_units must be >= 1")
        if float(p["ridge"]) < 0:
            raise ValueError("ridge must be >= 0")
        if p["activation"] not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")
        if float(p["input_scale"]) <= 0 or float(p["squash"]) <= 0:
            raise ValueError("input_scale and squash must be positive")
    elif kind is Kind.NB:
        if float(p["var_floor"]) <= 0:
            raise ValueError("var_floor must be positive")


@dataclass(frozen=True)
class ClassifierSpec:
    kind: Kind
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        kind = Kind(self.kind)
        unknown = set(self.params) - set(DEFAULT_PARAMS[kind])
        if unknown:
            raise ValueError(f"unknown {kind.value} parameters: {sorted(unknown)}")
        params = {**DEFAULT_PARAMS[kind], **self.params}
        _check_params(kind, params)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    def with_params(self, **params) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.params, **params})

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d) -> "ClassifierSpec":
        return cls(Kind(d["kind"]), dict(d.get("params", {})))


def _as_xy(X, y=None):
    X = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if y is None:
        return X
    y = np.asarray(y, dtype=np.int8)
    if y.shape != (X.shape[0],):
        raise DimensionError(f"{X.shape[0]} rows but {y.shape} labels")
    return X, y


def _require_both_classes(y, kind):
    if y.size < 2 or np.all(y == y[0]):
        raise DegenerateInputError(f"{kind.value} needs both classes in the training labels")


class TrainedModel:
    """Base class; subclasses implement ``_peak_posterior`` and serialisation."""

    spec: ClassifierSpec
    n_features: int

    def _check(self, X) -> np.ndarray:
        X = _as_xy(X)
        if X.shape[1] != self.n_features:
            raise DimensionError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def posterior(self, X) -> np.ndarray:
        X = self._check(X)
        return self._posterior(X)

    def predict(self, X) -> np.ndarray:
        return argmax_labels(self.posterior(X))

    def _posterior(self, X) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "n_features": self.n_features, "state": self.state()}


def argmax_labels(post: np.ndarray) -> np.ndarray:
    """Peak only when its posterior is strictly larger."""
    return np.where(post[:, PEAK] > post[:, FALSE_PEAK], PEAK, FALSE_PEAK).astype(np.int8)


def _two_column(p_peak: np.ndarray) -> np.ndarray:
    out = np.empty((p_peak.shape[0], 2))
    out[:, PEAK] = p_peak
    out[:, FALSE_PEAK] = 1.0 - p_peak
    return out


# -- decision tree ---------------------------------------------------------


class TreeModel(TrainedModel):
    """Tree grown by scikit-learn, evaluated from its exported node arrays."""

    def __init__(self, spec, n_features, left, right, feature, threshold, value):
        self.spec = spec
        self.n_features = n_features
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.value = np.asarray(value, dtype=np.float64)  # (n_nodes, 2) leaf class frequencies

    def leaves(self, X) -> np.ndarray:
        # scikit-learn compares float32 features against float64 thresholds
        X32 = np.asarray(X, dtype=np.float32).astype(np.float64)
        node = np.zeros(X32.shape[0], dtype=np.int64)
        rows = np.arange(X32.shape[0])
        while True:
            internal = self.left[node] >= 0
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = X32[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])

    def _posterior(self, X):
        return self.value[self.leaves(X)].copy()

    def state(self):
        return {k: getattr(self, k).tolist()
                for k in ("left", "right", "feature", "threshold", "value")}


def _fit_tree(spec, X, y):
    from sklearn.tree import DecisionTreeClassifier

    _require_both_classes(y, spec.kind)
    p = spec.params
    clf = DecisionTreeClassifier(
        max_depth=None if p["max_depth"] is None else int(p["max_depth"]),
        min_samples_leaf=int(p["min_leaf"]),
        random_state=0,
    )
    clf.fit(X, y)
    t = clf.tree_
    counts = t.value[:, 0, :]
    counts = counts / counts.sum(axis=1, keepdims=True)
    # sklearn's class axis follows clf.classes_, which is [0, 1] here
    return TreeModel(spec, X.shape[1], t.children_left, t.children_right,
                     t.feature, t.threshold, counts)


# -- k nearest neighbours --------------------------------------------------


class KnnModel(TrainedModel):
    """Neighbour vote with add-one smoothing: ``(votes_c + 1) / (k + 2)``."""

    def __init__(self, spec, X, y):
        self.spec = spec
        self.n_features = X.shape[1]
        self.X = np.ascontiguousarray(X)
        self.y = np.asarray(y, dtype=np.int8)

    @property
    def k(self) -> int:
        return min(int(self.spec.params["k"]), self.X.shape[0])

    def neighbours(self, X):
        return kernels.knn_search(X, self.X, self.k)

    def posterior_from_neighbours(self, idx) -> np.ndarray:
        votes = self.y[idx].sum(axis=1)
        return _two_column((votes + 1.0) / (idx.shape[1] + 2.0))

    def _posterior(self, X):
        _, idx = self.neighbours(X)
        return self.posterior_from_neighbours(idx)

    def state(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}


def _fit_knn(spec, X, y):
    if X.shape[0] < 1:
        raise FitError("kNN needs at least one training row")
    return KnnModel(spec, X, y)


# -- extreme learning machine ---------------------------------------------


def _activate(name, z):
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def elm_hidden_weights(params, n_features):
    """Input weights and biases, uniform in [-1, 1], seeded by ClassifierSpec.seed."""
    rng = np.random.default_rng(int(params["seed"]))
    L = int(params["hidden_units"])
    W = rng.uniform(-1.0, 1.0, size=(n_features, L)) * float(params["input_scale"])
    b = rng.uniform(-1.0, 1.0, size=L)
    return W, b


class ElmModel(TrainedModel):
    """Single hidden layer with fixed random weights and a ridge readout.

    Targets are coded +1 (Peak) / -1 (FalsePeak); the Peak posterior is
    ``sigmoid(squash * output)``. ``gram``/``rhs`` are the normal-equation
    accumulators, kept so rows can be added without recomputing them.
    """

    def __init__(self, spec, W, b, beta, gram=None, rhs=None):
        self.spec = spec
        self.W = W
        self.b = b
        self.beta = beta
        self.n_features = W.shape[0]
        self.gram = gram
        self.rhs = rhs

    def hidden(self, X) -> np.ndarray:
        return _activate(self.spec.params["activation"], X @ self.W + self.b)

    def output(self, X) -> np.ndarray:
        return self.hidden(self._check(X)) @ self.beta

    def posterior_from_hidden(self, H) -> np.ndarray:
        z = float(self.spec.params["squash"]) * (H @ self.beta)
        return _two_column(0.5 * (1.0 + np.tanh(0.5 * z)))

    def _posterior(self, X):
        return self.posterior_from_hidden(self.hidden(X))

    def with_rows(self, H_new, t_new) -> "ElmModel":
        """Model refitted after appending hidden rows ``H_new`` with targets ``t_new``."""
        gram = self.gram + H_new.T @ H_new
        rhs = self.rhs + H_new.T @ t_new
        beta = _ridge_solve(gram, rhs, float(self.spec.params["ridge"]))
        return ElmModel(self.spec, self.W, self.b, beta, gram, rhs)

    def state(self):
        return {"W": self.W.tolist(), "b": self.b.tolist(), "beta": self.beta.tolist()}


def _ridge_solve(gram, rhs, ridge):
    A = gram + ridge * np.eye(gram.shape[0])
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, rhs, rcond=None)[0]


def elm_targets(y) -> np.ndarray:
    return np.where(np.asarray(y) == PEAK, 1.0, -1.0)


def _fit_elm(spec, X, y):
    W, b = elm_hidden_weights(spec.params, X.shape[1])
    model = ElmModel(spec, W, b, None)
    H = model.hidden(X)
    t = elm_targets(y)
    gram = H.T @ H
    rhs = H.T @ t
    ridge = float(spec.params["ridge"])
    if ridge == 0.0:
        # plain least squares through an orthogonal decomposition
        beta = np.linalg.lstsq(H, t, rcond=None)[0]
    else:
        beta = _ridge_solve(gram, rhs, ridge)
    if not np.all(np.isfinite(beta)):
        raise FitError("ELM readout is not finite")
    return ElmModel(spec, W, b, beta, gram, rhs)


# -- Gaussian naive Bayes --------------------------------------------------


class NbModel(TrainedModel):
    """Per-class independent Gaussians with empirical class priors."""

    def __init__(self, spec, means, variances, log_prior):
        self.spec = spec
        self.means = np.asarray(means, dtype=np.float64)  # (2, d)
        self.variances = np.asarray(variances, dtype=np.float64)
        self.log_prior = np.asarray(log_prior, dtype=np.float64)
        self.n_features = self.means.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        out = np.empty((X.shape[0], 2))
        for c in (FALSE_PEAK, PEAK):
            var = self.variances[c]
            out[:, c] = self.log_prior[c] - 0.5 * np.sum(
                np.log(2.0 * np.pi * var) + (X - self.means[c]) ** 2 / var, axis=1)
        return out

    def _posterior(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def state(self):
        return {"means": self.means.tolist(), "variances": self.variances.tolist(),
                "log_prior": self.log_prior.tolist()}


def _fit_nb(spec, X, y):
    _require_both_classes(y, spec.kind)
    floor = float(spec.params["var_floor"])
    means, variances, priors = [], [], []
    for c in (FALSE_PEAK, PEAK):
        Xc = X[y == c]
        means.append(Xc.mean(axis=0))
        variances.append(np.maximum(Xc.var(axis=0), floor))
        priors.append(Xc.shape[0] / X.shape[0])
    return NbModel(spec, means, variances, np.log(priors))


# -- public surface --------------------------------------------------------

_FITTERS = {Kind.TREE: _fit_tree, Kind.KNN: _fit_knn, Kind.ELM: _fit_elm, Kind.NB: _fit_nb}


def fit(spec: ClassifierSpec, X, y) -> TrainedModel:
    """Fit ``spec`` on ``(X, y)``; deterministic for a given spec."""
    X, y = _as_xy(X, y)
    if X.shape[0] < 2:
        raise FitError("need at least two training rows")
    return _FITTERS[spec.kind](spec, X, y)


def predict(model: TrainedModel, X) -> np.ndarray:
    return model.predict(X)


def posterior(model: TrainedModel, X) -> np.ndarray:
    return model.posterior(X)


def model_from_dict(d) -> TrainedModel:
    spec = ClassifierSpec.from_dict(d["spec"])
    s = d["state"]
    if spec.kind is Kind.TREE:
        return TreeModel(spec, int(d["n_features"]), s["left"], s["right"], s["feature"],
                         s["threshold"], s["value"])
    if spec.kind is Kind.KNN:
        X = np.array(s["X"], dtype=np.float64).reshape(-1, int(d["n_features"]))
        return KnnModel(spec, X, np.array(s["y"]))
    if spec.kind is Kind.ELM:
        return ElmModel(spec, np.array(s["W"]).reshape(int(d["n_features"]), -1),
                        np.array(s["b"]), np.array(s["beta"]))
    return NbModel(spec, s["means"], s["variances"], s["log_prior"])


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))


# -- hyperparameter selection ---------------------------------------------


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold id per row; each class is dealt round-robin after a seeded shuffle."""
    y = np.asarray(y)
    rng = np.random.default_rng(int(seed))
    fold_of = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for c in (FALSE_PEAK, PEAK):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return fold_of


def cross_val_f1(spec: ClassifierSpec, X, y, folds: int = 3, seed: int = 0) -> float:
    X, y = _as_xy(X, y)
    fold_of = stratified_folds(y, folds, seed)
    scores = []
    for f in range(folds):
        test = fold_of == f
        model = fit(spec, X[~test], y[~test])
        scores.append(f1_score(y[test], model.predict(X[test])))
    return float(np.mean(scores))


def tune(kind, grid: Sequence[Mapping[str, Any]] | None, X, y, folds: int = 3,
         seed: int = 0, base: Mapping[str, Any] | None = None) -> ClassifierSpec:
    """Grid point with the best mean cross-validated F1 (first one on ties)."""
    kind = Kind(kind)
    grid = DEFAULT_GRIDS[kind] if grid is None else list(grid)
    if folds < 2:
        raise ValueError("tune needs at least two folds")
    if not grid:
        raise ValueError("empty hyperparameter grid")
    best, best_score, errors = None, -np.inf, []
    for point in grid:
        spec = ClassifierSpec(kind, {**(base or {}), **point})
        try:
            score = cross_val_f1(spec, X, y, folds, seed)
        except FitError as exc:
            errors.append(exc)
            continue
        if score > best_score:
            best, best_score = spec, score
    if best is None:
        raise FitError(f"every grid point failed to fit: {errors[0]}")
    return best
