import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyprach.classifiers import ClassifierSpec, Kind, fit
from noisyprach.data import FALSE_PEAK, PEAK
from noisyprach.evaluation import stratified_split
from noisyprach.metrics import f1_score
from noisyprach.prach_gen import GenConfig, generate_dataset
from noisyprach.sampling import (EPS, SamplingConfig, initial_split, knn_density, pool_densities,
                                 rank_informative, select_informative, self_train,
                                 uncertainty_from_posterior, write_audit_csv)


class _FixedPosterior:
    """Stand-in model returning a preset posterior per row."""

    def __init__(self, post):
        self.post = np.asarray(post, dtype=float)

    def posterior(self, X):
        return self.post[: len(X)]


def _two_clusters(n=40, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, 2)) * 0.3 - 2
    b = rng.normal(size=(n, 2)) * 0.3 + 2
    return np.vstack([a, b]), np.array([0] * n + [1] * n, dtype=np.int8)


# -- density and uncertainty ----------------------------------------------


def test_density_unit_distances_hand_value():
    pool = np.array([[1.0, 0], [0, 1.0], [-1.0, 0], [5, 5], [9, 9]])
    assert knn_density([0, 0], pool, 3) == pytest.approx(1.0 / (EPS + 1.0), rel=1e-15)


def test_density_duplicates_are_maximal():
    x = np.array([0.3, -0.2])
    pool = np.vstack([np.tile(x, (3, 1)), [[4, 4]]])
    assert knn_density(x, pool, 3) == pytest.approx(1.0 / EPS)


@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_density_scaling_homogeneity(seed, scale):
    rng = np.random.default_rng(seed)
    pool = rng.normal(size=(12, 3))
    x = rng.normal(size=3)
    d1 = 1.0 / knn_density(x, pool, 4) - EPS
    d2 = 1.0 / knn_density(scale * x, scale * pool, 4) - EPS
    assert d2 == pytest.approx(scale * d1, rel=1e-6, abs=1e-8)


def test_density_pool_too_small():
    with pytest.raises(ValueError):
        knn_density([0, 0], np.zeros((2, 2)), 3)


def test_pool_densities_brute_force(rng):
    pool = rng.normal(size=(30, 4))
    d = np.linalg.norm(pool[:, None] - pool[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    expected = 1.0 / (EPS + np.sort(d, axis=1)[:, :5].mean(axis=1))
    np.testing.assert_allclose(pool_densities(pool, 5), expected, rtol=1e-12)


@pytest.mark.parametrize("post,expected", [((1.0, 0.0), 0.0), ((0.5, 0.5), 1.0),
                                           ((0.75, 0.25), 0.5), ((0.25, 0.75), 0.5)])
def test_uncertainty_values(post, expected):
    assert uncertainty_from_posterior(np.array([post]))[0] == pytest.approx((1 - max(post)) / 0.5)
    assert uncertainty_from_posterior(np.array([post]))[0] == pytest.approx(expected)


@given(st.floats(0, 1))
def test_uncertainty_range_and_symmetry(p):
    post = np.array([[p, 1 - p], [1 - p, p]])
    for m in ("least_confident", "margin", "entropy"):
        u = uncertainty_from_posterior(post, m)
        assert 0.0 <= u[0] <= 1.0
        assert u[0] == u[1]


# -- selection -------------------------------------------------------------


def test_budget_exceeds_pool():
    pool = np.array([[0.0, 0], [1, 1], [2, 2]])
    model = _FixedPosterior([[0.6, 0.4]] * 3)
    out = select_informative(pool, model, SamplingConfig(J=20, k_density=1))
    assert sorted(s.row_index for s in out) == [0, 1, 2]


def test_equal_scores_tie_break_by_index():
    out = rank_informative(np.arange(10), np.ones(10), np.full(10, 0.3), 4)
    assert [s.row_index for s in out] == [0, 1, 2, 3]


def test_empty_pool():
    assert select_informative(np.empty((0, 2)), _FixedPosterior([]), SamplingConfig()) == []


def test_duplicated_boundary_row_ranks_first_exhaustive():
    X, y = _two_clusters()
    model = fit(ClassifierSpec(Kind.NB), X, y)
    # pool: the two clusters plus one boundary point repeated many times
    rng = np.random.default_rng(5)
    pool = np.vstack([rng.normal(size=(15, 2)) * 0.3 - 2, rng.normal(size=(15, 2)) * 0.3 + 2,
                      np.tile([[0.05, -0.02]], (8, 1))])
    cfg = SamplingConfig(J=len(pool), k_density=5)
    got = select_informative(pool, model, cfg)

    # exhaustive oracle
    n = len(pool)
    dens = []
    for i in range(n):
        dist = sorted(float(np.hypot(*(pool[i] - pool[j]))) for j in range(n) if j != i)
        dens.append(1.0 / (EPS + sum(dist[:5]) / 5))
    post = model.posterior(pool)
    unc = [(1.0 - max(p)) / 0.5 for p in post]
    mm = lambda v: [(x - min(v)) / (max(v) - min(v)) for x in v]  # noqa: E731
    score = [a * b for a, b in zip(mm(dens), mm(unc))]
    order = sorted(range(n), key=lambda i: (-score[i], i))
    assert [s.row_index for s in got] == order
    assert got[0].row_index >= 30  # a copy of the boundary point
    for s in got:
        assert s.informativeness == pytest.approx(s.density * s.uncertainty, abs=1e-12)


@settings(max_examples=60)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 25), drop=st.floats(0.0, 5.0))
def test_lower_density_never_improves_rank(seed, n, drop):
    rng = np.random.default_rng(seed)
    dens = rng.uniform(0.1, 5, n)
    unc = rng.uniform(0, 1, n)
    i = int(rng.integers(n))
    rank = lambda d: [s.row_index for s in rank_informative(np.arange(n), d, unc, n)].index(i)  # noqa: E731
    before = rank(dens)
    lowered = dens.copy()
    lowered[i] = max(1e-6, dens[i] - drop)
    assert rank(lowered) >= before


def test_selection_deterministic(rng):
    X, y = _two_clusters()
    model = fit(ClassifierSpec(Kind.KNN, {"k": 3}), X, y)
    pool = rng.normal(size=(50, 2)) * 2
    a = select_informative(pool, model, SamplingConfig(J=7))
    b = select_informative(pool.copy(), model, SamplingConfig(J=7))
    assert a == b


# -- self-training loop ----------------------------------------------------


def test_empty_pool_single_fit_equals_plain():
    X, y = _two_clusters()
    spec = ClassifierSpec(Kind.ELM, {"hidden_units": 16})
    res = self_train(X, y, np.empty((0, 2)), spec, SamplingConfig())
    assert res.n_cycles == 0 and res.n_fits == 1
    plain = fit(spec, X, y)
    np.testing.assert_array_equal(res.model.posterior(X), plain.posterior(X))


def test_cycle_sizes_for_45_rows():
    X, y = _two_clusters(10)
    pool = np.random.default_rng(2).normal(size=(45, 2)) * 2
    res = self_train(X, y, pool, ClassifierSpec(Kind.NB), SamplingConfig(J=20))
    assert [len(c.moved) for c in res.log] == [20, 20, 5]


@settings(max_examples=25, deadline=None)
@given(n_pool=st.integers(0, 70), J=st.integers(1, 30), seed=st.integers(0, 1000),
       kind=st.sampled_from(list(Kind)))
def test_cycle_count_and_partition(n_pool, J, seed, kind):
    rng = np.random.default_rng(seed)
    X, y = _two_clusters(8, seed)
    pool = rng.normal(size=(n_pool, 2)) * 2
    res = self_train(X, y, pool, ClassifierSpec(kind), SamplingConfig(J=J, k_density=3))
    assert res.n_cycles == math.ceil(n_pool / J)
    moved = [i for c in res.log for i in c.moved]
    assert sorted(moved) == list(range(n_pool))  # each row moves exactly once
    seen = set()
    for c in res.log:
        # train and remaining pool partition the rows at every boundary
        seen.update(c.moved)
        assert c.train_size == len(X) + len(seen)
    assert len(res.y) == len(X) + n_pool
    assert set(np.unique(res.pool_labels)) <= {FALSE_PEAK, PEAK}


def _reference_self_train(X0, y0, pool, spec, cfg):
    """Straightforward loop: refit from scratch, score the remaining pool by brute force."""
    X, y = X0.copy(), y0.copy()
    remaining = list(range(len(pool)))
    moved_all = []
    while remaining:
        model = fit(spec, X, y)
        P = pool[remaining]
        post = model.posterior(P)
        unc = uncertainty_from_posterior(post)
        if len(remaining) > 1:
            d = np.linalg.norm(P[:, None] - P[None], axis=-1)
            np.fill_diagonal(d, np.inf)
            k = min(cfg.k_density, len(remaining) - 1)
            dens = 1.0 / (EPS + np.sort(d, axis=1)[:, :k].mean(axis=1))
        else:
            dens = np.ones(1)
        chosen = rank_informative(np.array(remaining), dens, unc, cfg.J)
        rows = [s.row_index for s in chosen]
        pos = [remaining.index(r) for r in rows]
        labels = np.where(post[pos, PEAK] > post[pos, FALSE_PEAK], PEAK, FALSE_PEAK)
        X = np.vstack([X, pool[rows]])
        y = np.concatenate([y, labels]).astype(np.int8)
        remaining = [r for r in remaining if r not in rows]
        moved_all.append(rows)
    return moved_all, y


@pytest.mark.parametrize("kind", list(Kind))
def test_incremental_loop_matches_reference(kind):
    rng = np.random.default_rng(9)
    X0, y0 = _two_clusters(6, 3)
    pool = rng.normal(size=(90, 2)) * 1.5
    spec = ClassifierSpec(kind, {"k": 3} if kind is Kind.KNN else {})
    cfg = SamplingConfig(J=7, k_density=4)
    res = self_train(X0, y0, pool, spec, cfg)
    moved, y = _reference_self_train(X0, y0, pool, spec, cfg)
    assert [c.moved for c in res.log] == moved
    np.testing.assert_array_equal(res.y, y)


def test_true_label_mode_and_audit(tmp_path):
    X, y = _two_clusters(10)
    rng = np.random.default_rng(0)
    pool = np.vstack([rng.normal(size=(10, 2)) - 2, rng.normal(size=(10, 2)) + 2])
    pool_y = np.array([0] * 10 + [1] * 10)
    res = self_train(X, y, pool, ClassifierSpec(Kind.NB), SamplingConfig(J=6, pseudo_labels=False),
                     pool_y=pool_y)
    np.testing.assert_array_equal(res.pool_labels, pool_y)
    assert all(c.n_label_disagreements is not None for c in res.log)
    write_audit_csv(res.log, tmp_path / "audit.csv")
    lines = (tmp_path / "audit.csv").read_text().splitlines()
    assert lines[0].startswith("cycle,train_size,n_moved")
    assert len(lines) == 1 + res.n_cycles
    with pytest.raises(ValueError):
        self_train(X, y, pool, ClassifierSpec(Kind.NB), SamplingConfig(pseudo_labels=False))


def test_initial_split_stratified_partition():
    y = np.array([0] * 92 + [1] * 8)
    t0, pool = initial_split(y, 0.1, 3)
    assert np.sum(y[t0] == 0) == 9 and np.sum(y[t0] == 1) == 1
    assert sorted(np.concatenate([t0, pool]).tolist()) == list(range(100))
    np.testing.assert_array_equal(initial_split(y, 0.1, 3)[0], t0)


def _clean_gap(kind, seed):
    """Held-out F1 of self-training minus a plain fit on the same initial set."""
    d = generate_dataset(GenConfig(n_records=2000, seed=100 + seed))
    train, test = stratified_split(d, 0.7, seed)
    # the raw features are where clean data is separable
    Xtr, Xte, ytr = train.features, test.features, train.labels
    spec = ClassifierSpec(kind)
    t0, pool = initial_split(ytr, 0.1, seed)
    plain = f1_score(test.labels, fit(spec, Xtr[t0], ytr[t0]).predict(Xte))
    res = self_train(Xtr[t0], ytr[t0], Xtr[pool], spec, SamplingConfig(seed=seed))
    return f1_score(test.labels, res.model.predict(Xte)) - plain


@pytest.mark.parametrize("kind", list(Kind))
def test_self_training_holds_up_on_clean_data(kind):
    gaps = [_clean_gap(kind, seed) for seed in range(5)]
    assert np.mean(gaps) >= -0.01, gaps


def test_config_validation():
    for bad in ({"initial_fraction": 0.0}, {"initial_fraction": 1.0}, {"J": 0},
                {"k_density": 0}, {"uncertainty": "vote"}):
        with pytest.raises(ValueError):
            SamplingConfig(**bad)
