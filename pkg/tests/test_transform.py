import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noisyprach.data import Dataset
from noisyprach.transform import (FeatureMatrix, PcaModel, PsrConfig, Space, pca_fit,
                                  pca_project, psr_embed, psr_features)

from conftest import find_number

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_psr_defaults_match_reference(source_text):
    assert PsrConfig().time_lag == find_number(source_text, r"time lag for PSR as (\d+)")
    assert PsrConfig().embed_dim == find_number(source_text, r"PSR and PCA to be (\d+) and \d+")


def test_psr_embed_small_example():
    out = psr_embed([1, 2, 3, 4, 5], PsrConfig(3, 1))
    np.testing.assert_array_equal(out, [[1, 2, 3], [2, 3, 4], [3, 4, 5]])


def test_psr_embed_identity_and_boundary():
    s = np.arange(7.0)
    np.testing.assert_array_equal(psr_embed(s, PsrConfig(1, 1)), s[:, None])
    np.testing.assert_array_equal(psr_embed(s, PsrConfig(7, 1)), s[None, :])
    with pytest.raises(ValueError):
        psr_embed(s[:6], PsrConfig(7, 1))


@given(s=arrays(np.float64, st.integers(1, 60), elements=finite),
       m=st.integers(1, 8), lag=st.integers(1, 4))
def test_psr_embed_rows_and_copies(s, m, lag):
    span = (m - 1) * lag + 1
    if s.size < span:
        with pytest.raises(ValueError):
            psr_embed(s, PsrConfig(m, lag))
        return
    out = psr_embed(s, PsrConfig(m, lag))
    assert out.shape == (s.size - (m - 1) * lag, m)
    for i in range(out.shape[0]):
        for j in range(m):
            # copy only: the bit pattern is the input's
            assert out[i, j].tobytes() == s[i + j * lag].tobytes()


def test_psr_features_shape_and_degenerate(small_dataset):
    d = small_dataset.subset(np.arange(100))
    fm = psr_features(d)
    assert fm.shape == (100, 28) and fm.space is Space.PSR
    np.testing.assert_array_equal(fm.labels, d.labels)
    np.testing.assert_array_equal(psr_features(d, PsrConfig(1, 1)).values, d.features)


def test_psr_constant_column():
    feats = np.column_stack([np.full(10, 2.5), np.arange(10.0), np.zeros(10), np.ones(10)])
    fm = psr_features(Dataset(feats, np.zeros(10)))
    np.testing.assert_array_equal(fm.values[:, :7], 2.5)


@settings(max_examples=30)
@given(n=st.integers(1, 30), m=st.integers(1, 8), lag=st.integers(1, 3))
def test_psr_features_edge_padding(n, m, lag):
    rng = np.random.default_rng(n * 100 + m)
    feats = rng.normal(size=(n, 4))
    fm = psr_features(Dataset(feats, rng.integers(0, 2, n)), PsrConfig(m, lag))
    assert fm.shape == (n, 4 * m)
    for c in range(4):
        for t in range(m):
            src = np.minimum(np.arange(n) + t * lag, n - 1)
            np.testing.assert_array_equal(fm.values[:, c * m + t], feats[src, c])


def test_pca_collinear_line():
    t = np.linspace(-3, 3, 25)
    model = pca_fit(np.column_stack([t, t]), k=2)
    np.testing.assert_allclose(model.components[0], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)
    assert model.eigenvalues[1] == pytest.approx(0.0, abs=1e-10)


def test_pca_trace_identity_against_direct_covariance(rng):
    x = rng.normal(size=(200, 4)) @ rng.normal(size=(4, 4))
    model = pca_fit(x, k=4)
    # independent oracle: covariance by explicit sums
    mu = x.sum(axis=0) / x.shape[0]
    cov = sum(np.outer(r - mu, r - mu) for r in x) / (x.shape[0] - 1)
    assert model.eigenvalues.sum() == pytest.approx(np.trace(cov), abs=1e-8)
    assert np.all(np.diff(model.eigenvalues) <= 0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 80), seed=st.integers(0, 10_000), k=st.integers(1, 4))
def test_pca_invariants(n, seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 4)) * rng.uniform(0.1, 3, size=4)
    model = pca_fit(x, k)
    C = model.components
    np.testing.assert_allclose(C @ C.T, np.eye(k), atol=1e-7)
    assert np.all(np.diff(model.eigenvalues) <= 1e-12)
    assert np.all(model.eigenvalues >= 0)
    idx = np.argmax(np.abs(C), axis=1)
    assert np.all(C[np.arange(k), idx] > 0)
    proj = pca_project(model, x).values
    np.testing.assert_allclose(proj.mean(axis=0), 0.0, atol=1e-7)
    # explained variance two ways
    full = pca_fit(x, 4)
    ratio_eig = model.eigenvalues.sum() / full.eigenvalues.sum()
    ratio_proj = proj.var(axis=0, ddof=1).sum() / x.var(axis=0, ddof=1).sum()
    assert ratio_eig == pytest.approx(ratio_proj, abs=1e-7)
    assert model.explained_variance_ratio() == pytest.approx(ratio_eig, abs=1e-7)


def test_pca_full_rank_preserves_distances_and_round_trips(rng):
    x = rng.normal(size=(30, 4))
    model = pca_fit(x, 4)
    p = pca_project(model, x).values
    d0 = np.linalg.norm(x[:, None] - x[None], axis=-1)
    d1 = np.linalg.norm(p[:, None] - p[None], axis=-1)
    np.testing.assert_allclose(d0, d1, atol=1e-8)
    np.testing.assert_allclose(p @ model.components + model.mean, x, atol=1e-8)
    np.testing.assert_allclose(pca_project(model, model.mean[None]).values, 0.0, atol=1e-12)


def test_pca_reduces_to_two_columns(small_dataset, source_text):
    k = int(find_number(source_text, r"PSR and PCA to be \d+ and (\d+)"))
    fm = pca_project(pca_fit(small_dataset, k), small_dataset)
    assert fm.shape == (len(small_dataset), 2) and fm.space is Space.PCA


def test_pca_errors(rng):
    x = rng.normal(size=(10, 4))
    with pytest.raises(ValueError):
        pca_fit(x, 5)
    with pytest.raises(ValueError):
        pca_fit(x[:1], 2)
    with pytest.raises(ValueError):
        pca_project(pca_fit(x, 2), x[:, :3])


def test_pca_equal_eigenvalues_follow_axis_order():
    x = np.array([[1, 0, 0, 0], [-1, 0, 0, 0], [0, 1, 0, 0], [0, -1, 0, 0]], dtype=float)
    model = pca_fit(x, 2)
    np.testing.assert_allclose(np.abs(model.components), [[1, 0, 0, 0], [0, 1, 0, 0]], atol=1e-12)


def test_pca_fit_takes_no_labels(small_dataset):
    a = pca_fit(small_dataset, 2)
    flipped = Dataset(small_dataset.features, 1 - small_dataset.labels)
    b = pca_fit(flipped, 2)
    np.testing.assert_array_equal(a.components, b.components)


def test_pca_model_and_matrix_round_trip(tmp_path, small_dataset):
    model = pca_fit(small_dataset, 2)
    model.save(tmp_path / "pca.json")
    back = PcaModel.load(tmp_path / "pca.json")
    np.testing.assert_array_equal(back.components, model.components)
    fm = pca_project(model, small_dataset)
    fm.to_csv(tmp_path / "m.csv")
    fm2 = FeatureMatrix.from_csv(tmp_path / "m.csv", Space.PCA)
    np.testing.assert_array_equal(fm2.values, fm.values)
    np.testing.assert_array_equal(fm2.labels, fm.labels)
    assert fm2.columns == ("pc1", "pc2")
