import math

import numpy as np
import pytest

from hyposcreen.errors import (
    DataError,
    SingleCluster,
    TooFewColumns,
    TooFewRows,
    TooManyFeatures,
)
from hyposcreen.explain import (
    exact_shapley_oracle,
    mean_abs_shap,
    pca_project,
    silhouette_score,
    tree_shap,
)
from hyposcreen.model.histboost import BoostParams, fit_histgbm, predict_raw
from hyposcreen.util import sigmoid


def _fit_small_model(rng, d, n=90, n_trees=3, max_leaves=6, msl=5,
                     max_bins=16):
    X = rng.normal(size=(n, d))
    logit = 1.2 * X[:, 0] - 0.8 * X[:, d - 1] + 0.3 * X[:, 0] * X[:, d - 1]
    y = (rng.random(n) < sigmoid(logit)).astype(float)
    if y.min() == y.max():
        y[0] = 1.0 - y[0]
    params = BoostParams(n_trees=n_trees, max_leaves=max_leaves,
                         min_samples_leaf=msl, max_bins=max_bins)
    return fit_histgbm(X, y, params, seed=int(rng.integers(1 << 30))), X


# --- TreeSHAP vs exact enumeration --------------------------------------------------

def test_tree_shap_matches_exact_shapley_on_many_instances():
    rng = np.random.default_rng(100)
    instances = 0
    for m in range(12):
        d = int(rng.integers(2, 11))
        model, X = _fit_small_model(rng, d,
                                    n_trees=int(rng.integers(1, 5)),
                                    max_leaves=int(rng.integers(3, 9)))
        for _ in range(10):
            row = rng.normal(size=d) * 1.5
            fast = tree_shap(model, row)
            slow = exact_shapley_oracle(model, row)
            assert np.max(np.abs(fast.phi - slow.phi)) < 1e-9
            assert abs(fast.base_value - slow.base_value) < 1e-9
            instances += 1
    assert instances == 120


def test_tree_shap_with_repeated_feature_on_deep_paths():
    # few features and many leaves force the same feature to reappear
    # along a single root-to-leaf path
    rng = np.random.default_rng(101)
    for _ in range(6):
        X = rng.normal(size=(200, 2))
        y = ((np.sin(2.0 * X[:, 0]) + 0.2 * X[:, 1]) > 0).astype(float)
        model = fit_histgbm(X, y, BoostParams(n_trees=2, max_leaves=16,
                                              min_samples_leaf=3,
                                              max_bins=32), seed=7)
        depths_reuse = any(
            len({int(f) for f in t.feature if f >= 0}) <
            int(np.sum(t.feature >= 0))
            for t in model.trees)
        assert depths_reuse
        for _ in range(8):
            row = rng.normal(size=2) * 2.0
            fast = tree_shap(model, row)
            slow = exact_shapley_oracle(model, row)
            assert np.max(np.abs(fast.phi - slow.phi)) < 1e-9


def test_local_accuracy_additivity():
    rng = np.random.default_rng(102)
    # includes a model wider than the exact-enumeration guard
    for d in (3, 8, 20):
        model, X = _fit_small_model(rng, d, n=150, n_trees=6, max_leaves=8)
        for i in range(15):
            att = tree_shap(model, X[i])
            assert abs(att.base_value + att.phi.sum()
                       - att.raw_prediction) < 1e-9
            assert att.raw_prediction == predict_raw(model, X[i][None, :])[0]


def test_base_value_is_cover_weighted_expectation():
    rng = np.random.default_rng(103)
    model, X = _fit_small_model(rng, 4, n_trees=3)
    expect = model.base_score
    for tree in model.trees:
        leaves = tree.feature < 0
        expect += model.params.learning_rate * float(
            np.sum(tree.value[leaves] * tree.cover[leaves]) / tree.cover[0])
    att = tree_shap(model, X[0])
    assert math.isclose(att.base_value, expect, rel_tol=1e-12)


def test_mean_abs_shap_matches_rowwise_mean():
    rng = np.random.default_rng(104)
    model, X = _fit_small_model(rng, 5)
    rows = X[:12]
    manual = np.mean([np.abs(tree_shap(model, r).phi) for r in rows], axis=0)
    assert np.allclose(mean_abs_shap(model, rows), manual, atol=1e-12)


def test_exact_oracle_guards_wide_models():
    rng = np.random.default_rng(105)
    model, X = _fit_small_model(rng, 16, n=120)
    with pytest.raises(TooManyFeatures):
        exact_shapley_oracle(model, X[0])
    with pytest.raises(DataError):
        tree_shap(model, X[:2])


# --- PCA ---------------------------------------------------------------------------

def _jacobi_eigh(A, sweeps=60):
    """Cyclic Jacobi rotations on a symmetric matrix; independent of the
    package's power iteration."""
    A = A.copy()
    d = A.shape[0]
    V = np.eye(d)
    for _ in range(sweeps):
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                off = max(off, abs(A[p, q]))
                if abs(A[p, q]) < 1e-14:
                    continue
                theta = 0.5 * math.atan2(2.0 * A[p, q], A[p, p] - A[q, q])
                c, s = math.cos(theta), math.sin(theta)
                R = np.eye(d)
                R[p, p] = R[q, q] = c
                R[p, q] = -s
                R[q, p] = s
                A = R.T @ A @ R
                V = V @ R
        if off < 1e-14:
            break
    lams = np.diag(A)
    order = np.argsort(-lams)
    return lams[order], V[:, order]


def test_pca_against_jacobi_oracle():
    rng = np.random.default_rng(106)
    compared = 0
    for trial in range(40):
        n = int(rng.integers(30, 80))
        d = int(rng.integers(3, 8))
        mix = rng.normal(size=(d, d))
        X = rng.normal(size=(n, d)) @ mix
        proj = pca_project(X, n_components=2)
        Z = (X - X.mean(axis=0)) / X.std(axis=0)
        C = Z.T @ Z / n
        lams, vecs = _jacobi_eigh(C)
        # skip spectra too degenerate for a fixed-tolerance comparison
        if lams[0] - lams[1] < 0.05 or lams[1] - lams[2] < 0.05:
            continue
        got = proj.explained * d
        assert abs(got[0] - lams[0]) < 1e-8
        assert abs(got[1] - lams[1]) < 1e-8
        for j in (0, 1):
            cosine = abs(float(proj.components[:, j] @ vecs[:, j]))
            assert cosine > 1.0 - 1e-8
        compared += 1
    assert compared >= 20


def test_pca_structure_and_sign_convention():
    rng = np.random.default_rng(107)
    X = rng.normal(size=(60, 5))
    X[:, 2] = 3.0 * X[:, 0] + rng.normal(size=60) * 0.01
    proj = pca_project(X)
    V = proj.components
    assert V.shape == (5, 2)
    assert np.allclose(V.T @ V, np.eye(2), atol=1e-8)
    for j in (0, 1):
        peak = np.argmax(np.abs(V[:, j]))
        assert V[peak, j] > 0
    Z = (X - X.mean(axis=0)) / X.std(axis=0)
    assert np.allclose(proj.coords, Z @ V, atol=1e-12)
    lam = np.array([float(v @ (Z.T @ Z / 60) @ v) for v in V.T])
    assert np.allclose(proj.explained, lam / 5.0, atol=1e-8)
    assert proj.explained[0] >= proj.explained[1] >= 0.0
    assert sum(proj.explained) <= 1.0 + 1e-12


def test_pca_drops_constant_columns_and_guards():
    rng = np.random.default_rng(108)
    X = rng.normal(size=(30, 4))
    X[:, 1] = 7.0
    proj = pca_project(X)
    assert proj.dropped_columns == [1]
    assert proj.kept_columns == [0, 2, 3]
    assert proj.components.shape == (3, 2)
    with pytest.raises(TooFewRows):
        pca_project(X[:1])
    with pytest.raises(TooFewColumns):
        pca_project(np.full((10, 3), 2.0))


# --- silhouette ------------------------------------------------------------------

def test_silhouette_hand_fixture():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [4.0, 0.0], [4.0, 1.0]])
    labels = np.array([0, 0, 1, 1])
    b = (4.0 + math.sqrt(17.0)) / 2.0
    expected = (b - 1.0) / b
    assert math.isclose(silhouette_score(pts, labels), expected, rel_tol=1e-12)


def test_silhouette_against_naive_oracle():
    rng = np.random.default_rng(109)
    for trial in range(25):
        n = int(rng.integers(4, 30))
        k = int(rng.integers(2, 4))
        pts = rng.normal(size=(n, 3))
        labels = rng.integers(0, k, size=n)
        if np.unique(labels).size < 2:
            labels[0] = (labels[0] + 1) % k

        def dist(i, j):
            return math.sqrt(sum((pts[i, c] - pts[j, c]) ** 2
                                 for c in range(3)))

        scores = []
        for i in range(n):
            own = [j for j in range(n) if labels[j] == labels[i] and j != i]
            if not own:
                scores.append(0.0)
                continue
            a = sum(dist(i, j) for j in own) / len(own)
            b = math.inf
            for other in set(labels.tolist()) - {labels[i]}:
                members = [j for j in range(n) if labels[j] == other]
                b = min(b, sum(dist(i, j) for j in members) / len(members))
            m = max(a, b)
            scores.append(0.0 if m == 0.0 else (b - a) / m)
        assert math.isclose(silhouette_score(pts, labels),
                            sum(scores) / n, abs_tol=1e-12)


def test_silhouette_singletons_and_errors():
    pts = np.array([[0.0, 0.0], [0.1, 0.0], [9.0, 9.0]])
    labels = np.array([0, 0, 1])
    score = silhouette_score(pts, labels)
    # the singleton contributes exactly 0
    assert 0.0 < score < 1.0
    with pytest.raises(SingleCluster):
        silhouette_score(pts, np.zeros(3))
    with pytest.raises(TooFewRows):
        silhouette_score(pts[:2], labels[:2])
    with pytest.raises(DataError):
        silhouette_score(pts, labels[:2])
