"""Exact t-SNE and the Frechet feature distance."""

import warnings

import numpy as np
import pytest

from styleprobe.analysis import (
    TSNEEmbedding,
    frechet_feature_distance,
    frechet_from_moments,
    silhouette,
    tsne_project,
)
from styleprobe.analysis.embedding import _conditional_probs, _pairwise_sq_dists
from styleprobe.exceptions import BadPerplexity, DegenerateCovariance, TooManyPoints


def _two_blobs(n_per=20, gap=25.0, dim=5, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_per, dim))
    b = rng.standard_normal((n_per, dim))
    b[:, 0] += gap
    X = np.vstack([a, b])
    labels = np.array([0] * n_per + [1] * n_per)
    return X, labels


def test_conditional_rows_sum_to_one():
    X, _ = _two_blobs()
    P = _conditional_probs(_pairwise_sq_dists(X), perplexity=10.0)
    np.testing.assert_allclose(P.sum(axis=1), np.ones(len(X)), atol=1e-5)
    assert np.all(np.diag(P) == 0.0)


def test_tsne_separates_two_blobs_linearly():
    X, labels = _two_blobs()
    Y = tsne_project(X, perplexity=10.0, iterations=400, seed=1)
    # Independent check: project onto the line between class means and
    # threshold at the midpoint; that linear rule must get >= 95% right.
    mu0, mu1 = Y[labels == 0].mean(axis=0), Y[labels == 1].mean(axis=0)
    axis = mu1 - mu0
    score = (Y - (mu0 + mu1) / 2) @ axis
    acc = ((score > 0).astype(int) == labels).mean()
    assert max(acc, 1 - acc) >= 0.95


def test_tsne_deterministic():
    X, _ = _two_blobs(seed=3)
    a = tsne_project(X, perplexity=8.0, iterations=150, seed=42)
    b = tsne_project(X, perplexity=8.0, iterations=150, seed=42)
    np.testing.assert_array_equal(a, b)


def test_tsne_point_count_limits():
    with pytest.raises(TooManyPoints):
        tsne_project(np.zeros((9, 3)), perplexity=2.0)
    with pytest.raises(TooManyPoints):
        tsne_project(np.zeros((5001, 3)), perplexity=30.0)


def test_tsne_perplexity_limits():
    X, _ = _two_blobs()  # 40 points: perplexity must stay below 40/3
    with pytest.raises(BadPerplexity):
        tsne_project(X, perplexity=14.0)
    with pytest.raises(BadPerplexity):
        tsne_project(X, perplexity=0.5)


def test_tsne_estimator_wrapper():
    X, labels = _two_blobs(seed=5)
    emb = TSNEEmbedding(perplexity=10.0, iterations=150, seed=7)
    Y = emb.fit_transform(X)
    assert Y.shape == (len(X), 2)
    np.testing.assert_array_equal(Y, emb.embedding_)
    assert emb.get_params()["perplexity"] == 10.0


def test_silhouette_prefers_separated_clusters():
    rng = np.random.default_rng(0)
    labels = np.array([0] * 30 + [1] * 30)
    tight = np.concatenate([rng.normal(0, 0.1, (30, 2)),
                            rng.normal(5, 0.1, (30, 2))])
    mixed = rng.normal(0, 1.0, (60, 2))
    assert silhouette(tight, labels) > 0.9
    assert silhouette(tight, labels) > silhouette(mixed, labels)


# ------------------------------------------------------------------ frechet

def test_frechet_identical_sets_is_zero():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((300, 8))
    assert frechet_feature_distance(X, X) < 1e-6


def test_frechet_mean_shift_closed_form():
    # Identical identity covariances: distance reduces to ||d||^2 exactly.
    d = np.array([1.0, -2.0, 0.5])
    eye = np.eye(3)
    got = frechet_from_moments(np.zeros(3), eye, d, eye)
    assert got == pytest.approx(float(d @ d), rel=1e-12)


def test_frechet_scale_only_closed_form():
    # Same mean, covariances a*I and b*I: trace term gives d(a,b) = dim*(sqrt(a)-sqrt(b))^2.
    a, b, dim = 4.0, 1.0, 6
    got = frechet_from_moments(np.zeros(dim), a * np.eye(dim),
                               np.zeros(dim), b * np.eye(dim))
    assert got == pytest.approx(dim * (np.sqrt(a) - np.sqrt(b)) ** 2, rel=1e-9)


def test_frechet_detects_distribution_shift():
    rng = np.random.default_rng(2)
    base = rng.standard_normal((400, 16))
    near = rng.standard_normal((400, 16))
    far = rng.standard_normal((400, 16)) * 3.0 + 4.0
    assert frechet_feature_distance(base, near) < frechet_feature_distance(base, far)


def test_frechet_shrinkage_warns_on_few_samples():
    rng = np.random.default_rng(3)
    small = rng.standard_normal((10, 16))
    other = rng.standard_normal((100, 16))
    with pytest.warns(UserWarning):
        frechet_feature_distance(small, other)


def test_frechet_rejects_degenerate_input():
    with pytest.raises(DegenerateCovariance):
        frechet_feature_distance(np.zeros((1, 4)), np.zeros((10, 4)))
    bad = np.full((10, 4), np.nan)
    with pytest.raises(DegenerateCovariance):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            frechet_feature_distance(bad, np.zeros((10, 4)))