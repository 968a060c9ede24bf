"""Exact t-SNE (O(n^2)) for visualizing latent populations in 2-D.

Per-point Gaussian bandwidths are solved by binary search so each
conditional distribution matches the requested perplexity; the low-dimensional
kernel is Student-t with one degree of freedom. Gradient descent runs with
early exaggeration, momentum switching and per-coordinate gains. Everything
is seeded, so embeddings are reproducible.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import BadPerplexity, TooManyPoints
from ..validation import as_rng

MIN_POINTS = 10
MAX_POINTS = 5000
_EPS = 1e-12


def _pairwise_sq_dists(X):
    sq = (X ** 2).sum(axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _conditional_probs(sq_dists, perplexity, tol=1e-5, max_iter=60):
    """Row-stochastic affinities whose entropy matches log(perplexity),
    bandwidth found by binary search per point."""
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        row = sq_dists[i]
        for _ in range(max_iter):
            p = np.exp(-row * beta)
            p[i] = 0.0
            total = max(p.sum(), _EPS)
            p /= total
            sum_dist = (row * p).sum()
            entropy = np.log(total) + beta * sum_dist
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else 0.5 * (beta + beta_max)
            else:
                beta_max = beta
                beta = beta * 0.5 if beta_min == -np.inf else 0.5 * (beta + beta_min)
        P[i] = p
    return P


def tsne_project(X, perplexity=30.0, iterations=500, seed=0, learning_rate=200.0,
                 early_exaggeration=12.0, exaggeration_iters=250, momentum=0.5,
                 late_momentum=0.8, return_conditionals=False):
    """Embed row vectors into 2-D with exact t-SNE; deterministic given seed."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not MIN_POINTS <= n <= MAX_POINTS:
        raise TooManyPoints(f"exact t-SNE supports {MIN_POINTS}..{MAX_POINTS} "
                            f"points, got {n}")
    if perplexity <= 1 or perplexity >= n / 3:
        raise BadPerplexity(f"perplexity must lie in (1, n/3); got {perplexity} "
                            f"for n={n}")

    cond = _conditional_probs(_pairwise_sq_dists(X), perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, _EPS)

    rng = as_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    P_run = P * early_exaggeration

    for it in range(iterations):
        if it == exaggeration_iters:
            P_run = P
        mom = momentum if it < exaggeration_iters else late_momentum

        num = 1.0 / (1.0 + _pairwise_sq_dists(Y))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), _EPS)

        PQ = (P_run - Q) * num
        grad = 4.0 * ((np.diag(PQ.sum(axis=1)) - PQ) @ Y)

        inc = (update * grad) < 0
        gains[inc] += 0.2
        gains[~inc] *= 0.8
        np.clip(gains, 0.01, None, out=gains)
        update = mom * update - learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)

    if return_conditionals:
        return Y, cond
    return Y


class TSNEEmbedding(BaseEstimator):
    """Estimator wrapper around :func:`tsne_project` (fit_transform style)."""

    def __init__(self, perplexity=30.0, iterations=500, seed=0,
                 learning_rate=200.0):
        self.perplexity = perplexity
        self.iterations = iterations
        self.seed = seed
        self.learning_rate = learning_rate

    def fit(self, X, y=None):
        self.embedding_ = tsne_project(
            X, perplexity=self.perplexity, iterations=self.iterations,
            seed=self.seed, learning_rate=self.learning_rate)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


def standardize_columns(X):
    """Per-dimension standardization used before embedding style vectors;
    style coordinates have heterogeneous scales, and distance-based views
    treat them on equal footing (no-op for already-standard spaces)."""
    X = np.asarray(X, dtype=np.float64)
    return (X - X.mean(axis=0)) / np.maximum(X.std(axis=0), 1e-9)


def silhouette(points, labels):
    """Mean silhouette coefficient of labeled 2-D points (O(n^2))."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    n = points.shape[0]
    d = np.sqrt(_pairwise_sq_dists(points))
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("silhouette needs at least two classes")
    scores = np.zeros(n)
    for i in range(n):
        same = labels == labels[i]
        n_same = same.sum()
        if n_same <= 1:
            continue
        a = d[i, same].sum() / (n_same - 1)
        b = min(d[i, labels == c].mean() for c in classes if c != labels[i])
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())
