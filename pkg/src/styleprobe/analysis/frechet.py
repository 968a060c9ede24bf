"""Frechet distance between Gaussian fits of two feature populations.

Used over the probed classifier's own penultimate features as the
generation-quality metric: ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^1/2),
with the matrix square root taken by eigendecomposition of the symmetrized
product A^1/2 S_b A^1/2 (same trace as (S_a S_b)^1/2), negative eigenvalues
clamped to zero.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..exceptions import DegenerateCovariance

SHRINKAGE = 1e-6


def _psd_sqrt(sym):
    vals, vecs = np.linalg.eigh(sym)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_from_moments(mu_a, cov_a, mu_b, cov_b):
    """Closed-form Frechet distance between two Gaussians given moments."""
    mu_a = np.asarray(mu_a, dtype=np.float64)
    mu_b = np.asarray(mu_b, dtype=np.float64)
    cov_a = np.atleast_2d(np.asarray(cov_a, dtype=np.float64))
    cov_b = np.atleast_2d(np.asarray(cov_b, dtype=np.float64))
    root_a = _psd_sqrt(0.5 * (cov_a + cov_a.T))
    product = root_a @ cov_b @ root_a
    cross = _psd_sqrt(0.5 * (product + product.T))
    diff = mu_a - mu_b
    value = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(cross)
    return float(max(value, 0.0))


def _moments(features, shrinkage):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateCovariance(f"need a (n>=2, d) feature matrix, got {X.shape}")
    mu = X.mean(axis=0)
    cov = np.cov(X, rowvar=False)
    cov = np.atleast_2d(cov)
    if X.shape[0] <= X.shape[1]:
        warnings.warn(
            f"only {X.shape[0]} samples for {X.shape[1]}-dim features; "
            f"applying {shrinkage:g} covariance shrinkage", stacklevel=3)
        cov = cov + shrinkage * np.eye(cov.shape[0])
    if not np.all(np.isfinite(cov)):
        raise DegenerateCovariance("covariance has non-finite entries")
    return mu, cov


def frechet_feature_distance(features_a, features_b, shrinkage=SHRINKAGE):
    """Frechet distance between Gaussian fits of two feature sets.

    When a set has fewer samples than feature dimensions its covariance gets
    ``shrinkage`` * I added (with a warning) instead of failing.
    """
    mu_a, cov_a = _moments(features_a, shrinkage)
    mu_b, cov_b = _moments(features_b, shrinkage)
    return frechet_from_moments(mu_a, cov_a, mu_b, cov_b)
