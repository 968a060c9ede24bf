"""Input validation helpers shared by the estimators and analysis functions."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidClass, ShapeMismatch

IMAGE_SIDE = 28
N_CLASSES = 10


def as_rng(seed):
    """Return a numpy Generator from a seed, Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_float_array(x, dtype=np.float64):
    a = np.asarray(x, dtype=dtype)
    return a


def check_image_batch(X, dtype=np.float32):
    """Coerce input images to a (n, 28, 28) float array.

    Accepts (28, 28), (n, 28, 28), (n, 784) or (n, 1, 28, 28) layouts so the
    estimators compose with flat-feature pipelines.
    """
    X = np.asarray(X, dtype=dtype)
    side = IMAGE_SIDE
    if X.ndim == 2 and X.shape == (side, side):
        X = X[None]
    elif X.ndim == 2 and X.shape[1] == side * side:
        X = X.reshape(-1, side, side)
    elif X.ndim == 4 and X.shape[1] == 1 and X.shape[2:] == (side, side):
        X = X[:, 0]
    elif X.ndim == 3 and X.shape[1:] == (side, side):
        pass
    else:
        raise ShapeMismatch(
            f"expected images shaped (n, {side}, {side}), (n, {side * side}) "
            f"or ({side}, {side}); got {X.shape}"
        )
    return X


def check_labels(y, n, n_classes=N_CLASSES):
    y = np.asarray(y)
    if y.shape != (n,):
        raise ShapeMismatch(f"expected {n} labels, got shape {y.shape}")
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise InvalidClass(f"labels must lie in [0, {n_classes})")
    return y


def check_class_index(k, n_classes=N_CLASSES):
    k = int(k)
    if not 0 <= k < n_classes:
        raise InvalidClass(f"class {k} outside [0, {n_classes})")
    return k


def check_style_matrix(S, d_s, dtype=np.float64):
    S = np.asarray(S, dtype=dtype)
    if S.ndim == 1:
        S = S[None]
    if S.ndim != 2 or S.shape[1] != d_s:
        raise ShapeMismatch(f"expected style vectors of dimension {d_s}, got {S.shape}")
    return S
