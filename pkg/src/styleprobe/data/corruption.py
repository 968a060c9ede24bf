"""Severity-parameterized Gaussian noise and blur, and the half-clean corpus.

Corruption order is blur first, then noise; noisy pixels are clamped back to
[0, 1]. Blur uses a separable discrete Gaussian whose truncated edge taps are
renormalized, so constant images stay constant all the way to the border.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..exceptions import EmptyDataset
from ..validation import as_rng, check_image_batch
from .dataset import LabeledImage

LEVELS = (1, 2, 3)


@dataclass
class SeverityConfig:
    """Noise/blur strength per severity level; sigmas must increase with level."""

    noise_sigma: dict = field(default_factory=lambda: {1: 0.08, 2: 0.12, 3: 0.18})
    blur_sigma: dict = field(default_factory=lambda: {1: 0.5, 2: 1.0, 3: 1.5})
    blur_radius: dict = None

    def __post_init__(self):
        for name, table in (("noise_sigma", self.noise_sigma),
                            ("blur_sigma", self.blur_sigma)):
            values = [table[level] for level in LEVELS]
            # Strictly increasing, except the degenerate all-equal config
            # (e.g. all zeros) used to disable one corruption for diagnostics.
            increasing = all(b > a for a, b in zip(values, values[1:]))
            if not increasing and len(set(values)) != 1:
                raise ValueError(f"{name} must be strictly increasing with level")
        if self.blur_radius is None:
            self.blur_radius = {
                level: max(1, math.ceil(2.0 * self.blur_sigma[level]))
                for level in LEVELS
            }
        for level in LEVELS:
            if self.blur_radius[level] < math.ceil(2.0 * self.blur_sigma[level]):
                raise ValueError("blur_radius must cover at least 2 sigma")

    def to_dict(self):
        return {
            "noise_sigma": {str(k): v for k, v in self.noise_sigma.items()},
            "blur_sigma": {str(k): v for k, v in self.blur_sigma.items()},
            "blur_radius": {str(k): v for k, v in self.blur_radius.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            noise_sigma={int(k): float(v) for k, v in d["noise_sigma"].items()},
            blur_sigma={int(k): float(v) for k, v in d["blur_sigma"].items()},
            blur_radius={int(k): int(v) for k, v in d["blur_radius"].items()},
        )


def gaussian_noise(image, sigma, rng):
    """Add i.i.d. zero-mean Gaussian noise per pixel, then clamp to [0, 1]."""
    image = np.asarray(image, dtype=np.float32)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return image.copy()
    rng = as_rng(rng)
    noisy = image + rng.normal(0.0, sigma, size=image.shape).astype(np.float32)
    return np.clip(noisy, 0.0, 1.0)


def _blur_matrix(n, sigma, radius):
    """Banded 1-D blur operator with truncated taps renormalized per row."""
    taps = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    w = np.zeros((n, n))
    for i in range(n):
        lo, hi = max(0, i - radius), min(n, i + radius + 1)
        w[i, lo:hi] = taps[lo - i + radius:hi - i + radius]
    return (w / w.sum(axis=1, keepdims=True)).astype(np.float32)


def gaussian_blur(image, sigma, radius=None):
    """Separable Gaussian blur; sigma 0 returns the input unchanged."""
    image = np.asarray(image, dtype=np.float32)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return image.copy()
    if radius is None:
        radius = max(1, math.ceil(2.0 * sigma))
    h, w = image.shape[-2:]
    wr = _blur_matrix(h, sigma, radius)
    wc = _blur_matrix(w, sigma, radius)
    return (wr @ image) @ wc.T


def corrupt_image(image, noise_level, blur_level, cfg, rng):
    blurred = gaussian_blur(image, cfg.blur_sigma[blur_level],
                            cfg.blur_radius[blur_level])
    return gaussian_noise(blurred, cfg.noise_sigma[noise_level], rng)


def corrupt_dataset(clean, cfg=None, rng=None):
    """Half-clean / half-corrupted corpus from clean labeled samples.

    The first half passes through untouched; every sample in the second half
    is blurred at a uniformly random level in {1, 2, 3} and then gets noise
    at an independently random level. Deterministic for a fixed seed.
    """
    if not clean:
        raise EmptyDataset("corrupt_dataset needs at least one sample")
    cfg = cfg or SeverityConfig()
    rng = as_rng(rng)
    n_clean = (len(clean) + 1) // 2
    out = []
    for i, sample in enumerate(clean):
        if i < n_clean:
            out.append(LabeledImage(image=np.asarray(sample.image, dtype=np.float32),
                                    label=sample.label, corrupted=False))
            continue
        blur_level = int(rng.integers(1, 4))
        noise_level = int(rng.integers(1, 4))
        out.append(LabeledImage(
            image=corrupt_image(sample.image, noise_level, blur_level, cfg, rng),
            label=sample.label,
            corrupted=True,
            severity=(noise_level, blur_level),
        ))
    return out


class GaussianNoiseTransformer(BaseEstimator, TransformerMixin):
    """Stateless noise transformer over image batches (sklearn-compatible)."""

    def __init__(self, sigma=0.1, seed=0):
        self.sigma = sigma
        self.seed = seed

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_image_batch(X)
        rng = as_rng(self.seed)
        return np.stack([gaussian_noise(img, self.sigma, rng) for img in X])


class GaussianBlurTransformer(BaseEstimator, TransformerMixin):
    """Stateless blur transformer over image batches (sklearn-compatible)."""

    def __init__(self, sigma=1.0, radius=None):
        self.sigma = sigma
        self.radius = radius

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        X = check_image_batch(X)
        return np.stack([gaussian_blur(img, self.sigma, self.radius) for img in X])
