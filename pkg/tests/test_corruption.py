"""Corruption pipeline tests: noise/blur math against closed forms, the
half-clean corpus contract, and reproducibility."""

import numpy as np
import pytest

from styleprobe.data import (
    GaussianBlurTransformer,
    GaussianNoiseTransformer,
    LabeledImage,
    SeverityConfig,
    corrupt_dataset,
    gaussian_blur,
    gaussian_noise,
    glyph_dataset,
)
from styleprobe.exceptions import EmptyDataset

# Normalized 5-tap Gaussian (sigma 1, radius 2): k(t) = exp(-t^2/2) / sum,
# computed once from the closed form exp(0) = 1, exp(-1/2), exp(-2).
KERNEL_SIGMA1_R2 = np.array([
    0.05448868454964294,
    0.24420134200323332,
    0.40261994689424740,
    0.24420134200323332,
    0.05448868454964294,
])


def test_closed_form_kernel_constant():
    taps = np.exp(-0.5 * np.arange(-2.0, 3.0) ** 2)
    np.testing.assert_allclose(taps / taps.sum(), KERNEL_SIGMA1_R2, rtol=1e-12)


def test_noise_sigma_zero_is_identity():
    img = np.random.default_rng(0).random((28, 28)).astype(np.float32)
    out = gaussian_noise(img, 0.0, np.random.default_rng(1))
    np.testing.assert_array_equal(out, img)


def test_noise_clamps_to_unit_interval():
    img = np.ones((28, 28), dtype=np.float32)
    out = gaussian_noise(img, 0.5, np.random.default_rng(2))
    assert out.max() <= 1.0 and out.min() >= 0.0


def test_noise_mean_absolute_deviation_matches_half_normal():
    # E|N(0, sigma)| = sigma * sqrt(2/pi); measured before clamping by using
    # a mid-gray image so clamping never triggers.
    sigma = 0.1
    expected = sigma * np.sqrt(2.0 / np.pi)
    rng = np.random.default_rng(3)
    img = np.full((28, 28), 0.5, dtype=np.float32)
    devs = [np.abs(gaussian_noise(img, sigma, rng) - img).mean()
            for _ in range(120)]
    assert abs(np.mean(devs) - expected) < 0.1 * expected


def test_noise_deterministic_for_fixed_seed():
    img = np.random.default_rng(4).random((28, 28)).astype(np.float32)
    a = gaussian_noise(img, 0.2, np.random.default_rng(77))
    b = gaussian_noise(img, 0.2, np.random.default_rng(77))
    np.testing.assert_array_equal(a, b)


def test_blur_sigma_zero_is_identity():
    img = np.random.default_rng(5).random((28, 28)).astype(np.float32)
    np.testing.assert_array_equal(gaussian_blur(img, 0.0), img)


def test_blur_preserves_constant_images():
    img = np.full((28, 28), 0.37, dtype=np.float32)
    out = gaussian_blur(img, 1.5)
    np.testing.assert_allclose(out, img, atol=1e-6)


def test_blur_impulse_center_row_equals_normalized_kernel():
    img = np.zeros((28, 28), dtype=np.float32)
    img[14, 14] = 1.0
    out = gaussian_blur(img, 1.0, radius=2)
    np.testing.assert_allclose(out[14, 12:17] / out[14, 14] * KERNEL_SIGMA1_R2[2],
                               KERNEL_SIGMA1_R2, rtol=1e-5)
    # Separable: the peak is the product of the two 1-D center taps.
    np.testing.assert_allclose(out[14, 14], KERNEL_SIGMA1_R2[2] ** 2, rtol=1e-5)


def test_severity_config_validation():
    with pytest.raises(ValueError):
        SeverityConfig(noise_sigma={1: 0.2, 2: 0.1, 3: 0.3})
    with pytest.raises(ValueError):
        SeverityConfig(blur_sigma={1: 1.0, 2: 1.0, 3: 1.5})
    cfg = SeverityConfig()
    for level in (1, 2, 3):
        assert cfg.blur_radius[level] >= np.ceil(2 * cfg.blur_sigma[level])


def test_severity_config_round_trip():
    cfg = SeverityConfig()
    again = SeverityConfig.from_dict(cfg.to_dict())
    assert again.noise_sigma == cfg.noise_sigma
    assert again.blur_sigma == cfg.blur_sigma
    assert again.blur_radius == cfg.blur_radius


def _clean_samples(n, seed=0):
    return glyph_dataset(n, seed=seed)


def test_corrupt_dataset_halves():
    out = corrupt_dataset(_clean_samples(2), rng=np.random.default_rng(0))
    assert [s.corrupted for s in out] == [False, True]
    assert out[0].severity is None
    assert out[1].severity is not None


def test_corrupt_dataset_zero_sigmas_identity():
    cfg = SeverityConfig(noise_sigma={1: 0.0, 2: 0.0, 3: 0.0},
                         blur_sigma={1: 0.0, 2: 0.0, 3: 0.0},
                         blur_radius={1: 1, 2: 1, 3: 1})
    clean = _clean_samples(6)
    out = corrupt_dataset(clean, cfg, rng=np.random.default_rng(0))
    for src, dst in zip(clean, out):
        np.testing.assert_array_equal(dst.image, src.image)


def test_corrupt_dataset_empty_rejected():
    with pytest.raises(EmptyDataset):
        corrupt_dataset([], rng=np.random.default_rng(0))


def test_corrupt_dataset_severity_pairs_uniform():
    clean = [LabeledImage(image=np.zeros((28, 28), dtype=np.float32), label=0)
             for _ in range(12000)]
    out = corrupt_dataset(clean, rng=np.random.default_rng(9))
    pairs = [s.severity for s in out if s.corrupted]
    assert len(pairs) == 6000
    counts = {}
    for p in pairs:
        counts[p] = counts.get(p, 0) + 1
    for noise_level in (1, 2, 3):
        for blur_level in (1, 2, 3):
            freq = counts.get((noise_level, blur_level), 0) / len(pairs)
            assert abs(freq - 1 / 9) < 0.02


def test_corrupt_dataset_reproducible_bitwise():
    clean = _clean_samples(24)
    a = corrupt_dataset(clean, rng=np.random.default_rng(3))
    b = corrupt_dataset(clean, rng=np.random.default_rng(3))
    for sa, sb in zip(a, b):
        np.testing.assert_array_equal(sa.image, sb.image)
        assert sa.severity == sb.severity


def test_corrupt_dataset_pixels_stay_in_range():
    out = corrupt_dataset(_clean_samples(40), rng=np.random.default_rng(5))
    for s in out:
        assert s.image.min() >= 0.0 and s.image.max() <= 1.0


def test_blur_then_noise_differs_from_noise_then_blur():
    # Order sensitivity guard: the pipeline blurs first, then adds noise.
    img = glyph_dataset(1, seed=1)[0].image
    sigma_noise, sigma_blur = 0.1, 1.0
    a = gaussian_noise(gaussian_blur(img, sigma_blur), sigma_noise,
                       np.random.default_rng(8))
    b = gaussian_blur(gaussian_noise(img, sigma_noise, np.random.default_rng(8)),
                      sigma_blur)
    assert np.abs(a - b).max() > 1e-3


def test_corrupted_sample_is_blur_then_noise():
    clean = _clean_samples(2, seed=3)
    cfg = SeverityConfig()
    out = corrupt_dataset(clean, cfg, rng=np.random.default_rng(42))
    sample = out[1]
    noise_level, blur_level = sample.severity
    # Replay the per-sample pipeline with the same draw sequence.
    rng = np.random.default_rng(42)
    assert int(rng.integers(1, 4)) == blur_level
    assert int(rng.integers(1, 4)) == noise_level
    blurred = gaussian_blur(clean[1].image, cfg.blur_sigma[blur_level],
                            cfg.blur_radius[blur_level])
    expected = np.clip(
        blurred + rng.normal(0.0, cfg.noise_sigma[noise_level],
                             size=blurred.shape).astype(np.float32), 0, 1)
    np.testing.assert_allclose(sample.image, expected, atol=1e-7)


def test_transformers_sklearn_surface():
    X = np.stack([s.image for s in _clean_samples(3)])
    noisy = GaussianNoiseTransformer(sigma=0.1, seed=0).fit_transform(X)
    assert noisy.shape == X.shape
    blurred = GaussianBlurTransformer(sigma=1.0).fit_transform(X.reshape(3, -1))
    assert blurred.shape == X.shape
    params = GaussianNoiseTransformer().get_params()
    assert set(params) == {"sigma", "seed"}
