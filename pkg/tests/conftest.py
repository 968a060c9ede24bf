"""Shared fixtures: the corpus and the trained desk-scale models.

Training the models takes minutes, so fitted checkpoints are cached on disk
keyed by a recipe tag; set STYLEPROBE_TEST_CACHE=0 to force fresh training.
All fixtures are deterministic, so cache hits and fresh runs agree.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from styleprobe.data import SeverityConfig, corrupt_dataset, glyph_dataset, stack_images
from styleprobe.models import ConvNetClassifier, StyleGenerator

CACHE_TAG = "v7"
CACHE_DIR = os.path.join(os.path.dirname(__file__), ".artifact_cache")

TRAIN_COUNT = 6000
TEST_COUNT = 1500
CLF_EPOCHS = 6
GEN_EPOCHS = 10


def _cache_enabled():
    return os.environ.get("STYLEPROBE_TEST_CACHE", "1") != "0"


def _cache_path(name):
    os.makedirs(CACHE_DIR, exist_ok=True)
    return os.path.join(CACHE_DIR, f"{CACHE_TAG}_{name}")


@pytest.fixture(scope="session")
def corpus():
    """Half-clean/half-corrupted training corpus plus a matching test split."""
    clean_train = glyph_dataset(TRAIN_COUNT, seed=0)
    train = corrupt_dataset(clean_train, SeverityConfig(),
                            rng=np.random.default_rng(1))
    clean_test = glyph_dataset(TEST_COUNT, seed=100)
    test = corrupt_dataset(clean_test, SeverityConfig(),
                           rng=np.random.default_rng(2))
    X, y = stack_images(train)
    Xt, yt = stack_images(test)
    Xc, yc = stack_images(clean_train)
    Xct, yct = stack_images(clean_test)
    return {
        "train": train, "test": test,
        "X": X, "y": y, "Xt": Xt, "yt": yt,
        "X_clean": Xc, "y_clean": yc, "Xt_clean": Xct, "yt_clean": yct,
    }


def _fit_classifier(corpus, clean):
    if clean:
        clf = ConvNetClassifier(epochs=CLF_EPOCHS, seed=0)
        return clf.fit(corpus["X_clean"], corpus["y_clean"], trained_on="clean")
    clf = ConvNetClassifier(epochs=CLF_EPOCHS, seed=0)
    return clf.fit(corpus["X"], corpus["y"], trained_on="corrupted")


def _classifier_fixture(corpus, name, clean):
    path = _cache_path(f"{name}.lpt")
    if _cache_enabled() and os.path.exists(path):
        return ConvNetClassifier.load(path, path + ".json")
    clf = _fit_classifier(corpus, clean)
    if _cache_enabled():
        clf.save(path, path + ".json")
    return clf


@pytest.fixture(scope="session")
def clf_corrupted(corpus):
    return _classifier_fixture(corpus, "clf_corrupted", clean=False)


@pytest.fixture(scope="session")
def clf_clean(corpus):
    return _classifier_fixture(corpus, "clf_clean", clean=True)


def corpus_noise_sigma(samples):
    cfg = SeverityConfig()
    return np.array([cfg.noise_sigma[s.severity[0]] if s.corrupted else 0.0
                     for s in samples], dtype=np.float32)


def corpus_blur_sigma(samples):
    cfg = SeverityConfig()
    return np.array([cfg.blur_sigma[s.severity[1]] if s.corrupted else 0.0
                     for s in samples], dtype=np.float32)


@pytest.fixture(scope="session")
def generator_trained(corpus):
    path = _cache_path("generator.lpt")
    if _cache_enabled() and os.path.exists(path):
        return StyleGenerator.load(path, path + ".json")
    gen = StyleGenerator(epochs=GEN_EPOCHS, seed=0).fit(
        corpus["X"], corpus["y"],
        noise_sigma=corpus_noise_sigma(corpus["train"]),
        blur_sigma=corpus_blur_sigma(corpus["train"]))
    if _cache_enabled():
        gen.save(path, path + ".json")
    return gen


@pytest.fixture(scope="session")
def big_population(generator_trained, clf_corrupted):
    """20000 learned-generator samples classified by the corrupted-trained
    CNN; the acceptance and integration suites slice it."""
    from styleprobe.analysis import build_population

    return build_population(generator_trained, clf_corrupted, 20000, seed=202)


@pytest.fixture(scope="session")
def tiny_corpus():
    """Small clean glyph set for fast unit-level model tests."""
    samples = glyph_dataset(600, seed=7)
    X, y = stack_images(samples)
    return X, y
