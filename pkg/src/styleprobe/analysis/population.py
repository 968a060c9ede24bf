"""Probe populations: generated samples with classification outcomes attached."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptySubset, InvalidClass
from ..validation import as_rng, check_class_index


@dataclass
class ProbePopulation:
    """Generated samples in style space with their classification results.

    ``styles`` is (n, d_s); ``true_classes`` the conditioning class per
    sample; ``probs`` the classifier's softmax outputs; ``predicted`` its
    argmax. ``images`` may be None when a population is rebuilt from disk
    without pixels.
    """

    styles: np.ndarray
    true_classes: np.ndarray
    probs: np.ndarray
    predicted: np.ndarray
    images: np.ndarray | None = None
    provenance: dict | None = None

    def __len__(self):
        return self.styles.shape[0]

    @property
    def d_s(self):
        return self.styles.shape[1]

    @property
    def well_mask(self):
        return self.predicted == self.true_classes

    @property
    def true_class_probs(self):
        return self.probs[np.arange(len(self)), self.true_classes]

    def subset(self, mask):
        return ProbePopulation(
            styles=self.styles[mask],
            true_classes=self.true_classes[mask],
            probs=self.probs[mask],
            predicted=self.predicted[mask],
            images=None if self.images is None else self.images[mask],
            provenance=self.provenance,
        )


def build_population(generator, classifier, count, scope="global", seed=0,
                     keep_images=True, batch=256):
    """Sample styles, render, classify: the raw material of every analysis.

    ``scope`` is "global" (classes drawn uniformly) or an integer class index
    (all samples conditioned on that class). Deterministic given ``seed``.
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = as_rng(seed)
    if scope == "global":
        classes = rng.integers(0, generator.n_classes, size=count)
    else:
        classes = np.full(count, check_class_index(scope, generator.n_classes),
                          dtype=np.int64)
    styles = np.empty((count, generator.d_s), dtype=np.float32)
    images = np.empty((count, 28, 28), dtype=np.float32) if keep_images else None
    probs = np.empty((count, generator.n_classes), dtype=np.float32)
    for start in range(0, count, batch):
        stop = min(start + batch, count)
        S = generator.sample_styles(stop - start, classes[start:stop], rng)
        imgs = generator.images_from_styles(S, classes[start:stop])
        styles[start:stop] = S
        if keep_images:
            images[start:stop] = imgs
        probs[start:stop] = classifier.predict_proba(imgs)
    return ProbePopulation(
        styles=styles,
        true_classes=classes.astype(np.int64),
        probs=probs,
        predicted=probs.argmax(axis=1).astype(np.int64),
        images=images,
        provenance={
            "generator": type(generator).__name__,
            "classifier": type(classifier).__name__,
            "seed": seed,
            "count": count,
            "scope": scope,
        },
    )


def reclassify(pop, classifier, batch=512):
    """Same samples, new classifier: re-run predictions over stored images.

    Lets several classifiers be compared on one generated population.
    """
    if pop.images is None:
        raise EmptySubset("population was built without images; cannot reclassify")
    probs = classifier.predict_proba(pop.images)
    provenance = dict(pop.provenance or {})
    provenance["classifier"] = type(classifier).__name__
    return ProbePopulation(
        styles=pop.styles,
        true_classes=pop.true_classes,
        probs=probs,
        predicted=probs.argmax(axis=1).astype(np.int64),
        images=pop.images,
        provenance=provenance,
    )


def split_populations(pop):
    """Partition into (well-classified, mis-classified) by predicted == true."""
    if len(pop) == 0:
        raise EmptySubset("cannot split an empty population")
    mask = pop.well_mask
    return pop.subset(mask), pop.subset(~mask)


def class_mean_style(pop, class_index, well_only=False):
    """Coordinatewise mean style of a class-conditional (sub)population."""
    class_index = check_class_index(class_index)
    mask = pop.true_classes == class_index
    if well_only:
        mask &= pop.well_mask
    if not mask.any():
        raise EmptySubset(
            f"no {'well-classified ' if well_only else ''}samples of class {class_index}")
    return pop.styles[mask].mean(axis=0)
