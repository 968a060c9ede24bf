"""Labeled-image records and the on-disk dataset cache."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..autodiff.checkpoint import load_arrays, save_arrays
from ..exceptions import EmptyDataset

CACHE_SCHEMA_VERSION = 1


@dataclass
class LabeledImage:
    """One 28x28 grayscale sample with its class label and corruption record.

    ``severity`` is (noise_level, blur_level), present only when
    ``corrupted`` is true.
    """

    image: np.ndarray
    label: int
    corrupted: bool = False
    severity: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not self.corrupted and self.severity is not None:
            raise ValueError("clean samples must not carry a severity")


def stack_images(samples):
    if not samples:
        raise EmptyDataset("no samples to stack")
    images = np.stack([s.image for s in samples]).astype(np.float32)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return images, labels


def save_dataset_cache(path_blob, path_sidecar, samples, severity_config, seed,
                       precision="single"):
    """Persist samples as a checkpoint blob plus a JSON sidecar."""
    if not samples:
        raise EmptyDataset("refusing to cache an empty dataset")
    images, labels = stack_images(samples)
    corrupted = np.array([s.corrupted for s in samples], dtype=np.float32)
    noise_level = np.array(
        [s.severity[0] if s.severity else 0 for s in samples], dtype=np.float32)
    blur_level = np.array(
        [s.severity[1] if s.severity else 0 for s in samples], dtype=np.float32)
    save_arrays(path_blob, {
        "images": images,
        "labels": labels.astype(np.float32),
        "corrupted": corrupted,
        "noise_level": noise_level,
        "blur_level": blur_level,
    }, precision=precision)
    sidecar = {
        "schema_version": CACHE_SCHEMA_VERSION,
        "count": len(samples),
        "clean_count": int((~corrupted.astype(bool)).sum()),
        "severity_config": severity_config.to_dict() if severity_config else None,
        "seed": seed,
    }
    with open(path_sidecar, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset_cache(path_blob):
    arrays, _ = load_arrays(path_blob)
    count = arrays["images"].shape[0]
    samples = []
    for i in range(count):
        corrupted = bool(arrays["corrupted"][i])
        severity = (
            (int(arrays["noise_level"][i]), int(arrays["blur_level"][i]))
            if corrupted else None
        )
        samples.append(LabeledImage(
            image=arrays["images"][i].astype(np.float32),
            label=int(arrays["labels"][i]),
            corrupted=corrupted,
            severity=severity,
        ))
    return samples
