"""Accuracy as a function of distance from a well-classified center."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptySubset


@dataclass
class AccuracyBin:
    lo: float
    hi: float
    count: int
    accuracy: float


@dataclass
class AccuracyCurve:
    center: np.ndarray
    dims_used: np.ndarray
    distance_cutoff: float
    bins: list[AccuracyBin] = field(default_factory=list)

    def as_rows(self):
        return [(b.lo, b.hi, b.count, b.accuracy) for b in self.bins]


def style_distances(styles, center, dims, stds=None):
    """Euclidean distance over the selected coordinates, each standardized by
    its population std (style coordinates have heterogeneous scales)."""
    dims = np.asarray(dims, dtype=np.int64)
    delta = styles[:, dims] - np.asarray(center, dtype=np.float64)[dims]
    if stds is None:
        stds = styles[:, dims].std(axis=0)
    else:
        stds = np.asarray(stds, dtype=np.float64)[dims]
    return np.sqrt(((delta / np.maximum(stds, 1e-9)) ** 2).sum(axis=1))


def accuracy_vs_distance(pop, center, dims, bin_width=0.25, min_bin_count=200,
                         cutoff_quantile=0.95):
    """Bin samples by standardized distance from ``center`` over ``dims`` and
    report accuracy per bin.

    Samples beyond the ``cutoff_quantile`` of the distance distribution are
    discarded (generation quality and sample counts degrade out there); bins
    are anchored at multiples of ``bin_width`` so curves from different
    classifiers share bin edges, and adjacent bins merge until each holds at
    least ``min_bin_count`` samples.
    """
    if len(pop) == 0:
        raise EmptySubset("empty population")
    distances = style_distances(pop.styles.astype(np.float64), center, dims)
    cutoff = float(np.quantile(distances, cutoff_quantile))
    keep = distances <= cutoff
    if not keep.any():
        raise EmptySubset("cutoff removed every sample")
    distances = distances[keep]
    correct = pop.well_mask[keep]

    first = int(np.floor(distances.min() / bin_width))
    last = int(np.floor(distances.max() / bin_width))
    edges = np.arange(first, last + 2) * bin_width
    which = np.clip(np.digitize(distances, edges) - 1, 0, len(edges) - 2)

    counts = np.bincount(which, minlength=len(edges) - 1)
    hits = np.bincount(which, weights=correct.astype(np.float64),
                       minlength=len(edges) - 1)

    bins: list[AccuracyBin] = []
    acc_count, acc_hits, lo = 0, 0.0, edges[0]
    for i in range(len(counts)):
        acc_count += int(counts[i])
        acc_hits += float(hits[i])
        if acc_count >= min_bin_count:
            bins.append(AccuracyBin(lo=float(lo), hi=float(edges[i + 1]),
                                    count=acc_count,
                                    accuracy=acc_hits / acc_count))
            acc_count, acc_hits, lo = 0, 0.0, edges[i + 1]
    if acc_count > 0:
        if bins:
            tail = bins.pop()
            total = tail.count + acc_count
            bins.append(AccuracyBin(
                lo=tail.lo, hi=float(edges[-1]), count=total,
                accuracy=(tail.accuracy * tail.count + acc_hits) / total))
        else:
            bins.append(AccuracyBin(lo=float(lo), hi=float(edges[-1]),
                                    count=acc_count,
                                    accuracy=acc_hits / max(acc_count, 1)))
    return AccuracyCurve(center=np.asarray(center, dtype=np.float64),
                         dims_used=np.asarray(dims, dtype=np.int64),
                         distance_cutoff=cutoff, bins=bins)
