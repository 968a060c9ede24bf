"""Gradient-based ranking of style dimensions by degradation power.

For every sample the full gradient of the true-class probability with
respect to the style vector comes from one backward pass; per-dimension
means over the population are the scores. Ranking sorts by |mean| descending;
the sign to follow for degradation is the opposite of the mean gradient, so
moving along it lowers the true-class probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tape, Tensor, ops
from ..exceptions import EmptySubset, ScopeMismatch
from ..validation import check_class_index
from .population import ProbePopulation


@dataclass
class DimensionScore:
    """Per-dimension ranking record.

    ``direction`` is the increment sign that degrades the classifier
    (+1/-1); zero-score dimensions rank last with direction +1 by
    convention. ``sign_disagreement`` is the fraction of samples whose
    per-sample gradient sign differs from the mean's, a dispersion
    diagnostic.
    """

    dim: int
    mean_grad: float
    direction: int
    rank: int
    scope: str
    sign_disagreement: float = 0.0


def style_gradients(pop, generator, classifier, batch=128, precision="single"):
    """Per-sample gradients of the true-class probability w.r.t. styles.

    Samples are independent, so one backward pass over the summed true-class
    probabilities of a batch yields every row's gradient at once.
    """
    from ..models.classifier import classifier_probs

    n = len(pop)
    dtype = np.float32 if precision == "single" else np.float64
    out = np.empty((n, pop.d_s), dtype=dtype)
    for start in range(0, n, batch):
        stop = min(start + batch, n)
        s = Tensor(pop.styles[start:stop].astype(dtype), requires_grad=True,
                   dtype=dtype)
        with Tape(precision=precision) as tape:
            images = generator.synthesize_tensor(s, pop.true_classes[start:stop])
            probs = classifier_probs(classifier.params_, images)
            picked = ops.select_index(probs, pop.true_classes[start:stop])
            total = ops.sum_(picked)
            grads = tape.backward(total)
        out[start:stop] = tape.gradient(grads, s)
    return out


def _rank_order(mean_grad, zero_tol=0.0):
    """Indices sorted by |mean| descending; exact zeros last, ties by index."""
    magnitude = np.abs(mean_grad)
    zero = magnitude <= zero_tol
    # Sort key: nonzero dims by -|mean|, then index; zero dims after, by index.
    order = sorted(range(len(mean_grad)),
                   key=lambda j: (bool(zero[j]), -magnitude[j], j))
    return np.asarray(order, dtype=np.int64)


def scores_from_gradients(grad_rows, scope="global"):
    """Fold per-sample gradient rows into ranked DimensionScore records."""
    if grad_rows.shape[0] == 0:
        raise EmptySubset("no gradient rows to score")
    mean_grad = grad_rows.mean(axis=0, dtype=np.float64)
    order = _rank_order(mean_grad)
    scope_name = scope if isinstance(scope, str) else f"class{int(scope)}"
    scores = []
    for rank, dim in enumerate(order):
        m = float(mean_grad[dim])
        if m == 0.0:
            direction, disagree = 1, 0.0
        else:
            direction = -1 if m > 0 else 1
            disagree = float((np.sign(grad_rows[:, dim]) != np.sign(m)).mean())
        scores.append(DimensionScore(
            dim=int(dim), mean_grad=m, direction=direction, rank=rank,
            scope=scope_name, sign_disagreement=disagree))
    return scores


def score_dimensions(pop, generator, classifier, scope="global",
                     filter_scope=True, well_only=False, batch=128,
                     precision="single"):
    """Rank every style dimension by its mean degradation gradient.

    ``scope`` is "global" or a class index; class scopes average over the
    class-conditional subset (``filter_scope=False`` demands a pre-filtered
    population instead and raises ScopeMismatch on mixed input).
    ``well_only`` restricts the average to correctly classified samples.
    """
    sub = pop
    if scope != "global":
        k = check_class_index(scope)
        if (pop.true_classes != k).any():
            if not filter_scope:
                raise ScopeMismatch(
                    f"population mixes classes but scope is class {k}")
            sub = pop.subset(pop.true_classes == k)
    if well_only:
        sub = sub.subset(sub.well_mask)
    if len(sub) == 0:
        raise EmptySubset("scoped population is empty")
    grad_rows = style_gradients(sub, generator, classifier, batch=batch,
                                precision=precision)
    return scores_from_gradients(grad_rows, scope)


def finite_difference_scores(pop, generator, classifier, delta=1e-3, batch=256):
    """Brute-force oracle for the mean gradients: central differences of the
    mean true-class probability along every style coordinate separately.

    Independent of the tape machinery; used to cross-check rankings.
    """
    n, d_s = pop.styles.shape
    if n == 0:
        raise EmptySubset("no samples")
    mean_grad = np.empty(d_s, dtype=np.float64)

    def mean_true_prob(styles):
        total = 0.0
        for start in range(0, n, batch):
            stop = min(start + batch, n)
            imgs = generator.images_from_styles(styles[start:stop],
                                                pop.true_classes[start:stop])
            probs = classifier.predict_proba(imgs)
            total += probs[np.arange(stop - start),
                           pop.true_classes[start:stop]].sum()
        return total / n

    base = pop.styles.astype(np.float64)
    for j in range(d_s):
        bumped = base.copy()
        bumped[:, j] += delta
        hi = mean_true_prob(bumped)
        bumped[:, j] = base[:, j] - delta
        lo = mean_true_prob(bumped)
        mean_grad[j] = (hi - lo) / (2.0 * delta)
    return mean_grad


def top_dims(scores, k):
    return [s.dim for s in scores[:k]]


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic on raw values."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise EmptySubset("KS statistic needs nonempty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def dimension_histograms(well, mis, dim, bins=30):
    """Histograms of one style coordinate for the two outcome populations,
    plus their KS separation.

    ``well`` and ``mis`` may be ProbePopulations or raw style matrices.
    """
    def column(x):
        styles = x.styles if isinstance(x, ProbePopulation) else np.asarray(x)
        return styles[:, dim]

    va, vb = column(well), column(mis)
    if va.size == 0 or vb.size == 0:
        raise EmptySubset("both populations must be nonempty")
    lo = min(va.min(), vb.min())
    hi = max(va.max(), vb.max())
    if lo == hi:
        hi = lo + 1e-9
    edges = np.linspace(lo, hi, bins + 1)
    hist_well, _ = np.histogram(va, bins=edges)
    hist_mis, _ = np.histogram(vb, bins=edges)
    return {
        "edges": edges,
        "hist_well": hist_well,
        "hist_mis": hist_mis,
        "separation": ks_statistic(va, vb),
    }
