"""Decision-boundary search along single style dimensions.

The shift reference of a dimension is the displacement that drives the
classifier's true-class probability to the 0.50 threshold. It is found by
doubling an initial step until the probability drops through the threshold
(exponential bracketing), then bisecting until the probability is within
tolerance of 0.50 or the bracket collapses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptySubset, NoCrossingWithinBound, StartBelowThreshold
from ..validation import check_class_index
from .population import class_mean_style
from .ranking import top_dims

THRESHOLD = 0.5
DEFAULT_TOLERANCE = 0.01
MIN_INTERVAL = 1e-6


def solve_probability_crossing(f, initial_step, max_shift,
                               tolerance=DEFAULT_TOLERANCE,
                               threshold=THRESHOLD, max_bisect=80):
    """Find t > 0 with f(t) ~= threshold for a response curve f.

    ``f(0)`` must exceed threshold + tolerance (StartBelowThreshold
    otherwise); if doubling the step up to ``max_shift`` never drops f
    through the threshold, raises NoCrossingWithinBound. Bisection stops at
    |f - threshold| <= tolerance or when the bracket is narrower than 1e-6.
    """
    p0 = float(f(0.0))
    if p0 <= threshold + tolerance:
        raise StartBelowThreshold(f"start probability {p0:.4f} not above "
                                  f"{threshold + tolerance:.4f}")
    lo, t = 0.0, float(initial_step)
    while True:
        if t > max_shift:
            raise NoCrossingWithinBound(
                f"no crossing below shift {max_shift:g}")
        p = float(f(t))
        if p <= threshold:
            break
        lo, t = t, t * 2.0
    hi = t
    mid, p_mid = hi, p
    for _ in range(max_bisect):
        if abs(p_mid - threshold) <= tolerance or (hi - lo) < MIN_INTERVAL:
            break
        mid = 0.5 * (lo + hi)
        p_mid = float(f(mid))
        if p_mid > threshold:
            lo = mid
        else:
            hi = mid
    return mid, p_mid


def _true_prob_fn(s0, dim, direction, generator, classifier, true_class):
    s0 = np.asarray(s0, dtype=np.float64)

    def f(t):
        s = s0.copy()
        s[dim] += direction * t
        img = generator.images_from_styles(s[None], [true_class])
        return classifier.predict_proba(img)[0, true_class]

    return f


def find_shift_reference(s0, dim, direction, generator, classifier, true_class,
                         coordinate_scale=1.0, tolerance=DEFAULT_TOLERANCE,
                         initial_step_factor=0.25, max_shift_factor=20.0):
    """Signed shift along ``dim`` that brings the true-class probability to
    0.50, starting from style ``s0`` and moving with ``direction``.

    ``coordinate_scale`` (typically the population std of that coordinate)
    sets the initial step and the bracketing bound: beyond
    ``max_shift_factor`` scales the dimension is declared non-influential.
    """
    true_class = check_class_index(true_class)
    scale = max(float(coordinate_scale), 1e-12)
    f = _true_prob_fn(s0, dim, direction, generator, classifier, true_class)
    t, _ = solve_probability_crossing(
        f, initial_step=initial_step_factor * scale,
        max_shift=max_shift_factor * scale, tolerance=tolerance)
    return direction * t


@dataclass
class TraversalFrame:
    progress: float
    shift: float
    image: np.ndarray
    true_class_prob: float


@dataclass
class TraversalResult:
    dim: int
    direction: int
    start_style: np.ndarray
    shift_reference: float
    true_class: int
    frames: list[TraversalFrame] = field(default_factory=list)


DEFAULT_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0)


def traverse(s0, dim, direction, generator, classifier, true_class,
             fractions=DEFAULT_FRACTIONS, shift_reference=None,
             coordinate_scale=1.0, tolerance=DEFAULT_TOLERANCE):
    """Walk a style dimension at fractions of its shift reference, rendering
    each step; frame shifts are exactly fraction * shift_reference."""
    s0 = np.asarray(s0, dtype=np.float64)
    if shift_reference is None:
        shift_reference = find_shift_reference(
            s0, dim, direction, generator, classifier, true_class,
            coordinate_scale=coordinate_scale, tolerance=tolerance)
    result = TraversalResult(dim=int(dim), direction=int(direction),
                             start_style=s0, shift_reference=float(shift_reference),
                             true_class=int(true_class))
    for progress in fractions:
        s = s0.copy()
        shift = progress * shift_reference
        s[dim] += shift
        img = generator.images_from_styles(s[None], [true_class])
        prob = classifier.predict_proba(img)[0, true_class]
        result.frames.append(TraversalFrame(
            progress=float(progress), shift=float(shift),
            image=img[0], true_class_prob=float(prob)))
    return result


@dataclass
class CornerCase:
    """A decision-boundary sample along one style dimension.

    ``shift_at_threshold`` is the signed displacement from the start style;
    ``post_flip_predicted`` is the classifier's argmax slightly past the
    threshold (1.05x the shift), i.e. the class it flips to.
    """

    true_class: int
    dim: int
    direction: int
    start_style: np.ndarray
    shift_at_threshold: float
    image: np.ndarray
    true_class_prob: float
    post_flip_predicted: int


def find_corner_cases(pop, generator, classifier, class_index, scores=None,
                      top_m=10, well_only=True, tolerance=DEFAULT_TOLERANCE,
                      overshoot=1.05):
    """Corner cases for one class: from the class-mean style, push each of
    the top ``top_m`` class-scoped dimensions to the 0.50 threshold.

    Returns (cases, skipped) where ``skipped`` maps dimension -> reason.
    Dimensions with no crossing within the bracketing bound are skipped, as
    are searches that cannot meet the tolerance or whose prediction does not
    flip just past the threshold.
    """
    from .ranking import score_dimensions

    class_index = check_class_index(class_index)
    if scores is None:
        scores = score_dimensions(pop, generator, classifier, scope=class_index)
    class_mask = pop.true_classes == class_index
    if not class_mask.any():
        raise EmptySubset(f"population has no samples of class {class_index}")
    center = class_mean_style(pop, class_index, well_only=well_only)
    stds = pop.styles[class_mask].std(axis=0)

    start_prob = classifier.predict_proba(
        generator.images_from_styles(center[None], [class_index]))[0, class_index]
    if start_prob <= THRESHOLD + tolerance:
        raise StartBelowThreshold(
            f"class {class_index} mean style scores {start_prob:.3f}")

    cases, skipped = [], {}
    for score in scores[:top_m]:
        dim, direction = score.dim, score.direction
        try:
            shift = find_shift_reference(
                center, dim, direction, generator, classifier, class_index,
                coordinate_scale=max(stds[dim], 1e-6), tolerance=tolerance)
        except NoCrossingWithinBound:
            skipped[dim] = "no_crossing"
            continue
        s = center.copy()
        s[dim] += shift
        img = generator.images_from_styles(s[None], [class_index])
        prob = float(classifier.predict_proba(img)[0, class_index])
        if abs(prob - THRESHOLD) > tolerance:
            skipped[dim] = "tolerance_not_met"
            continue
        s_past = center.copy()
        s_past[dim] += overshoot * shift
        past_pred = int(classifier.predict_proba(
            generator.images_from_styles(s_past[None], [class_index]))[0].argmax())
        if past_pred == class_index:
            skipped[dim] = "no_flip_past_threshold"
            continue
        cases.append(CornerCase(
            true_class=class_index, dim=int(dim), direction=int(direction),
            start_style=center, shift_at_threshold=float(shift),
            image=img[0], true_class_prob=prob,
            post_flip_predicted=past_pred))
    return cases, skipped
