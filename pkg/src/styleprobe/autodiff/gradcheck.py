"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from ..exceptions import NonFiniteEvaluation


def finite_diff_check(f, point, step=1e-5, analytic=None, f_batch=None):
    """Max relative error between the analytic gradient of ``f`` and central
    finite differences at ``point``.

    ``f`` maps a 1-D float vector to (value, gradient); pass ``analytic`` to
    supply the gradient separately when ``f`` returns only the value. The
    relative error per coordinate is |analytic - numeric| divided by
    (|analytic| + |numeric| + 1e-12).

    ``f_batch``, when given, maps a (n, d) matrix of points to n values and
    is used to evaluate all 2d probe points at once; it must agree with the
    scalar path exactly.
    """
    point = np.asarray(point, dtype=np.float64)
    if analytic is None:
        _, grad = f(point)
        evaluate = lambda x: f(x)[0]
    else:
        grad = np.asarray(analytic, dtype=np.float64)
        evaluate = f
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != point.shape:
        raise ValueError(f"gradient shape {grad.shape} != point shape {point.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteEvaluation("analytic gradient not finite")

    d = point.size
    if f_batch is not None:
        probes = np.tile(point, (2 * d, 1))
        probes[np.arange(d), np.arange(d)] += step
        probes[d + np.arange(d), np.arange(d)] -= step
        values = np.asarray(f_batch(probes), dtype=np.float64)
        if values.shape != (2 * d,):
            raise ValueError(f"f_batch returned shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteEvaluation("f not finite at a probe point")
        numeric = (values[:d] - values[d:]) / (2.0 * step)
    else:
        numeric = np.empty_like(point)
        for j in range(d):
            delta = np.zeros_like(point)
            delta.flat[j] = step
            hi = float(evaluate(point + delta))
            lo = float(evaluate(point - delta))
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NonFiniteEvaluation(f"f not finite near coordinate {j}")
            numeric.flat[j] = (hi - lo) / (2.0 * step)

    rel = np.abs(grad - numeric) / (np.abs(grad) + np.abs(numeric) + 1e-12)
    return float(rel.max())
