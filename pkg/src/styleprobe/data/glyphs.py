"""Procedural digit rendering.

Stroke-based glyphs let the whole pipeline (and its tests) run without any
external image files. Digits are polylines/arcs in a unit box, rasterized
through a distance field with a ~1px antialiasing ramp.
"""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import UnknownLabel
from ..validation import IMAGE_SIDE, as_rng

_MIN_THICKNESS = 1.0  # px floor; thinner requests render a 1px stroke
_ANTIALIAS = 0.85     # px ramp width


def _arc(cx, cy, rx, ry, a0, a1, n=18):
    """Polyline along an ellipse arc; angles in degrees, y-down convention."""
    ang = np.radians(np.linspace(a0, a1, n))
    return np.stack([cx + rx * np.cos(ang), cy + ry * np.sin(ang)], axis=1)


def _poly(*pts):
    return np.asarray(pts, dtype=np.float64)


def _digit_paths(label):
    # Unit-box coordinates, x right, y down.
    if label == 0:
        return [_arc(0.5, 0.5, 0.24, 0.37, 0, 360, 28)]
    if label == 1:
        return [_poly((0.40, 0.26), (0.56, 0.12)), _poly((0.56, 0.12), (0.56, 0.88))]
    if label == 2:
        return [
            _arc(0.5, 0.32, 0.22, 0.2, 180, 345, 14),
            _poly((0.715, 0.375), (0.58, 0.6), (0.42, 0.74), (0.28, 0.88)),
            _poly((0.28, 0.88), (0.74, 0.88)),
        ]
    if label == 3:
        return [
            _arc(0.46, 0.3, 0.2, 0.18, 215, 450, 14),
            _arc(0.46, 0.66, 0.22, 0.21, 270, 515, 16),
        ]
    if label == 4:
        return [
            _poly((0.63, 0.12), (0.63, 0.88)),
            _poly((0.63, 0.12), (0.25, 0.6)),
            _poly((0.25, 0.6), (0.8, 0.6)),
        ]
    if label == 5:
        return [
            _poly((0.7, 0.12), (0.33, 0.12)),
            _poly((0.33, 0.12), (0.31, 0.44)),
            _arc(0.47, 0.64, 0.22, 0.22, 231, 500, 16),
        ]
    if label == 6:
        return [
            _arc(0.54, 0.46, 0.28, 0.34, 295, 180, 14),
            _arc(0.5, 0.66, 0.2, 0.2, 0, 360, 22),
        ]
    if label == 7:
        return [_poly((0.26, 0.14), (0.76, 0.14)), _poly((0.76, 0.14), (0.44, 0.88))]
    if label == 8:
        return [
            _arc(0.5, 0.3, 0.17, 0.17, 0, 360, 20),
            _arc(0.5, 0.665, 0.21, 0.2, 0, 360, 22),
        ]
    if label == 9:
        return [
            _arc(0.5, 0.33, 0.2, 0.2, 0, 360, 22),
            _poly((0.69, 0.37), (0.67, 0.6), (0.58, 0.88)),
        ]
    raise UnknownLabel(f"no glyph for label {label!r}")


def _paths_to_segments(paths):
    segs = []
    for path in paths:
        if len(path) >= 2:
            segs.append(np.stack([path[:-1], path[1:]], axis=1))
    return np.concatenate(segs, axis=0)


def _distance_to_segments(pts, segs):
    a, b = segs[:, 0], segs[:, 1]
    ab = b - a
    denom = np.maximum((ab ** 2).sum(axis=-1), 1e-12)
    ap = pts[:, None, :] - a[None]
    t = np.clip((ap * ab[None]).sum(axis=-1) / denom[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    return np.sqrt(((pts[:, None, :] - proj) ** 2).sum(axis=-1)).min(axis=1)


def render_glyph(label, thickness=2.2, rotation=0.0, scale=1.0, rng=None,
                 jitter=0.0, translate=(0.0, 0.0)):
    """Rasterize one digit glyph to a (28, 28) image with values in [0, 1].

    ``thickness`` is the stroke width in pixels (floored at 1), ``rotation``
    is radians about the glyph center, ``scale`` resizes about the center,
    ``translate`` shifts the glyph in unit-box coordinates. ``jitter``
    perturbs stroke control points by up to that many unit-box units using
    ``rng``; identical inputs render identical images.
    """
    label = int(label)
    if not 0 <= label <= 9:
        raise UnknownLabel(f"label {label} outside [0, 10)")
    side = IMAGE_SIDE
    segs = _paths_to_segments(_digit_paths(label)).copy()
    if jitter > 0.0:
        rng = as_rng(rng)
        # Jitter path endpoints coherently: one offset per segment corner.
        segs += rng.uniform(-jitter, jitter, size=segs.shape)

    # Rotate and scale about the unit-box center, then map to pixel coords.
    center = np.array([0.5, 0.5])
    rel = segs - center
    c, s = math.cos(rotation), math.sin(rotation)
    rot = np.array([[c, -s], [s, c]])
    segs = center + (rel @ rot.T) * scale + np.asarray(translate, dtype=np.float64)

    margin, span = 4.0, side - 1 - 8.0
    segs_px = margin + segs * span

    ys, xs = np.mgrid[0:side, 0:side]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    d = _distance_to_segments(pts, segs_px).reshape(side, side)

    half = max(float(thickness), _MIN_THICKNESS) / 2.0
    ink = np.clip((half + _ANTIALIAS - d) / _ANTIALIAS, 0.0, 1.0)
    return ink.astype(np.float32)


def glyph_dataset(count, seed=0, thickness_range=(1.25, 3.0),
                  rotation_range=(-0.4, 0.4), scale_range=(0.7, 1.14),
                  jitter=0.03, translate_range=(-0.06, 0.06)):
    """Sample a labeled glyph corpus with per-sample style variation.

    Labels cycle through the ten classes in shuffled order so every class is
    evenly represented; styles and jitter are drawn from ``seed``.
    """
    from .dataset import LabeledImage

    rng = as_rng(seed)
    labels = np.tile(np.arange(10), count // 10 + 1)[:count]
    rng.shuffle(labels)
    samples = []
    for label in labels:
        samples.append(LabeledImage(
            image=render_glyph(
                int(label),
                thickness=rng.uniform(*thickness_range),
                rotation=rng.uniform(*rotation_range),
                scale=rng.uniform(*scale_range),
                rng=rng,
                jitter=jitter,
                translate=rng.uniform(*translate_range, size=2),
            ),
            label=int(label),
            corrupted=False,
        ))
    return samples
