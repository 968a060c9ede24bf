"""Analytic procedural generator with ground-truth style semantics.

Each named style dimension drives one known image corruption, so dimension
rankings computed against this generator can be checked against construction:
the noise and blur knobs must dominate, and the padding dimensions (which are
never read) must score exactly zero. The rendering graph is built from
differentiable primitives, including the per-sample Gaussian blur kernel
(rebuilt inside the graph from the blur knob) and a bilinear rotation.

Per sample with style s and class k:

    image = clamp(intensity(s) * blur(rotate(glyph_k + thickness(s) * halo_k,
                                             angle(s)), beta(s))
                  + s[noise] * noise_field, 0, 1)

The blur kernel taps are exp(-t^2 * beta) with beta = exp(-knob), i.e. an
effective sigma of exp(knob / 2) / sqrt(2). The knob-to-width map is chosen
exp-linear in the inverse variance because that keeps every derivative order
bounded as the kernel approaches the identity (a sigma-mapped knob has
exploding higher derivatives near sigma = 0, which breaks finite-difference
verification); the neutral knob still sits far negative, where the kernel
underflows to an exact delta.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..autodiff import Tensor, ops
from ..exceptions import ShapeMismatch
from ..validation import IMAGE_SIDE, N_CLASSES, as_rng, check_style_matrix
from ..data.corruption import gaussian_blur
from ..data.glyphs import render_glyph

DIM_NAMES = ("noise_amp", "blur", "thickness", "rotation", "intensity")
BLUR_KERNEL_RADIUS = 4


class AnalyticGenerator(BaseEstimator):
    """Ground-truth style-space generator over procedural digit glyphs.

    Dimensions 0..4 are (noise_amp, blur, thickness, rotation, intensity);
    everything from 5 to ``d_s``-1 is padding with provably zero effect.
    The per-instance noise field is frozen at construction, so images are a
    deterministic function of (style, class).
    """

    def __init__(self, d_s=24, seed=0, noise_scale=0.18, thickness_gain=0.25,
                 rotation_gain=0.2, intensity_gain=0.08):
        self.d_s = d_s
        self.seed = seed
        self.noise_scale = noise_scale
        self.thickness_gain = thickness_gain
        self.rotation_gain = rotation_gain
        self.intensity_gain = intensity_gain

    def fit(self, X=None, y=None):
        return self

    @property
    def n_classes(self):
        return N_CLASSES

    @property
    def dim_names(self):
        return {i: name for i, name in enumerate(DIM_NAMES)}

    @property
    def padding_dims(self):
        return tuple(range(len(DIM_NAMES), self.d_s))

    # ------------------------------------------------------- frozen assets

    def _assets(self):
        if not hasattr(self, "_glyphs"):
            if self.d_s < len(DIM_NAMES):
                raise ShapeMismatch(
                    f"d_s must be at least {len(DIM_NAMES)}, got {self.d_s}")
            self._glyphs = {k: render_glyph(k).astype(np.float64)
                            for k in range(N_CLASSES)}
            self._halos = {k: gaussian_blur(g, 0.8).astype(np.float64)
                           for k, g in self._glyphs.items()}
            rng = as_rng(self.seed)
            # Non-negative speckle keeps the classifier response asymmetric in
            # the knob sign, so the signed mean gradient does not cancel.
            self._noise_field = (
                self.noise_scale
                * np.abs(rng.standard_normal((IMAGE_SIDE, IMAGE_SIDE)))
            )
            r = BLUR_KERNEL_RADIUS
            self._tap_sq = (np.arange(-r, r + 1, dtype=np.float64) ** 2)
        return self

    @property
    def noise_field(self):
        self._assets()
        return self._noise_field

    def base_glyph(self, label):
        self._assets()
        return self._glyphs[int(label)]

    # ---------------------------------------------------------- rendering

    def _knob(self, row, index):
        return ops.reshape(ops.slice_axis(row, 1, index, 1), ())

    def _render_one(self, row, label):
        glyphs, halos = self._glyphs, self._halos
        glyph = ops.as_tensor(glyphs[int(label)])
        halo = ops.as_tensor(halos[int(label)])

        amp = self._knob(row, 0)
        inv_var = ops.exp(ops.scale(self._knob(row, 1), -1.0))
        thickness = ops.scale(self._knob(row, 2), self.thickness_gain)
        angle = ops.scale(self._knob(row, 3), self.rotation_gain)
        gain = ops.exp(ops.scale(self._knob(row, 4), self.intensity_gain))

        shaped = ops.add(glyph, ops.mul(thickness, halo))
        rotated = ops.rotate_bilinear(shaped, angle)

        # Gaussian taps rebuilt inside the graph so the blur knob stays
        # differentiable; outer product of the 1-D taps gives the 2-D kernel.
        taps = ops.exp(ops.mul(ops.as_tensor(-self._tap_sq), inv_var))
        taps = ops.div(taps, ops.sum_(taps))
        k = 2 * BLUR_KERNEL_RADIUS + 1
        kernel = ops.reshape(
            ops.matmul(ops.reshape(taps, (k, 1)), ops.reshape(taps, (1, k))),
            (1, 1, k, k))
        blurred = ops.conv2d(ops.reshape(rotated, (1, 1, IMAGE_SIDE, IMAGE_SIDE)),
                             kernel, stride=1)

        lit = ops.mul(blurred, gain)
        noisy = ops.add(lit, ops.mul(amp, ops.as_tensor(self._noise_field)))
        return ops.clamp(noisy, 0.0, 1.0)

    def synthesize_tensor(self, s, labels):
        """Differentiable styles -> images (b, 1, 28, 28); needs class labels
        to pick each sample's base glyph."""
        self._assets()
        if not isinstance(s, Tensor):
            s = Tensor(np.asarray(s), dtype=np.float64)
        if s.shape[-1] != self.d_s:
            raise ShapeMismatch(f"style dim {s.shape[-1]} != {self.d_s}")
        labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        if labels.shape[0] != s.shape[0]:
            raise ShapeMismatch(
                f"{s.shape[0]} styles vs {labels.shape[0]} labels")
        frames = [
            self._render_one(ops.slice_axis(s, 0, i, 1), labels[i])
            for i in range(s.shape[0])
        ]
        return frames[0] if len(frames) == 1 else ops.concat(frames, axis=0)

    def images_from_styles(self, S, labels, batch=None):
        S = check_style_matrix(S, self.d_s)
        out = self.synthesize_tensor(Tensor(S, dtype=np.float64), labels)
        return out.data[:, 0].astype(np.float32)

    def sample_styles(self, n, labels, rng):
        return as_rng(rng).standard_normal((n, self.d_s)).astype(np.float32)

    def generate(self, n, labels, rng):
        S = self.sample_styles(n, labels, rng)
        return S, self.images_from_styles(S, labels)
