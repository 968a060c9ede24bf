"""Class-conditional style-modulated image generator at desk scale.

A mapping network sends (latent z, one-hot class) to an intermediate code w;
per-layer learned affine heads specialize w into style coefficients that
scale the convolution weights of a 7->14->28 synthesis stack (with weight
demodulation). The concatenation of all per-layer style slices is the flat
style vector the failure analysis probes; images are a deterministic,
differentiable function of it.

Training is reconstruction-based by default: a small conv encoder maps
images to z (batch-standardized), and encoder + generator minimize pixel MSE
jointly. A non-saturating adversarial regime is available as an alternative.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator

from ..autodiff import AdamState, Tape, Tensor, adam_step, ops
from ..autodiff.checkpoint import load_arrays, save_arrays
from ..exceptions import DivergedTraining, EmptyDataset, ShapeMismatch
from ..validation import N_CLASSES, as_rng, check_image_batch, check_labels

D_Z = 64
D_W = 64
LEAK = 0.2
DEMOD_EPS = 1e-8
COND_GAIN = 1.0
BLUR_RADIUS = 4

# (layer name, style offset, style width). Conv slices modulate weights per
# input channel (demodulated); the head slice is modulated without
# demodulation so it acts as monotone per-channel output gains; the blur
# slice drives a Gaussian smoothing of the rendered content (exp-mapped
# inverse variance); the noise slice drives the amplitudes of the frozen
# per-pixel noise inputs (softplus-mapped), one per spatial scale. Blur
# applies before noise, matching the corruption pipeline's order.
STYLE_LAYOUT = (("conv1", 0, 64), ("conv2", 64, 32), ("conv3", 96, 16),
                ("head", 112, 16), ("blur", 128, 1), ("noise", 129, 6))
D_S = sum(width for _, _, width in STYLE_LAYOUT)
N_NOISE_INPUTS = 6
# block size of each frozen field; coarse blocks keep the classifier
# response to every field consistently signed across samples
_NOISE_CELLS = (4, 4, 4, 2, 2, 2)


def init_generator_params(seed=0, dtype=np.float32):
    rng = as_rng(seed)

    def dense(fin, fout, gain=1.0):
        return Tensor(rng.normal(0.0, gain * np.sqrt(2.0 / fin), size=(fin, fout)),
                      requires_grad=True, dtype=dtype)

    def conv(co, ci, k):
        return Tensor(rng.normal(0.0, np.sqrt(2.0 / (ci * k * k)), size=(co, ci, k, k)),
                      requires_grad=True, dtype=dtype)

    def fill(shape, value=0.0):
        return Tensor(np.full(shape, value), requires_grad=True, dtype=dtype)

    params = {
        # mapping network
        "map1_w": dense(D_Z + N_CLASSES, D_W), "map1_b": fill((D_W,)),
        "map2_w": dense(D_W, D_W), "map2_b": fill((D_W,)),
        # per-layer style heads (bias 1 so modulation starts near identity;
        # the noise head starts far negative so amplitudes begin near zero)
        "aff_conv1_w": dense(D_W, 64, gain=0.3), "aff_conv1_b": fill((64,), 1.0),
        "aff_conv2_w": dense(D_W, 32, gain=0.3), "aff_conv2_b": fill((32,), 1.0),
        "aff_conv3_w": dense(D_W, 16, gain=0.3), "aff_conv3_b": fill((16,), 1.0),
        "aff_head_w": dense(D_W, 16, gain=0.3), "aff_head_b": fill((16,), 1.0),
        "aff_noise_w": dense(D_W, N_NOISE_INPUTS, gain=0.3),
        "aff_noise_b": fill((N_NOISE_INPUTS,), -4.0),
        # blur starts near the identity kernel (large inverse variance)
        "aff_blur_w": dense(D_W, 1, gain=0.3),
        "aff_blur_b": fill((1,), 4.0),
        # synthesis stack
        "const": Tensor(rng.normal(0.0, 1.0, size=(64, 7, 7)),
                        requires_grad=True, dtype=dtype),
        "conv1_w": conv(32, 64, 3), "conv1_b": fill((32,)),
        "conv2_w": conv(16, 32, 3), "conv2_b": fill((16,)),
        "conv3_w": conv(16, 16, 3), "conv3_b": fill((16,)),
        "head_w": conv(1, 16, 1), "head_b": fill((1,)),
    }
    # Frozen per-pixel noise inputs (coarse draws nearest-upsampled), unit
    # RMS, fixed at generation time so images stay a deterministic function
    # of the style vector.
    for i, cell in enumerate(_NOISE_CELLS):
        coarse = rng.standard_normal((28 // cell, 28 // cell))
        field = np.repeat(np.repeat(coarse, cell, axis=0), cell, axis=1)
        field /= np.sqrt((field ** 2).mean())
        params[f"noise_input{i}"] = Tensor(field[None, None],
                                           requires_grad=False, dtype=dtype)
    return params


def init_encoder_params(seed=0, dtype=np.float32):
    rng = as_rng(seed)

    def conv(co, ci, k):
        return Tensor(rng.normal(0.0, np.sqrt(2.0 / (ci * k * k)), size=(co, ci, k, k)),
                      requires_grad=True, dtype=dtype)

    def fill(shape, value=0.0):
        return Tensor(np.full(shape, value), requires_grad=True, dtype=dtype)

    return {
        "enc1_w": conv(16, 1, 3), "enc1_b": fill((16,)),
        "enc2_w": conv(32, 16, 3), "enc2_b": fill((32,)),
        "enc_fc_w": Tensor(rng.normal(0.0, np.sqrt(2.0 / 1568), size=(1568, D_Z)),
                           requires_grad=True, dtype=dtype),
        "enc_fc_b": fill((D_Z,)),
        # auxiliary linear class probe on the codes; its loss keeps classes
        # linearly separated in latent space so the per-class sampling priors
        # occupy distinct regions
        "enc_cls_w": Tensor(rng.normal(0.0, np.sqrt(1.0 / D_Z),
                                       size=(D_Z, N_CLASSES)),
                            requires_grad=True, dtype=dtype),
        "enc_cls_b": fill((N_CLASSES,)),
    }


def one_hot(labels, dtype=np.float32):
    labels = np.asarray(labels, dtype=np.int64)
    eye = np.eye(N_CLASSES, dtype=dtype)
    return eye[labels]


def mapping_forward(params, z, labels):
    """(latent, class) -> intermediate code w; deterministic, differentiable."""
    z = z if isinstance(z, Tensor) else Tensor(np.asarray(z), dtype=np.float64)
    if z.shape[-1] != D_Z:
        raise ShapeMismatch(f"latent dim {z.shape[-1]} != {D_Z}")
    cond = ops.as_tensor(COND_GAIN * one_hot(labels))
    h = ops.concat([z, cond], axis=1)
    h = ops.leaky_relu(ops.affine(h, params["map1_w"], params["map1_b"]), LEAK)
    return ops.leaky_relu(ops.affine(h, params["map2_w"], params["map2_b"]), LEAK)


def style_affine(params, w):
    """Specialize w into the flat style vector via per-layer affine heads."""
    slices = [
        ops.affine(w, params[f"aff_{name}_w"], params[f"aff_{name}_b"])
        for name, _, _ in STYLE_LAYOUT
    ]
    return ops.concat(slices, axis=1)


def _layout_slice(s, name):
    table = {entry[0]: (entry[1], entry[2]) for entry in STYLE_LAYOUT}
    offset, width = table[name]
    return ops.slice_axis(s, 1, offset, width)


def noise_amplitudes(s):
    """Per-scale noise-input amplitudes encoded in the style vector."""
    return ops.softplus(_layout_slice(s, "noise"))


def blur_sigma_style(s):
    """Effective output-blur sigma encoded in the style vector: the blur
    knob is the log inverse variance, so sigma = exp(-knob/2) / sqrt(2)."""
    knob = _layout_slice(s, "blur")
    return ops.scale(ops.exp(ops.scale(knob, -0.5)), 2.0 ** -0.5)


_BLUR_TAP_SQ = np.arange(-BLUR_RADIUS, BLUR_RADIUS + 1, dtype=np.float64) ** 2


def _style_blur(content, s):
    """Per-sample Gaussian smoothing with the kernel built in-graph from the
    blur knob (taps exp(-t^2 * beta), beta = exp(knob); identity for large
    knobs)."""
    b = content.shape[0]
    k = 2 * BLUR_RADIUS + 1
    beta = ops.exp(_layout_slice(s, "blur"))  # (b, 1)
    taps = ops.exp(ops.mul(ops.as_tensor(-_BLUR_TAP_SQ[None]), beta))
    taps = ops.div(taps, ops.sum_(taps, axis=1, keepdims=True))
    kernel = ops.matmul(ops.reshape(taps, (b, k, 1)), ops.reshape(taps, (b, 1, k)))
    return ops.conv2d(content, ops.reshape(kernel, (b, 1, 1, k, k)), stride=1)


def _modulated_conv(x, weight, style_slice, demodulate=True):
    """Scale conv weights per input channel by the style and convolve with
    the per-sample kernels; demodulation divides by the per-output-channel
    RMS so uniform style rescaling cancels."""
    b = style_slice.shape[0]
    ci = weight.shape[1]
    s = ops.reshape(style_slice, (b, 1, ci, 1, 1))
    scaled = ops.mul(weight, s)  # (b, co, ci, k, k) via broadcast
    if demodulate:
        norm = ops.sqrt(ops.add(
            ops.sum_(ops.mul(scaled, scaled), axis=(2, 3, 4), keepdims=True),
            ops.as_tensor(DEMOD_EPS)))
        scaled = ops.div(scaled, norm)
    return ops.conv2d(x, scaled, stride=1)


def synthesize(params, s, return_intermediates=False):
    """Render images (b, 1, 28, 28) in [0, 1] from flat style vectors (b, d_s).

    ``return_intermediates`` additionally yields the post-activation feature
    map of each styled layer, for locality diagnostics.
    """
    s = s if isinstance(s, Tensor) else Tensor(np.asarray(s), dtype=np.float64)
    if s.shape[-1] != D_S:
        raise ShapeMismatch(f"style dim {s.shape[-1]} != {D_S}")
    b = s.shape[0]
    slices = {
        name: ops.slice_axis(s, 1, offset, width)
        for name, offset, width in STYLE_LAYOUT
    }
    taps = {}
    h = ops.broadcast_to(ops.reshape(params["const"], (1, 64, 7, 7)), (b, 64, 7, 7))
    h = _modulated_conv(h, params["conv1_w"], slices["conv1"])
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["conv1_b"], (1, 32, 1, 1))), LEAK)
    taps["conv1"] = h
    h = ops.upsample2x(h)
    h = _modulated_conv(h, params["conv2_w"], slices["conv2"])
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["conv2_b"], (1, 16, 1, 1))), LEAK)
    taps["conv2"] = h
    h = ops.upsample2x(h)
    h = _modulated_conv(h, params["conv3_w"], slices["conv3"])
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["conv3_b"], (1, 16, 1, 1))), LEAK)
    taps["conv3"] = h
    h = _modulated_conv(h, params["head_w"], slices["head"], demodulate=False)
    content = ops.sigmoid(ops.add(h, ops.reshape(params["head_b"], (1, 1, 1, 1))))
    taps["content"] = content
    blurred = _style_blur(content, s)
    taps["blurred"] = blurred
    amps = ops.softplus(slices["noise"])
    noisy = blurred
    for i in range(N_NOISE_INPUTS):
        amp = ops.reshape(ops.slice_axis(amps, 1, i, 1), (b, 1, 1, 1))
        noisy = ops.add(noisy, ops.mul(amp, params[f"noise_input{i}"]))
    out = ops.clamp(noisy, 0.0, 1.0)
    if return_intermediates:
        return out, taps
    return out


def encoder_forward(params, x, batch_stats=None, eps=1e-5):
    """Image -> latent z. Standardizes per dimension with batch statistics
    (training) or stored running statistics (inference)."""
    h = ops.conv2d(x, params["enc1_w"], stride=2)
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["enc1_b"], (1, 16, 1, 1))), LEAK)
    h = ops.conv2d(h, params["enc2_w"], stride=2)
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["enc2_b"], (1, 32, 1, 1))), LEAK)
    h = ops.reshape(h, (h.shape[0], 1568))
    z_raw = ops.affine(h, params["enc_fc_w"], params["enc_fc_b"])
    if batch_stats is None:
        m = ops.mean_(z_raw, axis=0, keepdims=True)
        centered = ops.sub(z_raw, m)
        v = ops.mean_(ops.mul(centered, centered), axis=0, keepdims=True)
        z = ops.div(centered, ops.sqrt(ops.add(v, ops.as_tensor(eps))))
        return z, m.data[0], v.data[0]
    mean, var = batch_stats
    z = ops.div(ops.sub(z_raw, ops.as_tensor(mean[None])),
                ops.as_tensor(np.sqrt(var[None] + eps)))
    return z, mean, var


def init_discriminator_params(seed=0, dtype=np.float32):
    rng = as_rng(seed)

    def conv(co, ci, k):
        return Tensor(rng.normal(0.0, np.sqrt(2.0 / (ci * k * k)), size=(co, ci, k, k)),
                      requires_grad=True, dtype=dtype)

    def fill(shape, value=0.0):
        return Tensor(np.full(shape, value), requires_grad=True, dtype=dtype)

    return {
        "d1_w": conv(16, 1, 3), "d1_b": fill((16,)),
        "d2_w": conv(32, 16, 3), "d2_b": fill((32,)),
        "d_fc_w": Tensor(rng.normal(0.0, np.sqrt(2.0 / 1568), size=(1568, 64)),
                         requires_grad=True, dtype=dtype),
        "d_fc_b": fill((64,)),
        "d_out_w": Tensor(rng.normal(0.0, np.sqrt(1.0 / 64), size=(64, 1)),
                          requires_grad=True, dtype=dtype),
        "d_out_b": fill((1,)),
        "d_proj": Tensor(rng.normal(0.0, 0.1, size=(N_CLASSES, 64)),
                         requires_grad=True, dtype=dtype),
    }


def discriminator_logit(params, x, labels):
    h = ops.conv2d(x, params["d1_w"], stride=2)
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["d1_b"], (1, 16, 1, 1))), LEAK)
    h = ops.conv2d(h, params["d2_w"], stride=2)
    h = ops.leaky_relu(ops.add(h, ops.reshape(params["d2_b"], (1, 32, 1, 1))), LEAK)
    h = ops.reshape(h, (h.shape[0], 1568))
    feats = ops.leaky_relu(ops.affine(h, params["d_fc_w"], params["d_fc_b"]), LEAK)
    base = ops.affine(feats, params["d_out_w"], params["d_out_b"])
    proj = ops.matmul(ops.as_tensor(one_hot(labels)), params["d_proj"])
    extra = ops.sum_(ops.mul(proj, feats), axis=1, keepdims=True)
    return ops.add(base, extra)


class StyleGenerator(BaseEstimator):
    """Trainable conditional generator exposing a flat style space.

    ``fit(X, y)`` trains on labeled images; ``regime`` selects reconstruction
    (default: joint conv encoder, pixel MSE + small L2 on w) or adversarial
    (non-saturating GAN with a small conv discriminator). Both are
    deterministic given ``seed``.
    """

    def __init__(self, epochs=10, lr=1.5e-3, batch_size=32, seed=0,
                 regime="reconstruction", w_penalty=1e-3, latent_noise=0.1,
                 amp_penalty=2.0, class_penalty=0.3, precision="single"):
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed
        self.regime = regime
        self.w_penalty = w_penalty
        self.latent_noise = latent_noise
        self.amp_penalty = amp_penalty
        self.class_penalty = class_penalty
        self.precision = precision

    # ------------------------------------------------------------- surface

    @property
    def d_s(self):
        return D_S

    @property
    def d_z(self):
        return D_Z

    @property
    def style_layout(self):
        return STYLE_LAYOUT

    @property
    def n_classes(self):
        return N_CLASSES

    def _ensure_params(self):
        if not hasattr(self, "params_"):
            dtype = np.float32 if self.precision == "single" else np.float64
            self.params_ = init_generator_params(self.seed, dtype=dtype)
            self.stats_ = self._default_stats()
            self.meta_ = {"trained": False, "seed": self.seed}
        return self.params_

    @staticmethod
    def _default_stats():
        return {
            "z_mean": np.zeros(D_Z, dtype=np.float32),
            "z_var": np.ones(D_Z, dtype=np.float32),
            # Class-conditional Gaussian fit of the encoder's latent
            # distribution; standard normal draws pass through this affine so
            # they decode inside the class's trained code region. Identity
            # until training fits it.
            "prior_mean": np.zeros((N_CLASSES, D_Z), dtype=np.float32),
            "prior_chol": np.tile(np.eye(D_Z, dtype=np.float32),
                                  (N_CLASSES, 1, 1)),
        }

    def latent_transform(self, z, labels):
        """Class-conditional affine bridge from standard-normal draws to the
        code region the decoder was trained on (fitted after training)."""
        z = np.asarray(z, dtype=np.float32)
        labels = np.asarray(labels, dtype=np.int64)
        mean = self.stats_["prior_mean"][labels]
        chol = self.stats_["prior_chol"][labels]
        return mean + np.einsum("nij,nj->ni", chol, z)

    def styles_from_latents(self, z, labels):
        """Map standard-normal latent draws to flat style vectors."""
        params = self._ensure_params()
        z = self.latent_transform(z, labels)
        w = mapping_forward(params, Tensor(np.asarray(z), dtype=np.float32), labels)
        return style_affine(params, w).data

    def synthesize_tensor(self, s, labels=None):
        """Differentiable styles -> images; records on the active tape."""
        return synthesize(self._ensure_params(), s)

    def images_from_styles(self, S, labels=None, batch=256):
        S = np.asarray(S, dtype=np.float32)
        if S.ndim == 1:
            S = S[None]
        outs = []
        for start in range(0, S.shape[0], batch):
            outs.append(self.synthesize_tensor(
                Tensor(S[start:start + batch], dtype=np.float32)).data[:, 0])
        return np.concatenate(outs, axis=0)

    def sample_latents(self, n, rng):
        return as_rng(rng).standard_normal((n, D_Z)).astype(np.float32)

    def w_from_latents(self, z, labels):
        """Intermediate codes for standard-normal latent draws."""
        params = self._ensure_params()
        z = self.latent_transform(z, labels)
        return mapping_forward(params, Tensor(z, dtype=np.float32), labels).data

    def sample_styles(self, n, labels, rng):
        """Draw latents and map them through mapping + style heads."""
        return self.styles_from_latents(self.sample_latents(n, rng), labels)

    def generate(self, n, labels, rng):
        """Draw n latent samples and return (styles, images)."""
        z = self.sample_latents(n, rng)
        S = self.styles_from_latents(z, labels)
        return S, self.images_from_styles(S, labels)

    def encode(self, X):
        """Images -> latents using the stored running statistics."""
        params = self._ensure_params()
        X = check_image_batch(X)
        z, _, _ = encoder_forward(
            self.encoder_params_, Tensor(X[:, None], dtype=np.float32),
            batch_stats=(self.stats_["z_mean"], self.stats_["z_var"]))
        return z.data

    # ------------------------------------------------------------ training

    def fit(self, X, y, noise_sigma=None, blur_sigma=None):
        """Train on labeled images.

        ``noise_sigma`` and ``blur_sigma`` optionally give each sample's
        corruption levels (0 for clean samples); the reconstruction regime
        uses them to teach the explicit noise-amplitude and output-blur
        style pathways. Pixel MSE alone is blind to the unlearnable noise
        pattern (it renders denoised content), and supervising the blur knob
        keeps the content path sharp instead of baking blur into it.
        """
        X = check_image_batch(X)
        if X.shape[0] == 0:
            raise EmptyDataset("cannot fit on an empty dataset")
        y = check_labels(y, X.shape[0])

        def per_sample(values, name):
            if values is None:
                values = np.zeros(X.shape[0], dtype=np.float32)
            values = np.asarray(values, dtype=np.float32)
            if values.shape != (X.shape[0],):
                raise ShapeMismatch(
                    f"{name} shape {values.shape} != ({X.shape[0]},)")
            return values

        noise_sigma = per_sample(noise_sigma, "noise_sigma")
        blur_sigma = per_sample(blur_sigma, "blur_sigma")
        # Blur supervision happens in knob (log inverse variance) space,
        # where the loss is well conditioned; sigma 0 maps to the same floor
        # the identity-like kernel sits at.
        blur_knob_target = (-2.0 * np.log(np.sqrt(2.0)
                                          * np.maximum(blur_sigma, 0.08))
                            ).astype(np.float32)
        dtype = np.float32 if self.precision == "single" else np.float64
        self.params_ = init_generator_params(self.seed, dtype=dtype)
        self.encoder_params_ = init_encoder_params(self.seed + 1, dtype=dtype)
        self.stats_ = self._default_stats()
        if self.regime == "reconstruction":
            history = self._fit_reconstruction(X, y, noise_sigma,
                                               blur_knob_target)
            if self.epochs > 0:
                self._fit_latent_prior(X, y)
        elif self.regime == "adversarial":
            history = self._fit_adversarial(X, y)
        else:
            raise ValueError(f"unknown regime {self.regime!r}")
        self.history_ = history
        self.meta_ = {"trained": True, "seed": self.seed, "regime": self.regime,
                      "epochs": self.epochs}
        return self

    def _fit_reconstruction(self, X, y, noise_sigma, blur_knob_target):
        params, enc = self.params_, self.encoder_params_
        joint = {**params, **{f"enc::{k}": v for k, v in enc.items()}}
        state = AdamState()
        rng = as_rng(self.seed + 2)
        n = X.shape[0]
        history = []
        momentum = 0.99
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                if len(idx) < 2:
                    continue  # batch statistics need at least two samples
                xb = Tensor(X[idx][:, None], dtype=np.float32)
                noise = (self.latent_noise
                         * rng.standard_normal((len(idx), D_Z)).astype(np.float32))
                with Tape(precision=self.precision) as tape:
                    z, bmean, bvar = encoder_forward(enc, xb)
                    # Latent jitter widens the code neighbourhood the decoder
                    # covers, so prior draws decode cleanly.
                    z = ops.add(z, ops.as_tensor(noise))
                    w = mapping_forward(params, z, y[idx])
                    s = style_affine(params, w)
                    _, taps = synthesize(params, s, return_intermediates=True)
                    # Pixel MSE targets the blurred content (pre-noise); the
                    # noise amplitudes and the blur knob match the sample's
                    # known corruption levels instead.
                    err = ops.sub(taps["blurred"], xb)
                    # Equal per-field amplitude targets: k unit-RMS fields at
                    # sigma/sqrt(k) each sum (in variance) to the sample's
                    # noise level, and every field stays in active use.
                    amps = noise_amplitudes(s)
                    amp_err = ops.sub(amps, ops.as_tensor(
                        noise_sigma[idx][:, None] / np.sqrt(N_NOISE_INPUTS)))
                    knob = ops.reshape(_layout_slice(s, "blur"), (-1,))
                    knob_err = ops.scale(
                        ops.sub(knob, ops.as_tensor(blur_knob_target[idx])), 0.25)
                    corruption = ops.add(
                        ops.mean_(ops.mul(amp_err, amp_err)),
                        ops.mean_(ops.mul(knob_err, knob_err)))
                    aux_logits = ops.affine(z, enc["enc_cls_w"], enc["enc_cls_b"])
                    class_sep = ops.cross_entropy(aux_logits, y[idx])
                    loss = ops.add(ops.add(ops.add(
                        ops.mean_(ops.mul(err, err)),
                        ops.scale(ops.mean_(ops.mul(w, w)), self.w_penalty)),
                        ops.scale(corruption, self.amp_penalty)),
                        ops.scale(class_sep, self.class_penalty))
                    grads = tape.backward(loss)
                value = loss.item()
                if not np.isfinite(value):
                    raise DivergedTraining(f"reconstruction loss became {value}")
                epoch_loss += value * len(idx)
                adam_step(joint,
                          {k: tape.gradient(grads, p) for k, p in joint.items()},
                          state, lr=self.lr)
                self.stats_["z_mean"] = (momentum * self.stats_["z_mean"]
                                         + (1 - momentum) * bmean)
                self.stats_["z_var"] = (momentum * self.stats_["z_var"]
                                        + (1 - momentum) * bvar)
            history.append(epoch_loss / n)
        return history

    def _fit_latent_prior(self, X, y, batch=256, ridge=1e-3):
        """Fit per-class mean and Cholesky factor of the encoder's latent
        distribution over the training set; class-k sampling then reads
        N(0, I) draws through the class-k affine so they land where the
        decoder saw that class during training."""
        enc = self.encoder_params_
        stats = (self.stats_["z_mean"], self.stats_["z_var"])
        codes = []
        for start in range(0, X.shape[0], batch):
            xb = Tensor(X[start:start + batch][:, None], dtype=np.float32)
            z, _, _ = encoder_forward(enc, xb, batch_stats=stats)
            codes.append(z.data)
        codes = np.concatenate(codes, axis=0)
        mean = np.zeros((N_CLASSES, D_Z))
        chol = np.zeros((N_CLASSES, D_Z, D_Z))
        global_cov = np.cov(codes, rowvar=False) + ridge * np.eye(D_Z)
        for k in range(N_CLASSES):
            rows = codes[y == k]
            if rows.shape[0] <= D_Z:
                mean[k] = codes.mean(axis=0)
                chol[k] = np.linalg.cholesky(global_cov)
                continue
            mean[k] = rows.mean(axis=0)
            cov = np.cov(rows, rowvar=False) + ridge * np.eye(D_Z)
            chol[k] = np.linalg.cholesky(cov)
        self.stats_["prior_mean"] = mean.astype(np.float32)
        self.stats_["prior_chol"] = chol.astype(np.float32)

    def _fit_adversarial(self, X, y):
        params = self.params_
        disc = init_discriminator_params(self.seed + 3,
                                         dtype=params["const"].dtype)
        self.discriminator_params_ = disc
        g_state, d_state = AdamState(), AdamState()
        rng = as_rng(self.seed + 2)
        n = X.shape[0]
        history = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_g = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                b = len(idx)
                xb = Tensor(X[idx][:, None], dtype=np.float32)
                z = rng.standard_normal((b, D_Z)).astype(np.float32)
                fake_labels = y[idx]

                # discriminator step
                with Tape(precision=self.precision) as tape:
                    w = mapping_forward(params, Tensor(z, dtype=np.float32), fake_labels)
                    fake = synthesize(params, style_affine(params, w))
                    fake_const = Tensor(fake.data)  # detached for the D update
                    d_real = discriminator_logit(disc, xb, y[idx])
                    d_fake = discriminator_logit(disc, fake_const, fake_labels)
                    d_loss = ops.add(ops.mean_(ops.softplus(ops.scale(d_real, -1.0))),
                                     ops.mean_(ops.softplus(d_fake)))
                    grads = tape.backward(d_loss)
                if not np.isfinite(d_loss.item()):
                    raise DivergedTraining("discriminator loss became non-finite")
                adam_step(disc, {k: tape.gradient(grads, p) for k, p in disc.items()},
                          d_state, lr=self.lr)

                # generator step
                with Tape(precision=self.precision) as tape:
                    w = mapping_forward(params, Tensor(z, dtype=np.float32), fake_labels)
                    fake = synthesize(params, style_affine(params, w))
                    g_loss = ops.mean_(ops.softplus(
                        ops.scale(discriminator_logit(disc, fake, fake_labels), -1.0)))
                    grads = tape.backward(g_loss)
                value = g_loss.item()
                if not np.isfinite(value):
                    raise DivergedTraining("generator loss became non-finite")
                epoch_g += value * b
                adam_step(params,
                          {k: tape.gradient(grads, p) for k, p in params.items()},
                          g_state, lr=self.lr)
            history.append(epoch_g / n)
        return history

    def reconstruction_mse(self, X, y):
        """Mean squared reconstruction error through encode -> synthesize."""
        X = check_image_batch(X)
        y = check_labels(y, X.shape[0])
        z = self.encode(X)
        S = self.styles_from_latents(z, y)
        rec = self.images_from_styles(S, y)
        return float(np.mean((rec - X) ** 2))

    # --------------------------------------------------------- persistence

    def save(self, blob_path, sidecar_path=None, final_mse=None):
        arrays = {k: p.data for k, p in self._ensure_params().items()}
        if hasattr(self, "encoder_params_"):
            arrays.update({f"enc::{k}": p.data for k, p in self.encoder_params_.items()})
        arrays.update({f"stat::{k}": v for k, v in self.stats_.items()})
        save_arrays(blob_path, arrays, precision=self.precision)
        if sidecar_path:
            sidecar = {
                "schema_version": 1,
                "architecture": "map2-aff3-syn7.14.28",
                "d_z": D_Z, "d_w": D_W, "d_s": D_S,
                "style_layout": [list(entry) for entry in STYLE_LAYOUT],
                "regime": getattr(self, "meta_", {}).get("regime", self.regime),
                "seed": self.seed,
                "epochs": self.epochs,
                "final_mse": final_mse,
            }
            with open(sidecar_path, "w", encoding="utf-8") as fh:
                json.dump(sidecar, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def load(cls, blob_path, sidecar_path=None):
        arrays, precision = load_arrays(blob_path)
        gen = cls(precision=precision)
        gen.params_ = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()
                       if "::" not in k}
        enc = {k.split("::", 1)[1]: Tensor(v, requires_grad=True)
               for k, v in arrays.items() if k.startswith("enc::")}
        if enc:
            gen.encoder_params_ = enc
        gen.stats_ = cls._default_stats()
        for key, value in arrays.items():
            if key.startswith("stat::"):
                gen.stats_[key.split("::", 1)[1]] = value.astype(np.float32)
        gen.meta_ = {"trained": True, "seed": None}
        if sidecar_path:
            with open(sidecar_path, encoding="utf-8") as fh:
                gen.meta_.update(json.load(fh))
        return gen
