"""Learned generator: mapping/style/synthesis contracts, differentiability,
training behaviour, persistence. Analytic generator: ground-truth knob
semantics and the zero-effect padding control."""

import numpy as np
import pytest

from styleprobe.autodiff import Tape, Tensor, ops
from styleprobe.autodiff.gradcheck import finite_diff_check
from styleprobe.exceptions import EmptyDataset, ShapeMismatch
from styleprobe.models import AnalyticGenerator, StyleGenerator
from styleprobe.models.classifier import classifier_probs, init_classifier_params
from styleprobe.models.generator import (
    D_S,
    D_W,
    D_Z,
    STYLE_LAYOUT,
    init_generator_params,
    mapping_forward,
    style_affine,
    synthesize,
)


def test_style_layout_covers_flat_range_exactly_once():
    covered = []
    for _, offset, width in STYLE_LAYOUT:
        covered.extend(range(offset, offset + width))
    assert covered == list(range(D_S))
    assert D_S == sum(width for _, _, width in STYLE_LAYOUT)


def test_mapping_deterministic_and_class_sensitive():
    params = init_generator_params(seed=0)
    z = np.random.default_rng(0).standard_normal((1, D_Z)).astype(np.float32)
    w1 = mapping_forward(params, Tensor(z), [3]).data
    w2 = mapping_forward(params, Tensor(z), [3]).data
    w3 = mapping_forward(params, Tensor(z), [4]).data
    np.testing.assert_array_equal(w1, w2)
    assert np.abs(w1 - w3).max() > 1e-6


def test_mapping_gradient_wrt_latent():
    params = init_generator_params(seed=1)
    rng = np.random.default_rng(2)
    z0 = rng.standard_normal(D_Z)
    weights = rng.standard_normal((1, D_W))

    def f(zflat):
        with Tape(precision="double") as tape:
            z = Tensor(zflat[None], requires_grad=True, dtype=np.float64)
            w = mapping_forward(params, z, [5])
            out = ops.sum_(ops.mul(w, ops.as_tensor(weights)))
            grads = tape.backward(out)
        return out.item(), tape.gradient(grads, z)[0]

    assert finite_diff_check(f, z0, step=1e-6) < 1e-4


def test_style_affine_zero_weights_returns_biases():
    params = init_generator_params(seed=0)
    for name, _, width in STYLE_LAYOUT:
        params[f"aff_{name}_w"] = Tensor(np.zeros((D_W, width)),
                                         requires_grad=True, dtype=np.float32)
        params[f"aff_{name}_b"] = Tensor(np.arange(width, dtype=np.float64),
                                         requires_grad=True, dtype=np.float32)
    w = Tensor(np.random.default_rng(1).standard_normal((2, D_W)).astype(np.float32))
    s = style_affine(params, w).data
    expected = np.concatenate([np.arange(width) for _, _, width in STYLE_LAYOUT])
    np.testing.assert_allclose(s, np.tile(expected, (2, 1)), atol=1e-6)


def test_synthesize_range_shape_determinism():
    params = init_generator_params(seed=0)
    s = Tensor(np.random.default_rng(3).standard_normal((4, D_S)).astype(np.float32))
    img1 = synthesize(params, s).data
    img2 = synthesize(params, s).data
    assert img1.shape == (4, 1, 28, 28)
    assert img1.min() >= 0.0 and img1.max() <= 1.0
    np.testing.assert_array_equal(img1, img2)


def test_synthesize_rejects_wrong_style_dim():
    params = init_generator_params(seed=0)
    with pytest.raises(ShapeMismatch):
        synthesize(params, Tensor(np.zeros((1, D_S + 1), dtype=np.float32)))


def test_synthesize_gradient_wrt_style():
    params = init_generator_params(seed=0, dtype=np.float64)
    rng = np.random.default_rng(4)
    s0 = rng.standard_normal(D_S)
    weights = rng.standard_normal((1, 1, 28, 28))

    def f(svec):
        with Tape(precision="double") as tape:
            s = Tensor(svec[None], requires_grad=True, dtype=np.float64)
            img = synthesize(params, s)
            out = ops.sum_(ops.mul(img, ops.as_tensor(weights)))
            grads = tape.backward(out)
        return out.item(), tape.gradient(grads, s)[0]

    assert finite_diff_check(f, s0, step=1e-6) < 1e-3


def test_style_modulation_locality():
    # Zeroing one layer's style slice must leave earlier feature maps
    # untouched: each slice only modulates its own layer's weights.
    params = init_generator_params(seed=5)
    rng = np.random.default_rng(6)
    s_base = rng.standard_normal((1, D_S)).astype(np.float32)
    s_zeroed = s_base.copy()
    name, offset, width = STYLE_LAYOUT[2]  # conv3; conv1/conv2 come before
    s_zeroed[:, offset:offset + width] = 0.0
    out_a, taps_a = synthesize(params, Tensor(s_base), return_intermediates=True)
    out_b, taps_b = synthesize(params, Tensor(s_zeroed), return_intermediates=True)
    for earlier, _, _ in STYLE_LAYOUT[:2]:
        np.testing.assert_array_equal(taps_a[earlier].data, taps_b[earlier].data)
    assert np.abs(taps_a[name].data - taps_b[name].data).max() > 1e-6
    # The non-demodulated head slice scales output contributions monotonely:
    # doubling it moves every pre-sigmoid logit away from the head bias.
    s_double = s_base.copy()
    h_off, h_width = STYLE_LAYOUT[3][1], STYLE_LAYOUT[3][2]
    s_double[:, h_off:h_off + h_width] *= 2.0
    out_c = synthesize(params, Tensor(s_double)).data
    assert np.abs(out_c - out_a.data).max() > 1e-6


def test_generate_equals_composition():
    gen = StyleGenerator(seed=0)
    rng = np.random.default_rng(7)
    labels = np.array([1, 8, 0])
    S, images = gen.generate(3, labels, rng)
    z = StyleGenerator(seed=0).sample_latents(3, np.random.default_rng(7))
    S2 = gen.styles_from_latents(z, labels)
    np.testing.assert_array_equal(S, S2)
    np.testing.assert_array_equal(images, gen.images_from_styles(S, labels))


def test_thousand_draws_are_distinct():
    gen = StyleGenerator(seed=0)
    rng = np.random.default_rng(8)
    labels = np.tile(np.arange(10), 100)
    S = gen.sample_styles(1000, labels, rng)
    assert np.unique(S, axis=0).shape[0] == 1000


def test_class_conditional_mean_style_is_arithmetic_mean():
    gen = StyleGenerator(seed=0)
    S = gen.sample_styles(50, np.full(50, 2), np.random.default_rng(9))
    np.testing.assert_allclose(S.mean(axis=0), np.mean(S, axis=0), rtol=0)


def test_fit_zero_epochs_returns_init_unchanged(tiny_corpus):
    X, y = tiny_corpus
    gen = StyleGenerator(epochs=0, seed=4).fit(X, y)
    init = init_generator_params(seed=4)
    for name, p in gen.params_.items():
        np.testing.assert_array_equal(p.data, init[name].data)
    # Prior fit is skipped at 0 epochs: transform stays identity.
    z = np.random.default_rng(0).standard_normal((3, D_Z)).astype(np.float32)
    np.testing.assert_array_equal(gen.latent_transform(z, [0, 1, 2]), z)


def test_fit_empty_rejected():
    with pytest.raises(EmptyDataset):
        StyleGenerator(epochs=1).fit(np.empty((0, 28, 28)), np.empty(0, int))


def test_reconstruction_loss_decreases(tiny_corpus):
    X, y = tiny_corpus
    gen = StyleGenerator(epochs=3, seed=0, batch_size=32).fit(X, y)
    assert gen.history_[1] < gen.history_[0]
    assert gen.history_[2] < gen.history_[1]


def test_fit_deterministic(tiny_corpus):
    X, y = tiny_corpus
    a = StyleGenerator(epochs=1, seed=2).fit(X, y)
    b = StyleGenerator(epochs=1, seed=2).fit(X, y)
    for name in a.params_:
        assert np.array_equal(a.params_[name].data, b.params_[name].data), name
    np.testing.assert_array_equal(a.stats_["prior_mean"], b.stats_["prior_mean"])


def test_adversarial_regime_smoke(tiny_corpus):
    X, y = tiny_corpus
    gen = StyleGenerator(epochs=1, seed=0, regime="adversarial",
                         batch_size=32, lr=5e-4).fit(X[:128], y[:128])
    assert np.isfinite(gen.history_).all()
    S, images = gen.generate(4, np.array([0, 1, 2, 3]), np.random.default_rng(0))
    assert images.shape == (4, 28, 28)


def test_save_load_round_trip(tiny_corpus, tmp_path):
    X, y = tiny_corpus
    gen = StyleGenerator(epochs=1, seed=0).fit(X, y)
    blob = tmp_path / "gen.lpt"
    gen.save(blob, str(blob) + ".json", final_mse=0.1)
    again = StyleGenerator.load(blob, str(blob) + ".json")
    labels = np.array([5, 6])
    rng_a, rng_b = np.random.default_rng(1), np.random.default_rng(1)
    Sa, Ia = gen.generate(2, labels, rng_a)
    Sb, Ib = again.generate(2, labels, rng_b)
    np.testing.assert_array_equal(Sa, Sb)
    np.testing.assert_array_equal(Ia, Ib)
    assert again.meta_["d_s"] == D_S


# ----------------------------------------------------------- analytic oracle

def test_analytic_neutral_styles_reproduce_base_glyph():
    gen = AnalyticGenerator()
    s = np.zeros(gen.d_s)
    s[1] = -12.0  # blur knob far negative: sigma ~ 0
    img = gen.images_from_styles(s, [3])[0]
    np.testing.assert_allclose(img, gen.base_glyph(3), atol=1e-6)


def test_analytic_blur_knob_reduces_total_variation():
    gen = AnalyticGenerator()

    def total_variation(img):
        return (np.abs(np.diff(img, axis=0)).sum()
                + np.abs(np.diff(img, axis=1)).sum())

    tvs = []
    for knob in (-2.0, -1.0, 0.0, 1.0, 2.0):
        s = np.zeros(gen.d_s)
        s[1] = knob
        tvs.append(total_variation(gen.images_from_styles(s, [5])[0]))
    assert all(b < a for a, b in zip(tvs, tvs[1:]))


def test_analytic_noise_gradient_is_masked_field():
    gen = AnalyticGenerator()
    s0 = np.zeros(gen.d_s)
    s0[1] = -12.0
    s0[0] = 0.3
    with Tape(precision="double") as tape:
        s = Tensor(s0[None], requires_grad=True, dtype=np.float64)
        img = gen.synthesize_tensor(s, [7])
        grads = tape.backward(ops.sum_(img))
    grad_noise = tape.gradient(grads, s)[0, 0]
    base = gen.base_glyph(7)
    pre_clamp = base + 0.3 * gen.noise_field
    mask = (pre_clamp > 0.0) & (pre_clamp < 1.0)
    expected = (gen.noise_field * mask).sum()
    np.testing.assert_allclose(grad_noise, expected, rtol=1e-9)


def test_analytic_padding_dims_have_exactly_zero_gradient():
    gen = AnalyticGenerator()
    rng = np.random.default_rng(11)
    s0 = rng.standard_normal((2, gen.d_s))
    with Tape(precision="double") as tape:
        s = Tensor(s0, requires_grad=True, dtype=np.float64)
        img = gen.synthesize_tensor(s, [0, 4])
        grads = tape.backward(ops.sum_(img))
    g = tape.gradient(grads, s)
    assert np.all(g[:, list(gen.padding_dims)] == 0.0)
    assert np.abs(g[:, :5]).max() > 0


def test_analytic_determinism_and_shapes():
    gen = AnalyticGenerator(seed=3)
    rng = np.random.default_rng(0)
    labels = np.array([0, 9])
    S = gen.sample_styles(2, labels, rng)
    a = gen.images_from_styles(S, labels)
    b = gen.images_from_styles(S, labels)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (2, 28, 28)
    assert a.min() >= 0.0 and a.max() <= 1.0


def test_analytic_label_count_mismatch():
    gen = AnalyticGenerator()
    with pytest.raises(ShapeMismatch):
        gen.images_from_styles(np.zeros((2, gen.d_s)), [1])
