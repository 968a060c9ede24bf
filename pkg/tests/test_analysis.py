"""Analysis layer: populations, gradient ranking vs the brute-force oracle,
histogram separation, boundary search, curves."""

import numpy as np
import pytest

from styleprobe.analysis import (
    accuracy_vs_distance,
    build_population,
    class_mean_style,
    dimension_histograms,
    find_corner_cases,
    find_shift_reference,
    finite_difference_scores,
    ks_statistic,
    ProbePopulation,
    reclassify,
    score_dimensions,
    scores_from_gradients,
    solve_probability_crossing,
    split_populations,
    top_dims,
    traverse,
)
from styleprobe.exceptions import (
    EmptySubset,
    NoCrossingWithinBound,
    ScopeMismatch,
    StartBelowThreshold,
)
from styleprobe.models import AnalyticGenerator, ConvNetClassifier


@pytest.fixture(scope="module")
def oracle_setup(tiny_corpus):
    """Clean-glyph classifier + analytic generator, shared by this module."""
    X, y = tiny_corpus
    clf = ConvNetClassifier(epochs=5, seed=0).fit(X, y, trained_on="clean")
    gen = AnalyticGenerator(seed=0)
    return gen, clf


def _mock_population(styles, true_classes, predicted):
    n, _ = styles.shape
    probs = np.zeros((n, 10), dtype=np.float32)
    probs[np.arange(n), predicted] = 1.0
    return ProbePopulation(
        styles=np.asarray(styles, dtype=np.float32),
        true_classes=np.asarray(true_classes, dtype=np.int64),
        probs=probs,
        predicted=np.asarray(predicted, dtype=np.int64),
        images=np.zeros((n, 28, 28), dtype=np.float32),
    )


# ---------------------------------------------------------------- population

def test_build_population_single_sample(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 1, seed=0)
    assert len(pop) == 1
    assert pop.styles.shape == (1, gen.d_s)
    assert pop.probs.shape == (1, 10)
    assert pop.images.shape == (1, 28, 28)
    assert pop.predicted[0] == pop.probs[0].argmax()


def test_build_population_class_scope(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 25, scope=3, seed=1)
    assert np.all(pop.true_classes == 3)


def test_build_population_deterministic(oracle_setup):
    gen, clf = oracle_setup
    a = build_population(gen, clf, 16, seed=9)
    b = build_population(gen, clf, 16, seed=9)
    np.testing.assert_array_equal(a.styles, b.styles)
    np.testing.assert_array_equal(a.probs, b.probs)


def test_population_images_match_generator(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 5, seed=3)
    regen = gen.images_from_styles(pop.styles, pop.true_classes)
    np.testing.assert_allclose(pop.images, regen, atol=1e-6)


def test_split_partition_and_empty_side():
    pop = _mock_population(np.zeros((4, 6)), [1, 1, 2, 2], [1, 1, 2, 2])
    well, mis = split_populations(pop)
    assert len(well) == 4 and len(mis) == 0
    pop2 = _mock_population(np.zeros((4, 6)), [1, 1, 2, 2], [1, 0, 2, 0])
    well2, mis2 = split_populations(pop2)
    assert len(well2) + len(mis2) == len(pop2) == 4


def test_class_mean_style_identities():
    styles = np.array([[1.0, -2.0, 3.0]])
    pop = _mock_population(styles, [4], [4])
    np.testing.assert_array_equal(class_mean_style(pop, 4), styles[0])
    sym = _mock_population(np.array([[1.0, 2.0], [-1.0, -2.0]]), [3, 3], [3, 3])
    np.testing.assert_allclose(class_mean_style(sym, 3), np.zeros(2), atol=1e-7)
    with pytest.raises(EmptySubset):
        class_mean_style(pop, 5)


def test_reclassify_swaps_predictions(oracle_setup, tiny_corpus):
    gen, clf = oracle_setup
    X, y = tiny_corpus
    other = ConvNetClassifier(epochs=0, seed=1).fit(X, y)
    pop = build_population(gen, clf, 12, seed=5)
    repop = reclassify(pop, other)
    np.testing.assert_array_equal(repop.styles, pop.styles)
    np.testing.assert_allclose(repop.probs, other.predict_proba(pop.images),
                               atol=1e-7)


# ------------------------------------------------------------------- ranking

def test_scores_from_gradients_zero_rows_rank_by_index():
    rows = np.zeros((3, 5))
    scores = scores_from_gradients(rows)
    assert [s.dim for s in scores] == [0, 1, 2, 3, 4]
    assert all(s.mean_grad == 0.0 and s.direction == 1 for s in scores)
    assert [s.rank for s in scores] == [0, 1, 2, 3, 4]


def test_scores_single_sample_mean_is_the_sample():
    row = np.array([[0.5, -2.0, 0.0]])
    scores = scores_from_gradients(row)
    by_dim = {s.dim: s for s in scores}
    assert by_dim[1].mean_grad == -2.0 and by_dim[1].direction == 1
    assert by_dim[0].mean_grad == 0.5 and by_dim[0].direction == -1
    assert [s.dim for s in scores] == [1, 0, 2]


def test_score_dimensions_zero_head_classifier(oracle_setup, tiny_corpus):
    gen, _ = oracle_setup
    X, y = tiny_corpus
    from styleprobe.autodiff import Tensor

    clf = ConvNetClassifier(epochs=0, seed=0).fit(X, y)
    clf.params_["fc2_w"] = Tensor(np.zeros((64, 10)), requires_grad=True,
                                  dtype=np.float32)
    clf.params_["fc2_b"] = Tensor(np.zeros(10), requires_grad=True,
                                  dtype=np.float32)
    pop = build_population(gen, clf, 8, seed=2)
    scores = score_dimensions(pop, gen, clf)
    assert all(s.mean_grad == 0.0 for s in scores)
    assert [s.dim for s in scores] == list(range(gen.d_s))


def test_score_dimensions_scope_filter(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 40, seed=3)
    scoped = score_dimensions(pop, gen, clf, scope=2)
    assert all(s.scope == "class2" for s in scoped)
    with pytest.raises(ScopeMismatch):
        score_dimensions(pop, gen, clf, scope=2, filter_scope=False)


def test_ranking_matches_finite_difference_oracle(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 50, seed=4)
    scores = score_dimensions(pop, gen, clf, precision="double")
    mean_ad = np.empty(gen.d_s)
    for s in scores:
        mean_ad[s.dim] = s.mean_grad
    mean_fd = finite_difference_scores(pop, gen, clf, delta=1e-3)

    big = np.abs(mean_ad) > 1e-4
    rel = np.abs(mean_ad - mean_fd) / np.maximum(
        np.abs(mean_ad) + np.abs(mean_fd), 1e-12)
    assert big.any()
    assert rel[big].max() < 0.05

    fd_top = set(top_dims(scores_from_gradients(mean_fd[None]), 10))
    ad_top = set(top_dims(scores, 10))
    assert len(fd_top & ad_top) >= 8


def test_analytic_padding_dims_score_exactly_zero(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 30, seed=5)
    scores = score_dimensions(pop, gen, clf)
    padding = set(gen.padding_dims)
    for s in scores:
        if s.dim in padding:
            assert s.mean_grad == 0.0
    assert padding.isdisjoint(top_dims(scores, 10) if gen.d_s - len(padding) >= 10
                              else top_dims(scores, gen.d_s - len(padding)))


# ---------------------------------------------------------------- histograms

def test_ks_trivial_cases():
    same = np.arange(10.0)
    assert ks_statistic(same, same) == 0.0
    assert ks_statistic(np.zeros(5), np.ones(5)) == 1.0


def test_dimension_histograms_contract():
    well = _mock_population(np.tile(np.linspace(0, 1, 50)[:, None], (1, 3)),
                            np.zeros(50, int), np.zeros(50, int))
    mis = _mock_population(np.tile(np.linspace(2, 3, 40)[:, None], (1, 3)),
                           np.zeros(40, int), np.ones(40, int))
    out = dimension_histograms(well, mis, dim=1, bins=10)
    assert out["separation"] == 1.0
    assert out["hist_well"].sum() == 50 and out["hist_mis"].sum() == 40
    assert len(out["edges"]) == 11
    with pytest.raises(EmptySubset):
        dimension_histograms(well, _mock_population(np.empty((0, 3)),
                                                    [], []), 0)


# ------------------------------------------------------------------ boundary

def test_crossing_on_synthetic_sigmoid():
    # C_true(shift) = sigmoid(a - shift) crosses 0.5 exactly at shift = a.
    a = 2.37

    def f(t):
        return 1.0 / (1.0 + np.exp(-(a - t)))

    shift, prob = solve_probability_crossing(f, initial_step=0.1, max_shift=50.0,
                                             tolerance=1e-4)
    assert abs(shift - a) < 1e-3
    assert abs(prob - 0.5) <= 1e-4


def test_crossing_requires_confident_start():
    with pytest.raises(StartBelowThreshold):
        solve_probability_crossing(lambda t: 0.5, initial_step=0.1, max_shift=10.0)


def test_crossing_bound_exhausted():
    with pytest.raises(NoCrossingWithinBound):
        solve_probability_crossing(lambda t: 0.9, initial_step=0.1, max_shift=10.0)


def test_find_shift_reference_self_consistent(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 300, scope=7, seed=6)
    center = class_mean_style(pop, 7, well_only=True)
    scores = score_dimensions(pop, gen, clf, scope=7)
    lead = scores[0]
    shift = find_shift_reference(center, lead.dim, lead.direction, gen, clf, 7,
                                 coordinate_scale=pop.styles[:, lead.dim].std())
    probe = center.copy()
    probe[lead.dim] += shift
    prob = clf.predict_proba(gen.images_from_styles(probe[None], [7]))[0, 7]
    assert abs(prob - 0.5) <= 0.01
    assert np.sign(shift) == lead.direction


def test_find_shift_reference_null_dimension(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 200, scope=7, seed=6)
    center = class_mean_style(pop, 7, well_only=True)
    with pytest.raises(NoCrossingWithinBound):
        find_shift_reference(center, gen.padding_dims[0], 1, gen, clf, 7)


def test_traverse_frames_contract(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 300, scope=2, seed=8)
    center = class_mean_style(pop, 2, well_only=True)
    scores = score_dimensions(pop, gen, clf, scope=2)
    lead = scores[0]
    fractions = (0.0, 0.5, 1.0)
    result = traverse(center, lead.dim, lead.direction, gen, clf, 2,
                      fractions=fractions,
                      coordinate_scale=pop.styles[:, lead.dim].std())
    assert [f.progress for f in result.frames] == list(fractions)
    # Fraction 0 reproduces the start image and its confidence.
    start_img = gen.images_from_styles(center[None], [2])[0]
    np.testing.assert_array_equal(result.frames[0].image, start_img)
    assert result.frames[0].shift == 0.0
    # Shifts are exactly fraction * reference.
    for frac, frame in zip(fractions, result.frames):
        assert frame.shift == pytest.approx(frac * result.shift_reference)
    # Fraction 1 sits at the threshold; confidence dropped along the way.
    assert abs(result.frames[-1].true_class_prob - 0.5) <= 0.01
    assert result.frames[-1].true_class_prob < result.frames[0].true_class_prob


def test_find_corner_cases_oracle(oracle_setup):
    gen, clf = oracle_setup
    pop = build_population(gen, clf, 400, scope=7, seed=10)
    cases, skipped = find_corner_cases(pop, gen, clf, 7, top_m=10)
    assert cases, "expected at least one corner case"
    dims_found = {c.dim for c in cases}
    assert 0 in dims_found  # the noise knob must produce a corner case
    padding = set(gen.padding_dims)
    assert dims_found.isdisjoint(padding)
    for dim in padding & set(skipped):
        assert skipped[dim] == "no_crossing"
    for case in cases:
        assert abs(case.true_class_prob - 0.5) <= 0.01
        assert case.post_flip_predicted != 7
        # Re-evaluate the stored boundary point independently.
        probe = case.start_style.copy()
        probe[case.dim] += case.shift_at_threshold
        prob = clf.predict_proba(gen.images_from_styles(probe[None], [7]))[0, 7]
        assert abs(prob - 0.5) <= 0.01


# -------------------------------------------------------------------- curves

def test_accuracy_curve_all_correct_is_flat_one():
    rng = np.random.default_rng(0)
    styles = rng.standard_normal((3000, 8)).astype(np.float32)
    pop = _mock_population(styles, np.zeros(3000, int), np.zeros(3000, int))
    curve = accuracy_vs_distance(pop, np.zeros(8), dims=np.arange(8),
                                 min_bin_count=100)
    assert len(curve.bins) >= 2
    assert all(b.accuracy == 1.0 for b in curve.bins)
    assert all(b.count >= 100 for b in curve.bins)


def test_accuracy_curve_counts_every_kept_sample_once():
    rng = np.random.default_rng(1)
    styles = rng.standard_normal((1000, 4)).astype(np.float32)
    correct = rng.random(1000) < 0.7
    predicted = np.where(correct, 0, 1)
    pop = _mock_population(styles, np.zeros(1000, int), predicted)
    curve = accuracy_vs_distance(pop, np.zeros(4), dims=np.arange(4),
                                 min_bin_count=50, cutoff_quantile=0.95)
    from styleprobe.analysis import style_distances

    d = style_distances(styles.astype(np.float64), np.zeros(4), np.arange(4))
    kept = d <= curve.distance_cutoff
    assert sum(b.count for b in curve.bins) == int(kept.sum())
    total_hits = sum(b.accuracy * b.count for b in curve.bins)
    assert total_hits == pytest.approx(float(correct[kept].sum()))
    # Bin edges tile [first, last] without gaps.
    for prev, nxt in zip(curve.bins, curve.bins[1:]):
        assert prev.hi == pytest.approx(nxt.lo)


def test_accuracy_curve_empty_population():
    with pytest.raises(EmptySubset):
        accuracy_vs_distance(_mock_population(np.empty((0, 4)), [], []),
                             np.zeros(4), dims=np.arange(4))
