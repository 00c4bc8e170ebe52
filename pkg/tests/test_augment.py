import itertools

import numpy as np
import pytest

from src.collectors.datasets import BINARY_ALPHABET, LabeledDataset, scaled
from src.hypotheses.augment import (
    NO_INFLUENCE,
    TIE,
    AugmentedDecision,
    augmented_classify,
    augmented_restriction,
    class_log_scores,
    class_scores,
    classify_many,
    decision_token,
    influences,
    is_fixed,
    pairwise_kernel_matrix,
    parse_decision,
)
from src.hypotheses.threshold import solve_threshold
from src.noise.kernels import KernelSpec, density
from src.utils.errors import KernelError


def uniform(sigma):
    return KernelSpec("uniform_ball", sigma, 2)


class TestClassScores:
    def test_self_term_only(self, demo):
        k = uniform(0.125)
        scores = class_scores(demo, None, k, demo.points[3])
        assert scores["+1"] == pytest.approx(1.0 / (0.125 ** 2 * np.pi))
        assert scores["-1"] == 0.0

    def test_single_point(self):
        ds = LabeledDataset(np.array([[0.0, 0.0]]), np.array([0]), BINARY_ALPHABET)
        scores = class_scores(ds, None, KernelSpec("gaussian", 1.0, 2), [0.3, 0.1])
        assert scores["-1"] > 0.0
        assert scores["+1"] == 0.0

    def test_midpoint_of_equal_labels(self):
        ds = LabeledDataset(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([1, 1]), BINARY_ALPHABET)
        k = KernelSpec("laplace", 0.8, 2)
        scores = class_scores(ds, None, k, [0.5, 0.0])
        assert scores["+1"] == pytest.approx(2.0 * density(k, [0.5, 0.0]))

    def test_dimension_mismatch(self, demo):
        with pytest.raises(KernelError):
            class_scores(demo, None, KernelSpec("gaussian", 1.0, 3), [0.0, 0.0, 0.0])

    def test_log_scores_match_scores(self, demo):
        k = KernelSpec("laplace", 0.7, 2)
        x = [0.1, 0.2]
        scores = class_scores(demo, None, k, x)
        log_scores = class_log_scores(demo, None, k, x)
        for label in demo.alphabet:
            assert log_scores[label] == pytest.approx(np.log(scores[label]), rel=1e-12)

    def test_log_scores_survive_underflow(self):
        ds = LabeledDataset(np.array([[0.0], [1.0]]), np.array([0, 1]), BINARY_ALPHABET)
        k = KernelSpec("gaussian", 0.01, 1)
        assert class_scores(ds, None, k, [1.5])["+1"] == 0.0
        log_scores = class_log_scores(ds, None, k, [1.5])
        assert np.isfinite(log_scores["+1"])
        assert log_scores["+1"] > log_scores["-1"]

    def test_log_scores_empty_class(self, line3):
        log_scores = class_log_scores(line3, None, KernelSpec("gaussian", 1.0, 1), [0.5])
        assert log_scores["-1"] == float("-inf")


class TestAugmentedClassify:
    def test_small_sigma_keeps_training_labels(self, demo):
        for x, y in zip(demo.points, demo.labels):
            assert augmented_classify(demo, None, uniform(0.125), x) == AugmentedDecision.label(y)

    def test_lone_negative_is_not_classified_negative(self, demo):
        # its only neighbor inside the support is a +1 point at the same distance as itself
        decision = augmented_classify(demo, None, uniform(0.5), demo.points[0])
        assert decision != AugmentedDecision.label(0)
        assert decision.is_tie

    def test_lone_negative_outvoted_at_large_sigma(self, demo):
        decision = augmented_classify(demo, None, uniform(2.0), demo.points[0])
        assert decision == AugmentedDecision.label(1)

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_equidistant_opposite_labels_tie(self, two_points, family):
        k = KernelSpec(family, 3.0, 2)
        assert augmented_classify(two_points, None, k, [1.0, 0.0]).is_tie

    def test_no_influence_far_away(self, demo):
        assert augmented_classify(demo, None, uniform(0.125), [10.0, 10.0]).is_no_influence

    @pytest.mark.parametrize("family", ["gaussian", "laplace"])
    def test_far_query_goes_to_nearest_class(self, family):
        ds = LabeledDataset(np.array([[0.0], [1.0]]), np.array([0, 1]), BINARY_ALPHABET)
        k = KernelSpec(family, 0.01, 1)
        assert augmented_classify(ds, None, k, [1.5]) == AugmentedDecision.label(1)
        assert augmented_classify(ds, None, k, [-40.0]) == AugmentedDecision.label(0)

    def test_far_query_restriction_keeps_labels(self):
        ds = LabeledDataset(np.array([[0.0], [1.0], [2.0]]), np.array([0, 1, 0]), BINARY_ALPHABET)
        assert is_fixed(ds, None, KernelSpec("gaussian", 0.005, 1))


class TestRestriction:
    def test_small_sigma_identity(self, demo):
        np.testing.assert_array_equal(augmented_restriction(demo, None, uniform(0.125)), demo.labels)
        assert is_fixed(demo, None, uniform(0.125))

    def test_lone_negative_flips_at_large_sigma(self, line3):
        h = np.array([1, 0, 1])
        codes = augmented_restriction(line3, h, KernelSpec("gaussian", 50.0, 1))
        assert codes[1] == 1

    def test_constant_labeling_is_fixed(self, demo):
        h = np.ones(demo.n, dtype=np.int64)
        for sigma in (0.1, 1.0, 10.0):
            assert is_fixed(demo, h, KernelSpec("gaussian", sigma, 2))


class TestInfluences:
    def test_gaussian_full_support(self):
        assert influences(KernelSpec("gaussian", 0.1, 2), [0.0, 0.0], [5.0, 5.0])

    def test_uniform_support(self):
        k = uniform(1.0)
        assert not influences(k, [0.0, 0.0], [2.0, 0.0])
        assert influences(k, [0.0, 0.0], [0.5, 0.0])


class TestDecisionCodec:
    @pytest.mark.parametrize("code,token", [(0, "-1"), (1, "+1"), (TIE, "TIE"), (NO_INFLUENCE, "NONE")])
    def test_tokens(self, code, token):
        assert decision_token(code, BINARY_ALPHABET) == token
        assert parse_decision(token, BINARY_ALPHABET) == code


def random_dataset(rng, n, n_classes=2, dim=2):
    alphabet = BINARY_ALPHABET if n_classes == 2 else tuple(f"c{i}" for i in range(n_classes))
    points = rng.uniform(-2.0, 2.0, size=(n, dim))
    return LabeledDataset(points, rng.integers(0, n_classes, size=n), alphabet)


class TestSymmetries:
    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_label_permutation_equivariance(self, family):
        rng = np.random.default_rng(3)
        ds = random_dataset(rng, 12, n_classes=3)
        k = KernelSpec(family, 1.5, 2)
        queries = rng.uniform(-3.0, 3.0, size=(200, 2))
        perm = np.array([2, 0, 1])
        base = classify_many(ds, None, k, queries)
        moved = classify_many(ds, perm[ds.labels], k, queries)
        expected = np.where(base >= 0, perm[np.maximum(base, 0)], base)
        np.testing.assert_array_equal(moved, expected)

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_point_permutation_invariance(self, family):
        rng = np.random.default_rng(5)
        ds = random_dataset(rng, 10)
        k = KernelSpec(family, 1.0, 2)
        queries = rng.uniform(-3.0, 3.0, size=(200, 2))
        order = rng.permutation(ds.n)
        shuffled = ds.subset(order)
        np.testing.assert_array_equal(classify_many(ds, None, k, queries), classify_many(shuffled, None, k, queries))
        np.testing.assert_array_equal(augmented_restriction(ds, None, k)[order], augmented_restriction(shuffled, None, k))

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    @pytest.mark.parametrize("c", [0.5, 4.0])
    def test_scale_covariance(self, family, c):
        # powers of two keep z / sigma bit-identical
        rng = np.random.default_rng(8)
        ds = random_dataset(rng, 9)
        k = KernelSpec(family, 0.8, 2)
        queries = rng.uniform(-3.0, 3.0, size=(200, 2))
        base = classify_many(ds, None, k, queries)
        big = classify_many(scaled(ds, c), None, KernelSpec(family, 0.8 * c, 2), c * queries)
        np.testing.assert_array_equal(base, big)


class TestSelfConsistency:
    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_every_labeling_fixed_below_threshold(self, family):
        rng = np.random.default_rng(11)
        for n in (3, 6, 10):
            ds = random_dataset(rng, n)
            sigma = 0.99 * solve_threshold(ds, family).theta_strict
            k = KernelSpec(family, sigma, 2)
            matrix = pairwise_kernel_matrix(ds, k)
            for h in itertools.product((0, 1), repeat=n):
                assert is_fixed(ds, np.array(h), k, matrix), (n, h)
