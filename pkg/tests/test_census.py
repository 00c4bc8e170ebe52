import math

import numpy as np
import pytest

from src.collectors.datasets import BINARY_ALPHABET, LabeledDataset
from src.hypotheses.census import (
    class_from_census,
    empirical_rademacher,
    enumerate_census,
    full_sign_class,
    labelings_for_indices,
    pac_sample_bound,
    worst_case_check,
)
from src.hypotheses.threshold import solve_threshold
from src.noise.kernels import KernelSpec
from src.utils.errors import CensusCapError, ConfigError, DatasetError


def random_instance(rng, family, n_classes):
    n = int(rng.integers(3, 9))
    dim = 2 if family == "uniform_ball" else int(rng.integers(1, 4))
    points = rng.uniform(-2.0, 2.0, size=(n, dim))
    alphabet = BINARY_ALPHABET if n_classes == 2 else ("a", "b", "c")
    return LabeledDataset(points, rng.integers(0, n_classes, size=n), alphabet)


class TestEnumerateCensus:
    def test_below_threshold(self, line3):
        report = enumerate_census(line3, KernelSpec("gaussian", 0.5, 1))
        assert report.total == 8
        assert report.realizable_after == 8
        assert report.equality

    def test_above_threshold(self, line3):
        report = enumerate_census(line3, KernelSpec("gaussian", 2.0, 1))
        assert not report.equality
        assert ["+1", "-1", "+1"] in report.lost_examples

    def test_uniform_below_min_distance(self, demo):
        report = enumerate_census(demo, KernelSpec("uniform_ball", 0.2, 2))
        assert report.realizable_after == report.total == 2 ** 9

    def test_cap(self, demo):
        with pytest.raises(CensusCapError) as info:
            enumerate_census(demo, KernelSpec("gaussian", 1.0, 2), cap=100)
        assert info.value.required == 512

    def test_workers_do_not_change_the_result(self):
        rng = np.random.default_rng(2)
        ds = LabeledDataset(rng.normal(size=(17, 2)), np.zeros(17, dtype=np.int64), BINARY_ALPHABET)
        k = KernelSpec("gaussian", 0.8, 2)
        one = enumerate_census(ds, k, workers=1)
        many = enumerate_census(ds, k, workers=4)
        assert one.to_dict() == many.to_dict()

    def test_best_agreement(self, line3):
        report = enumerate_census(line3, KernelSpec("gaussian", 2.0, 1), target=np.array([1, 0, 1]))
        assert report.best_agreement == 2

    def test_threshold_dichotomy(self):
        rng = np.random.default_rng(99)
        checked = 0
        for family in ("gaussian", "laplace", "uniform_ball"):
            for n_classes in (2, 3):
                for _ in range(35):
                    ds = random_instance(rng, family, n_classes)
                    result = solve_threshold(ds, family)
                    below = enumerate_census(ds, KernelSpec(family, 0.9 * result.theta_strict, ds.dim))
                    above = enumerate_census(ds, KernelSpec(family, 1.1 * result.theta_weak, ds.dim))
                    assert below.realizable_after == n_classes ** ds.n
                    assert above.realizable_after < n_classes ** ds.n
                    if n_classes == 2:
                        k_above = KernelSpec(family, 1.1 * result.theta_weak, ds.dim)
                        assert not worst_case_check(ds, k_above, result.binding_index)
                    checked += 1
        assert checked >= 200


class TestWorstCase:
    def test_below_strict_threshold(self, demo):
        k = KernelSpec("gaussian", 0.5 * solve_threshold(demo, "gaussian").theta_strict, 2)
        assert all(worst_case_check(demo, k, i) for i in range(demo.n))

    def test_isolated_point(self, demo):
        assert worst_case_check(demo, KernelSpec("uniform_ball", 0.3, 2), 8)

    def test_binary_only(self):
        ds = LabeledDataset(np.array([[0.0], [1.0], [2.0]]), np.array([0, 1, 2]), ("a", "b", "c"))
        with pytest.raises(DatasetError):
            worst_case_check(ds, KernelSpec("gaussian", 1.0, 1), 0)


class TestPacBound:
    def test_example(self):
        assert pac_sample_bound(8, 0.1, 0.01) == 67

    def test_minimal(self):
        assert pac_sample_bound(1, 0.5, math.exp(-0.4)) == 1

    @pytest.mark.parametrize("eta,delta", [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.5)])
    def test_out_of_range(self, eta, delta):
        with pytest.raises(ConfigError):
            pac_sample_bound(8, eta, delta)


class TestRademacher:
    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_full_class(self, n):
        assert empirical_rademacher(full_sign_class(n)) == 2.0

    def test_full_class_without_shortcut(self):
        # the enumerated value for the full class must agree with the shortcut
        hypotheses = full_sign_class(4)
        total = 0
        for signs in 2 * labelings_for_indices(np.arange(16), 4, 2) - 1:
            total += np.max(hypotheses @ signs)
        assert 2.0 * total / (4 * 16) == 2.0

    def test_singleton(self):
        assert empirical_rademacher(np.array([[1, -1, 1, 1]])) == 0.0

    def test_monotone_under_inclusion(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            full = full_sign_class(n)
            big = full[rng.random(full.shape[0]) < 0.6]
            if big.shape[0] == 0:
                big = full[:1]
            small = big[rng.random(big.shape[0]) < 0.5]
            if small.shape[0] == 0:
                small = big[:1]
            assert empirical_rademacher(small) <= empirical_rademacher(big) + 1e-12

    def test_monte_carlo_close_to_exact(self):
        rng = np.random.default_rng(1)
        cls = full_sign_class(6)[rng.random(64) < 0.3]
        exact = empirical_rademacher(cls)
        approx = empirical_rademacher(cls, mode="monte_carlo", m=20000, seed=3)
        assert approx == pytest.approx(exact, abs=0.05)

    def test_empty_class(self):
        with pytest.raises(DatasetError):
            empirical_rademacher(np.zeros((0, 3)))

    def test_class_from_census(self, line3):
        report = enumerate_census(line3, KernelSpec("gaussian", 0.5, 1), keep_fixed=True)
        cls = class_from_census(line3, report)
        assert cls.shape == (8, 3)
        assert empirical_rademacher(cls) == 2.0
