import math

import numpy as np
import pytest

from src.noise.kernels import (
    KernelFamily,
    KernelSpec,
    QuadratureGrid,
    density,
    density_many,
    peak_ratio,
    sample,
    validate,
)
from src.utils.errors import KernelError, QuadratureError


class TestKernelSpec:
    def test_family_from_string(self):
        k = KernelSpec("laplace", 0.5, 3)
        assert k.family is KernelFamily.LAPLACE

    @pytest.mark.parametrize("scale", [0.0, -1.0, float("inf"), float("nan")])
    def test_rejects_bad_scale(self, scale):
        with pytest.raises(KernelError):
            KernelSpec("gaussian", scale, 2)

    def test_rejects_unknown_family(self):
        with pytest.raises(KernelError):
            KernelSpec("cauchy", 1.0, 2)

    def test_uniform_ball_needs_two_dims(self):
        with pytest.raises(KernelError):
            KernelSpec("uniform_ball", 1.0, 3)

    def test_json_round_trip(self):
        k = KernelSpec("gaussian", 0.25, 2)
        assert KernelSpec.from_json(k.to_json()) == k

    def test_from_json_rejects_garbage(self):
        with pytest.raises(KernelError):
            KernelSpec.from_json("[1, 2]")

    def test_tau(self):
        assert KernelSpec("gaussian", math.sqrt(2.0), 1).tau == pytest.approx(1.0)


class TestDensity:
    def test_uniform_peak(self):
        assert density(KernelSpec("uniform_ball", 1.0, 2), [0.0, 0.0]) == pytest.approx(1.0 / math.pi)

    def test_gaussian_peak_is_standard_normal(self):
        k = KernelSpec("gaussian", math.sqrt(2.0), 1)
        assert density(k, [0.0]) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(KernelError):
            density(KernelSpec("gaussian", 1.0, 2), [0.0, 0.0, 0.0])

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_symmetric(self, family):
        k = KernelSpec(family, 0.7, 2)
        z = np.random.default_rng(3).normal(size=(50, 2))
        np.testing.assert_array_equal(density_many(k, z), density_many(k, -z))


class TestPeakRatio:
    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_origin(self, family):
        assert peak_ratio(KernelSpec(family, 0.3, 2), [0.0, 0.0]) == 1.0

    def test_gaussian_unit_displacement(self):
        assert peak_ratio(KernelSpec("gaussian", 1.0, 1), [1.0]) == pytest.approx(math.exp(-1.0))

    def test_uniform_outside_support(self):
        assert peak_ratio(KernelSpec("uniform_ball", 1.0, 2), [1.5, 0.0]) == 0.0

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_non_decreasing_in_sigma(self, family):
        z = np.random.default_rng(9).normal(size=(20, 2))
        sigmas = np.geomspace(0.05, 20.0, 60)
        for v in z:
            ratios = [peak_ratio(KernelSpec(family, s, 2), v) for s in sigmas]
            assert all(a <= b for a, b in zip(ratios, ratios[1:]))

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    @pytest.mark.parametrize("c", [0.3, 7.0])
    def test_scale_covariance(self, family, c):
        z = np.random.default_rng(10).normal(size=(20, 2))
        k, big = KernelSpec(family, 0.9, 2), KernelSpec(family, 0.9 * c, 2)
        for v in z:
            assert peak_ratio(big, c * v) == pytest.approx(peak_ratio(k, v), rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("family", ["gaussian", "laplace", "uniform_ball"])
    def test_density_peaks_at_origin(self, family):
        k = KernelSpec(family, 0.6, 2)
        peak = density(k, [0.0, 0.0])
        z = np.random.default_rng(12).normal(scale=2.0, size=(200, 2))
        assert np.all(density_many(k, z) <= peak)


class TestSample:
    def test_deterministic(self):
        k = KernelSpec("laplace", 1.0, 2)
        a = sample(k, np.random.default_rng(7), 100)
        b = sample(k, np.random.default_rng(7), 100)
        np.testing.assert_array_equal(a, b)

    def test_gaussian_moments(self):
        k = KernelSpec("gaussian", 2.0, 1)
        draws = sample(k, np.random.default_rng(0), 200000)
        assert draws.mean() == pytest.approx(0.0, abs=0.02)
        assert draws.std() == pytest.approx(k.tau, rel=0.01)

    def test_laplace_variance(self):
        draws = sample(KernelSpec("laplace", 1.0, 1), np.random.default_rng(2), 100000)
        assert draws.var() == pytest.approx(2.0, rel=0.1)

    def test_uniform_stays_inside(self):
        k = KernelSpec("uniform_ball", 0.5, 2)
        draws = sample(k, np.random.default_rng(1), 10000)
        assert np.all(np.linalg.norm(draws, axis=1) < 0.5)

    def test_rejects_zero_count(self):
        with pytest.raises(KernelError):
            sample(KernelSpec("gaussian", 1.0, 1), np.random.default_rng(0), 0)


class TestValidate:
    def test_gaussian_2d(self):
        report = validate(KernelSpec("gaussian", 1.0, 2), QuadratureGrid(extent=8.0, cells=512))
        assert report.mass == pytest.approx(1.0, abs=1e-6)
        assert report.all_ok
        assert report.log_concave

    def test_laplace_1d(self):
        report = validate(KernelSpec("laplace", 1.0, 1))
        assert report.all_ok
        assert report.separable

    def test_uniform_ball(self):
        report = validate(KernelSpec("uniform_ball", 1.0, 2))
        assert report.unit_mass
        assert report.symmetry_residual == 0.0
        assert report.log_concave is None
        assert report.all_ok

    def test_short_extent_rejected(self):
        with pytest.raises(QuadratureError):
            validate(KernelSpec("gaussian", 1.0, 1), QuadratureGrid(extent=4.0))
