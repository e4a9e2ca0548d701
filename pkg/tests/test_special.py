import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from frasian import (
    NormalParams,
    RngSeed,
    ecdf_eval,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    normal_survivor,
    sample_beta,
    sample_normal,
    sample_uniform,
)

mpmath.mp.dps = 40


def _mp_cdf(x: float) -> float:
    return float(mpmath.erfc(-x / mpmath.sqrt(2)) / 2)


class TestNormalFunctions:
    def test_pdf_at_mode(self):
        assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, abs=1e-16)
        for mu, var in [(2.0, 1.0), (-1.5, 0.25), (0.0, 9.0)]:
            assert_allclose(
                normal_pdf(mu, mu, var), 1.0 / np.sqrt(2 * np.pi * var), rtol=1e-14
            )

    def test_pdf_symmetry(self):
        a = np.linspace(0.0, 6.0, 200)
        assert_allclose(normal_pdf(1.0 + a, 1.0, 2.0), normal_pdf(1.0 - a, 1.0, 2.0), rtol=1e-12)

    def test_cdf_against_high_precision_oracle(self):
        # 10^4-point grid on [-8, 8] against a 40-digit erfc evaluation.
        grid = np.linspace(-8.0, 8.0, 10_000)
        oracle = np.array([_mp_cdf(x) for x in grid])
        assert np.max(np.abs(normal_cdf(grid) - oracle)) <= 1e-12

    def test_cdf_known_value(self):
        # Phi(1.9599639845) from the same oracle: 0.97499999999765902741...
        assert normal_cdf(1.9599639845) == pytest.approx(0.975, abs=1e-10)
        assert normal_cdf(1.9599639845) == pytest.approx(0.9749999999976590, abs=1e-14)

    def test_cdf_strictly_increasing(self):
        # Strict increase holds wherever doubles can still resolve the
        # increments; past ~7.9 the CDF is within one ulp of 1 and any
        # double-precision implementation plateaus.
        grid = np.linspace(-8.0, 8.0, 10_000)
        assert np.all(np.diff(normal_cdf(grid)) >= 0)
        assert np.all(np.diff(normal_cdf(grid[grid <= 7.0])) > 0)

    def test_survivor_complement(self):
        xs = np.linspace(-10.0, 10.0, 1001)
        assert np.max(np.abs(normal_cdf(xs) + normal_survivor(xs) - 1.0)) <= 1e-15
        assert normal_survivor(0.0) == 0.5

    def test_survivor_deep_tail_precision(self):
        # 1 - cdf would be exactly 0 out here; the mirrored form keeps
        # relative accuracy.
        # Oracle: erfc(10/sqrt(2))/2 at 40 digits = 7.6198530241605260659...e-24
        assert normal_survivor(10.0) == pytest.approx(7.619853024160526e-24, rel=1e-13)

    def test_quantile_round_trip(self):
        ps = np.concatenate(
            [np.array([1e-6, 1e-4, 0.5]), np.linspace(0.001, 0.999, 997), [1 - 1e-6]]
        )
        assert np.max(np.abs(normal_cdf(normal_quantile(ps)) - ps)) <= 1e-8

    def test_quantile_known_values(self):
        assert normal_quantile(0.5) == 0.0
        assert normal_quantile(0.975) == pytest.approx(1.9599639845, abs=1e-8)
        ps = np.linspace(0.01, 0.49, 49)
        assert_allclose(normal_quantile(1 - ps), -normal_quantile(ps), atol=1e-13)

    def test_quantile_domain(self):
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError, match="strictly inside"):
                normal_quantile(bad)

    def test_mean_variance_shifting(self):
        assert normal_cdf(3.0, 1.0, 4.0) == pytest.approx(normal_cdf(1.0), rel=1e-15)
        assert normal_quantile(0.8, 1.0, 4.0) == pytest.approx(
            1.0 + 2.0 * normal_quantile(0.8), rel=1e-14
        )

    def test_invalid_inputs(self):
        with pytest.raises(ValueError, match="variance"):
            normal_pdf(0.0, 0.0, -1.0)
        with pytest.raises(ValueError, match="variance"):
            NormalParams(0.0, 0.0)
        with pytest.raises(ValueError, match="mean"):
            NormalParams(np.nan, 1.0)


class TestSampling:
    def test_determinism(self):
        seed = RngSeed(5, (0,))
        a = sample_normal(NormalParams(0, 1), 64, seed)
        b = sample_normal(NormalParams(0, 1), 64, seed)
        assert np.array_equal(a, b)

    def test_normal_moments(self):
        # CLT bound: mean of 10^6 draws from N(3, 4) within 5 SE = 0.01.
        draws = sample_normal(NormalParams(3.0, 4.0), 1_000_000, RngSeed(17))
        assert abs(draws.mean() - 3.0) < 0.01
        assert abs(draws.std() - 2.0) < 0.01

    def test_beta_1_1_is_uniform(self):
        draws = sample_beta(1.0, 1.0, RngSeed(23), size=5000)
        assert stats.kstest(draws, "uniform").pvalue > 0.01

    def test_beta_moments(self):
        a, b = 2.0, 6.0
        draws = sample_beta(a, b, RngSeed(29), size=200_000)
        assert draws.mean() == pytest.approx(a / (a + b), abs=0.002)

    def test_uniform_scalar_and_range(self):
        u = sample_uniform(RngSeed(31))
        assert isinstance(u, float) and 0.0 <= u < 1.0
        us = sample_uniform(RngSeed(31), size=1000)
        assert us.min() >= 0.0 and us.max() < 1.0

    def test_beta_validation(self):
        with pytest.raises(ValueError, match="a"):
            sample_beta(0.0, 1.0, RngSeed(0))


class TestEcdf:
    def test_single_atom(self):
        assert ecdf_eval([0.0], -1.0) == 0.0
        assert ecdf_eval([0.0], 0.0) == 1.0

    def test_direct_count(self):
        assert ecdf_eval([1, 2, 3, 4], 2.5) == 0.5
        assert ecdf_eval([1, 2, 3, 4], 4.0) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(101)
        for _ in range(20):
            n = rng.integers(1, 1000)
            sample = rng.normal(size=n)
            xs = rng.normal(size=50)
            brute = np.array([(sample <= x).mean() for x in xs])
            assert_allclose(ecdf_eval(sample, xs), brute, rtol=0)

    def test_monotone_and_right_continuous(self):
        sample = [0.5, -1.0, 0.5, 2.0]
        xs = np.linspace(-3, 3, 601)
        vals = ecdf_eval(sample, xs)
        assert np.all(np.diff(vals) >= 0)
        assert ecdf_eval(sample, 0.5) == 0.75  # jump attained at the atom

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError, match="at least 1"):
            ecdf_eval([], 0.0)
