import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from svspectra.limits import (
    LimitLaw,
    frechet_cdf,
    hill_estimator,
    kolmogorov_quantile,
    ks_distance,
    large_deviation_ratio,
    ld_threshold,
    mean_measure,
    sample_limit_points,
)
from svspectra.sampling import DegenerateVolatility, MixingVolatility, NoiseSpec, ThinnedVolatility

positive = st.floats(1e-3, 1e3)


def test_frechet_cdf_values():
    assert frechet_cdf(2.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert frechet_cdf(1.0, 4.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert frechet_cdf(1.0, 1e-300) == 0.0
    assert frechet_cdf(1.0, -3.0) == 0.0
    assert frechet_cdf(3.0, 0.0) == 0.0


@given(st.sampled_from([0.5, 1.0, 3.0]), positive)
def test_frechet_matches_scipy(alpha, x):
    # Frechet(alpha/2) is scipy's invweibull with shape alpha/2
    assert frechet_cdf(alpha, x) == pytest.approx(stats.invweibull.cdf(x, alpha / 2), rel=1e-12, abs=1e-300)


def test_mean_measure_values():
    assert mean_measure(2.0, 1.0, 1.0) == 1.0
    assert mean_measure(2.0, 1.0, 4.0) == pytest.approx(0.25)
    assert mean_measure(1.0, 2.0, 4.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mean_measure(1.0, 1.0, 0.0)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 8.0])
@pytest.mark.parametrize("alpha", [1.0, 3.0])
def test_frechet_is_void_probability(alpha, x):
    assert frechet_cdf(alpha, x) == pytest.approx(math.exp(-mean_measure(alpha, 1.0, x)), rel=1e-15)


def test_limit_law_validation():
    with pytest.raises(ValueError):
        LimitLaw(alpha=2.0)
    with pytest.raises(ValueError):
        LimitLaw(alpha=1.0, sigma_alpha_moment=0.0)
    with pytest.raises(ValueError):
        LimitLaw(alpha=1.0, kind="gumbel")
    law = LimitLaw(alpha=1.0, sigma_alpha_moment=2.0)
    assert law.mean_measure(4.0) == pytest.approx(1.0)


@given(st.integers(1, 50), st.integers(0, 2**32))
def test_limit_points_decreasing(k, seed):
    pts = sample_limit_points(1.0, 1.0, k, seed)
    assert pts.shape == (k,)
    assert np.all(pts > 0)
    assert np.all(np.diff(pts) < 0)


def test_first_limit_point_is_frechet():
    pts = sample_limit_points(2.0, 1.0, 1, seed=7, size=100_000)[:, 0]
    assert ks_distance(pts, lambda x: frechet_cdf(2.0, x)) <= 0.01


def test_limit_points_moment_scaling():
    a = sample_limit_points(1.0, 1.0, 5, seed=3)
    b = sample_limit_points(1.0, 2.0, 5, seed=3)
    assert np.allclose(b, a * 2.0**2, rtol=1e-14)


def test_limit_points_mean_counts():
    pts = sample_limit_points(1.0, 1.5, 400, seed=2, size=4000)
    for x in (0.5, 1.0, 4.0):
        counts = (pts > x).sum(axis=1)
        mu = mean_measure(1.0, 1.5, x)
        assert abs(counts.mean() - mu) <= 4 * math.sqrt(mu / counts.size)


# ---- KS distance

def test_ks_examples():
    assert ks_distance([0.0], stats.norm.cdf) == pytest.approx(0.5)
    assert ks_distance([-5.0, -4.0], lambda x: np.where(np.asarray(x) < 0, 0.0, 1.0)) == 1.0
    with pytest.raises(ValueError):
        ks_distance([], stats.norm.cdf)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200))
def test_ks_agrees_with_scipy(x):
    d = ks_distance(x, stats.norm.cdf)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)


def test_ks_exact_draws_usually_small():
    rng = np.random.default_rng(8)
    N = 10_000
    bound = 1.36 / math.sqrt(N) * 1.5
    hits = sum(ks_distance(rng.standard_normal(N), stats.norm.cdf) < bound for _ in range(100))
    assert hits >= 99
    assert kolmogorov_quantile(N, 0.99) < bound


# ---- Hill

def pareto(alpha, N, seed):
    return (1.0 - np.random.default_rng(seed).random(N)) ** (-1.0 / alpha)


@pytest.mark.parametrize("alpha, lo, hi", [(1.0, 0.9, 1.1), (0.5, 0.45, 0.55)])
def test_hill_on_exact_pareto(alpha, lo, hi):
    assert lo <= hill_estimator(pareto(alpha, 100_000, 1), k_upper=1000) <= hi


@given(st.floats(1e-3, 1e3), st.integers(0, 2**32))
def test_hill_scale_invariant(c, seed):
    x = pareto(1.0, 2000, seed)
    assert hill_estimator(c * x) == pytest.approx(hill_estimator(x), rel=1e-9)


def test_hill_errors():
    with pytest.raises(ValueError):
        hill_estimator(pareto(1.0, 100, 0), k_upper=5)
    with pytest.raises(ValueError):
        hill_estimator(pareto(1.0, 100, 0), k_upper=100)
    with pytest.raises(ValueError):
        hill_estimator(np.r_[pareto(1.0, 100, 0), -1.0], k_upper=20)


def test_hill_default_k():
    x = pareto(1.0, 1000, 4)
    assert hill_estimator(x) == hill_estimator(x, k_upper=100)


# ---- large deviations

def test_ld_threshold():
    assert ld_threshold(100, 1.0) == pytest.approx(100**2.1)
    with pytest.raises(ValueError):
        ld_threshold(100, 1.0, epsilon=0.0)


def test_ld_ratio_example():
    n = 100
    est = large_deviation_ratio(NoiseSpec(alpha=1.0), DegenerateVolatility(1.0), n, 10 * n**2, 1_000_000, seed=5)
    assert 0.8 <= est.ratio <= 1.2
    assert not est.underpowered


def test_ld_ratio_single_entry():
    # n = 1: numerator and denominator are the same probability
    est = large_deviation_ratio(NoiseSpec(alpha=1.0), DegenerateVolatility(1.0), 1, 16.0, 200_000, seed=6)
    assert abs(est.ratio - 1.0) <= 4 * est.stderr


def test_ld_ratio_scaled_volatility():
    n = 100
    est = large_deviation_ratio(NoiseSpec(alpha=1.0), DegenerateVolatility(2.0), n, 10 * n**2, 400_000, seed=7)
    assert 0.8 <= est.ratio <= 1.2


def test_ld_ratio_other_volatilities_run():
    n = 50
    for vol in (MixingVolatility(), ThinnedVolatility(levels=(1.0,), coefficients=(1.0,), exponent=0.5)):
        est = large_deviation_ratio(NoiseSpec(alpha=1.0), vol, n, ld_threshold(n, 1.0), 20_000, seed=8,
                                    moment_samples=20_000)
        assert est.ratio > 0 and est.reps == 20_000


def test_ld_ratio_reproducible_and_chunk_invariant():
    args = (NoiseSpec(alpha=1.0), DegenerateVolatility(1.0), 20, 20**2.1, 5000, 9)
    assert large_deviation_ratio(*args) == large_deviation_ratio(*args)
    assert large_deviation_ratio(*args, chunk=1000).reps == 5000


def test_ld_ratio_underpowered_flag():
    est = large_deviation_ratio(NoiseSpec(alpha=1.0), DegenerateVolatility(1.0), 10, 1e12, 10, seed=1)
    assert est.underpowered and est.exceedances == 0


def test_ld_ratio_rejects_moderate_level():
    with pytest.raises(ValueError):
        large_deviation_ratio(NoiseSpec(alpha=1.0), DegenerateVolatility(1.0), 100, 100.0, 10, seed=1)
