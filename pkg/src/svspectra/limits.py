"""Limit laws of the normalized eigenvalues and the statistics used to check them."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .normalization import centering, sigma_alpha_moment
from .sampling import (
    MixingVolatility,
    NoiseSpec,
    VolatilitySpec,
    derive_subseed,
    make_rng,
    sample_noise,
    sample_volatility,
)

__all__ = [
    "LimitLaw",
    "RatioEstimate",
    "frechet_cdf",
    "mean_measure",
    "sample_limit_points",
    "ks_distance",
    "kolmogorov_quantile",
    "hill_estimator",
    "ld_threshold",
    "large_deviation_ratio",
]

LIMIT_KINDS = ("frechet-top", "poisson-pp", "gamma-points", "stable-trace")


def frechet_cdf(alpha: float, x):
    """``exp(-x ** (-alpha / 2))`` for ``x > 0``, else 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(x > 0, np.exp(-np.power(np.where(x > 0, x, 1.0), -alpha / 2.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def mean_measure(alpha: float, moment: float, x):
    """Mass ``moment * x ** (-alpha / 2)`` that the limiting Poisson process puts on ``(x, inf)``.

    The negative half-line carries no mass.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("mean_measure is defined for x > 0")
    out = moment * np.power(x, -alpha / 2.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LimitLaw:
    alpha: float
    sigma_alpha_moment: float = 1.0
    kind: str = "poisson-pp"

    def __post_init__(self):
        if not (0 < self.alpha < 4) or self.alpha == 2:
            raise ValueError(f"alpha must lie in (0, 2) or (2, 4), got {self.alpha}")
        if not self.sigma_alpha_moment > 0:
            raise ValueError("moment must be positive")
        if self.kind not in LIMIT_KINDS:
            raise ValueError(f"unknown limit kind {self.kind!r}")

    def cdf(self, x):
        """Law of the top point after scaling by ``moment ** (2 / alpha)``."""
        return frechet_cdf(self.alpha, x)

    def mean_measure(self, x):
        return mean_measure(self.alpha, self.sigma_alpha_moment, x)

    def sample(self, k: int, seed: int, size: Optional[int] = None) -> np.ndarray:
        return sample_limit_points(self.alpha, self.sigma_alpha_moment, k, seed, size=size)


def sample_limit_points(alpha: float, moment: float, k: int, seed: int, size: Optional[int] = None) -> np.ndarray:
    """First ``k`` points ``(Gamma_i / moment) ** (-2 / alpha)`` of the limiting process.

    ``Gamma_i`` are partial sums of iid unit exponentials.  With ``size`` the
    result has shape ``(size, k)``, one independent realization per row.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    rng = make_rng(seed)
    shape = (k,) if size is None else (size, k)
    gamma = np.cumsum(rng.standard_exponential(shape), axis=-1)
    return np.power(gamma / moment, -2.0 / alpha)


def ks_distance(samples, cdf: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``.

    ``D = max_i max(i / N - F(x_(i)), F(x_(i)) - (i - 1) / N)`` over sorted samples.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    if N == 0:
        raise ValueError("ks_distance needs at least one sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


def kolmogorov_quantile(N: int, level: float = 0.99) -> float:
    """Upper ``level`` quantile of the KS statistic for ``N`` exact draws."""
    from scipy.stats import kstwo

    return float(kstwo.ppf(level, N))


def hill_estimator(samples, k_upper: Optional[int] = None) -> float:
    """Hill estimate of the tail index from the ``k_upper`` largest samples.

    ``k_upper`` defaults to ``floor(N ** (2/3))``.
    """
    x = np.asarray(samples, dtype=float)
    N = x.size
    if k_upper is None:
        # largest k with k**3 <= N**2, exact where the float power rounds down
        k_upper = int(math.floor(N ** (2.0 / 3.0)))
        while (k_upper + 1) ** 3 <= N * N:
            k_upper += 1
        while k_upper**3 > N * N:
            k_upper -= 1
    if k_upper < 10:
        raise ValueError(f"Hill estimator needs at least 10 upper order statistics, got {k_upper}")
    if k_upper >= N:
        raise ValueError(f"k_upper={k_upper} must be smaller than the sample size {N}")
    if np.any(x <= 0):
        raise ValueError("Hill estimator requires positive samples")
    top = np.sort(x)[::-1][: k_upper + 1]
    logs = np.log(top)
    return float(1.0 / np.mean(logs[:k_upper] - logs[k_upper]))


def ld_threshold(n: int, alpha: float, epsilon: float = 0.1) -> float:
    """``gamma_n = n ** (2 / alpha + epsilon)``, the start of the large-deviation regime."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return float(n) ** (2.0 / alpha + epsilon)


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    stderr: float
    exceedances: int
    reps: int
    underpowered: bool


def large_deviation_ratio(noise: NoiseSpec, vol: VolatilitySpec, n: int, y: float, reps: int, seed: int,
                          chunk: int = 20_000, moment_samples: int = 1_000_000) -> RatioEstimate:
    """Monte Carlo ``P(S_1 > y + c_n) / (n E[sigma**alpha] P(Z**2 > y))``.

    ``S_1`` is the sum of ``n`` squared entries of one row.  Replications are
    processed in fixed-size chunks, each with its own derived seed, so the
    estimate does not depend on how the work is scheduled.
    """
    if y < float(n) ** (2.0 / noise.alpha) * (1 - 1e-12):
        raise ValueError(f"y={y:.4g} lies below n**(2/alpha); not a large-deviation level")
    if reps < 1:
        raise ValueError("reps must be positive")
    alpha = noise.alpha
    if isinstance(vol, MixingVolatility):
        # a single row of the field; cross-row coupling does not change its law
        vol = dataclasses.replace(vol, rho_row=0.0)
        moment_seed = derive_subseed(seed, 2**32)
        m_alpha = sigma_alpha_moment(vol, alpha, mc_samples=moment_samples, seed=moment_seed).value
        m_two = sigma_alpha_moment(vol, 2.0, mc_samples=moment_samples, seed=moment_seed).value
    else:
        m_alpha = sigma_alpha_moment(vol, alpha, n_model=n).value
        m_two = None
    c_n = centering(noise, vol, n, n_model=n, second_moment=m_two) if alpha > 2 else 0.0
    level = y + c_n
    hits = 0
    for c, start in enumerate(range(0, reps, chunk)):
        m = min(chunk, reps - start)
        s = derive_subseed(seed, c)
        z = sample_noise(noise, m, n, derive_subseed(s, 0))
        sigma = sample_volatility(vol, m, n, n_model=n, seed=derive_subseed(s, 1))
        row_sums = np.einsum("ij,ij->i", sigma * z, sigma * z)
        hits += int(np.count_nonzero(row_sums > level))
    denom = n * m_alpha * noise.tail(math.sqrt(y))
    q = hits / reps
    return RatioEstimate(q / denom, math.sqrt(q * (1.0 - q) / reps) / denom, hits, reps, hits == 0)
