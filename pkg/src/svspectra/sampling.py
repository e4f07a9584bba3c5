"""Heavy-tailed noise and volatility fields for the stochastic volatility model.

All samplers are pure functions of ``(spec, dims, seed)``.  Randomness comes
from numpy's ``PCG64`` bit generator (period 2**128) seeded with a 64-bit
integer; sub-streams are derived with :func:`derive_subseed`, which hashes
``(master, stream)`` through :class:`numpy.random.SeedSequence`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "NoiseSpec",
    "DegenerateVolatility",
    "MixingVolatility",
    "ThinnedVolatility",
    "VolatilitySpec",
    "make_rng",
    "derive_subseed",
    "noise_tail",
    "sample_noise",
    "sample_volatility",
]

_U64 = 2**64
NOISE_FAMILIES = ("symmetric-pareto", "skewed-pareto")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_subseed(master: int, stream: int) -> int:
    """Mix a master seed and a stream index into a new 64-bit seed.

    Deterministic in both arguments; distinct streams give distinct,
    statistically independent generators.
    """
    if not 0 <= master < _U64:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master}")
    if stream < 0:
        raise ValueError(f"stream index must be non-negative, got {stream}")
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(stream),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class NoiseSpec:
    """Law of the iid noise ``Z``: a random sign times a Pareto magnitude.

    ``P(|Z| > x) = (scale / x) ** alpha`` for ``x >= scale``.  The sign is
    ``+1`` with probability ``q_plus``.  When ``E|Z|`` is finite (``alpha > 1``)
    a skewed law is shifted by its closed-form mean so that ``E[Z] = 0``.
    """

    family: str = "symmetric-pareto"
    alpha: float = 1.0
    q_plus: float = 0.5
    q_minus: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        if not (0.0 < self.alpha < 4.0) or self.alpha == 2.0:
            raise ValueError(f"alpha must lie in (0, 2) or (2, 4), got {self.alpha}")
        if min(self.q_plus, self.q_minus) < 0.0 or abs(self.q_plus + self.q_minus - 1.0) > 1e-12:
            raise ValueError(f"q_plus + q_minus must equal 1, got {self.q_plus} + {self.q_minus}")
        if self.family == "symmetric-pareto" and self.q_plus != 0.5:
            raise ValueError("symmetric-pareto requires q_plus = q_minus = 1/2")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def shift(self) -> float:
        """Amount subtracted from every draw to enforce ``E[Z] = 0``."""
        if self.alpha <= 1.0 or self.q_plus == self.q_minus:
            return 0.0
        return (self.q_plus - self.q_minus) * self.scale * self.alpha / (self.alpha - 1.0)

    @property
    def second_moment(self) -> float:
        """``E[Z**2]`` of the (centered) noise; infinite for ``alpha < 2``."""
        if self.alpha < 2.0:
            return math.inf
        raw = self.scale**2 * self.alpha / (self.alpha - 2.0)
        return raw - self.shift**2

    def tail(self, x):
        return noise_tail(self, x)


def noise_tail(spec: NoiseSpec, x):
    """Exact ``P(|Z| > x)`` of the Pareto magnitude (before any centering shift)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("noise_tail requires x > 0")
    out = np.where(x <= spec.scale, 1.0, (spec.scale / np.maximum(x, spec.scale)) ** spec.alpha)
    return float(out) if out.ndim == 0 else out


def sample_noise(spec: NoiseSpec, p: int, n: int, seed: int) -> np.ndarray:
    """Draw a ``p x n`` matrix of iid noise variables."""
    if p < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got p={p}, n={n}")
    rng = make_rng(seed)
    # 1 - U lies in (0, 1], so magnitudes are finite and >= scale
    magnitude = spec.scale * np.power(1.0 - rng.random((p, n)), -1.0 / spec.alpha)
    negative = rng.random((p, n)) >= spec.q_plus
    z = np.where(negative, -magnitude, magnitude)
    if spec.shift:
        z -= spec.shift
    return z


def _logistic_transform(bound_M: float) -> Callable[[np.ndarray], np.ndarray]:
    root = math.sqrt(bound_M)

    def transform(x):
        return root * (0.1 + 0.9 * (0.5 * (1.0 + np.tanh(0.5 * np.asarray(x)))))

    return transform


def _constant_transform(value: float) -> Callable[[np.ndarray], np.ndarray]:
    def transform(x):
        return np.full(np.shape(x), value, dtype=float)

    return transform


@dataclass(frozen=True)
class DegenerateVolatility:
    """Every ``sigma_it`` equals ``value``."""

    value: float = 1.0
    variant = "degenerate"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"volatility value must be non-negative, got {self.value}")


@dataclass(frozen=True)
class MixingVolatility:
    """Bounded, stationary, geometrically mixing volatility field.

    Each row is a unit-variance Gaussian AR(1) series with coefficient
    ``rho_time``; rows share a common AR(1) factor with weight ``rho_row``.
    The latent Gaussian field is mapped through ``transform``, which must take
    values in ``(0, sqrt(bound_M)]``.  ``transform`` is ``"logistic"`` (the
    default ``sqrt(M) * (0.1 + 0.9 * logistic(x))``), ``"constant:<c>"``, or a
    callable.
    """

    bound_M: float = 4.0
    rho_time: float = 0.5
    rho_row: float = 0.0
    transform: Union[str, Callable] = "logistic"
    variant = "bounded-mixing"

    def __post_init__(self):
        if not self.bound_M > 0:
            raise ValueError(f"bound_M must be positive, got {self.bound_M}")
        if not -1.0 < self.rho_time < 1.0:
            raise ValueError(f"rho_time must lie in (-1, 1), got {self.rho_time}")
        if not 0.0 <= self.rho_row < 1.0:
            raise ValueError(f"rho_row must lie in [0, 1), got {self.rho_row}")
        self.transform_fn  # validates the transform name

    @property
    def transform_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        t = self.transform
        if callable(t):
            return t
        if t == "logistic":
            return _logistic_transform(self.bound_M)
        if isinstance(t, str) and t.startswith("constant:"):
            value = float(t.split(":", 1)[1])
            if not 0.0 < value <= math.sqrt(self.bound_M):
                raise ValueError(f"constant transform {value} outside (0, sqrt(M)]")
            return _constant_transform(value)
        raise ValueError(f"unknown volatility transform {t!r}")

    def apply_transform(self, g: np.ndarray) -> np.ndarray:
        sigma = np.asarray(self.transform_fn(g), dtype=float)
        if sigma.size and (sigma.min() <= 0.0 or sigma.max() > math.sqrt(self.bound_M)):
            raise ValueError("volatility transform left the range (0, sqrt(bound_M)]")
        return sigma


@dataclass(frozen=True)
class ThinnedVolatility:
    """Iid volatility on ``{0, s_1, ..., s_m}`` whose law depends on ``n``.

    ``P(sigma = s_j) = coefficients[j] * n ** (-exponent)`` for ``j >= 1`` and
    the remaining mass sits at 0.
    """

    levels: tuple = (1.0,)
    coefficients: tuple = (1.0,)
    exponent: float = 0.5
    variant = "thinned"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(float(s) for s in self.levels))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.levels:
            raise ValueError("thinned volatility needs at least one positive level")
        if len(self.levels) != len(self.coefficients):
            raise ValueError("levels and coefficients must have equal length")
        if self.levels[0] <= 0 or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError(f"levels must be positive and strictly increasing, got {self.levels}")
        if any(c <= 0 for c in self.coefficients):
            raise ValueError("coefficients must be positive")
        if not 0.0 <= self.exponent <= 1.0:
            raise ValueError(f"exponent must lie in [0, 1], got {self.exponent}")

    def probabilities(self, n: int) -> np.ndarray:
        """``(q_0, ..., q_m)`` for sample size ``n``."""
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        q = np.asarray(self.coefficients) * float(n) ** (-self.exponent)
        q0 = 1.0 - q.sum()
        if q0 < -1e-12:
            raise ValueError(f"thinning probabilities exceed 1 at n={n}")
        return np.concatenate([[max(q0, 0.0)], q])

    def support(self) -> np.ndarray:
        return np.concatenate([[0.0], self.levels])


VolatilitySpec = Union[DegenerateVolatility, MixingVolatility, ThinnedVolatility]


def _ar1_rows(rng: np.random.Generator, rows: int, n: int, rho: float) -> np.ndarray:
    """Stationary unit-variance Gaussian AR(1) paths, one per row."""
    eps = rng.standard_normal((rows, n))
    if rho == 0.0 or n == 1:
        return eps
    innovation = math.sqrt(1.0 - rho * rho)
    out = np.empty_like(eps)
    out[:, 0] = eps[:, 0]
    out[:, 1:], _ = lfilter([innovation], [1.0, -rho], eps[:, 1:], axis=1, zi=rho * eps[:, :1])
    return out


def sample_volatility(spec: VolatilitySpec, p: int, n: int, n_model: int = 1, seed: int = 0) -> np.ndarray:
    """Draw a ``p x n`` volatility matrix.

    ``n_model`` selects the law of a thinned field and is ignored otherwise.
    """
    if p < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got p={p}, n={n}")
    if isinstance(spec, DegenerateVolatility):
        return np.full((p, n), float(spec.value))
    rng = make_rng(seed)
    if isinstance(spec, MixingVolatility):
        common = _ar1_rows(rng, 1, n, spec.rho_time)
        own = _ar1_rows(rng, p, n, spec.rho_time)
        g = math.sqrt(spec.rho_row) * common + math.sqrt(1.0 - spec.rho_row) * own
        return spec.apply_transform(g)
    if isinstance(spec, ThinnedVolatility):
        cdf = np.cumsum(spec.probabilities(n_model))
        idx = np.searchsorted(cdf, rng.random((p, n)), side="right")
        np.minimum(idx, len(cdf) - 1, out=idx)
        return spec.support()[idx]
    raise TypeError(f"unsupported volatility spec {type(spec).__name__}")
