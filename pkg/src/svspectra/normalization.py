"""Normalizing and centering sequences for the eigenvalues of ``S = X X'``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sampling import (
    DegenerateVolatility,
    MixingVolatility,
    NoiseSpec,
    ThinnedVolatility,
    VolatilitySpec,
    make_rng,
)

__all__ = [
    "MomentEstimate",
    "NormalizationConstants",
    "dimension_rule",
    "a_sequence",
    "sigma_alpha_moment",
    "b_sequence",
    "centering",
    "normalization_constants",
]


def dimension_rule(n: int, beta: float, ell_const: float = 1.0) -> int:
    """``p = max(1, round(ell_const * n ** beta))``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not ell_const > 0:
        raise ValueError(f"ell_const must be positive, got {ell_const}")
    return max(1, int(round(ell_const * n**beta)))


def _bisect_tail(spec: NoiseSpec, k: float, rtol: float = 1e-13) -> float:
    lo = spec.scale
    hi = spec.scale * 2.0
    while k * spec.tail(hi) > 1.0:
        lo, hi = hi, hi * 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if k * spec.tail(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def a_sequence(spec: NoiseSpec, k: float, method: str = "closed") -> float:
    """The ``a`` solving ``k * P(|Z| > a) = 1``.

    ``method="bisect"`` inverts the tail numerically instead of using
    ``scale * k ** (1 / alpha)``.
    """
    if k < 1:
        raise ValueError(f"a_sequence needs k >= 1, got {k}")
    if method == "closed":
        return spec.scale * float(k) ** (1.0 / spec.alpha)
    if method == "bisect":
        return _bisect_tail(spec, float(k))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float = 0.0

    def __float__(self) -> float:
        return self.value


def sigma_alpha_moment(spec: VolatilitySpec, alpha: float, n_model: int = 1,
                       mc_samples: int = 1_000_000, seed: int = 0) -> MomentEstimate:
    """``E[sigma ** alpha]``; exact for degenerate and thinned fields.

    For the mixing field the marginal of ``sigma`` is ``transform(N(0, 1))``,
    so the moment is a Monte Carlo mean over iid standard normal draws.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if isinstance(spec, DegenerateVolatility):
        return MomentEstimate(float(spec.value) ** alpha)
    if isinstance(spec, ThinnedVolatility):
        q = spec.probabilities(n_model)[1:]
        return MomentEstimate(float(np.dot(q, np.power(spec.levels, alpha))))
    if isinstance(spec, MixingVolatility):
        rng = make_rng(seed)
        vals = np.power(spec.apply_transform(rng.standard_normal(mc_samples)), alpha)
        return MomentEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples)))
    raise TypeError(f"unsupported volatility spec {type(spec).__name__}")


def _effective_index(n: int, p: int, moment: float) -> int:
    # guard against 9999.999... from floating-point products
    return int(math.floor(n * p * moment * (1.0 + 1e-12)))


def b_sequence(spec: NoiseSpec, vol: ThinnedVolatility, n: int, p: int) -> float:
    """``b_n = a_k`` with ``k = floor(n p E[(sigma^(n)) ** alpha])``."""
    if not isinstance(vol, ThinnedVolatility):
        raise TypeError("b_sequence is defined for thinned volatility only")
    moment = sigma_alpha_moment(vol, spec.alpha, n_model=n).value
    k = _effective_index(n, p, moment)
    if k < 1:
        raise ValueError(f"effective index n*p*E[sigma^alpha] = {n * p * moment:.3g} < 1: thinning too aggressive at n={n}")
    return a_sequence(spec, k)


def centering(spec: NoiseSpec, vol: VolatilitySpec, n: int, n_model: Optional[int] = None,
              second_moment: Optional[float] = None) -> float:
    """``c_n``: 0 for ``alpha < 2``, else ``n E[sigma**2] E[Z**2]``.

    ``second_moment`` overrides ``E[sigma**2]`` (e.g. a precomputed Monte
    Carlo value for the mixing field).
    """
    if spec.alpha < 2.0:
        return 0.0
    if second_moment is None:
        if isinstance(vol, MixingVolatility):
            raise ValueError("E[sigma^2] of a mixing field must be supplied via second_moment")
        second_moment = sigma_alpha_moment(vol, 2.0, n_model=n if n_model is None else n_model).value
    return n * second_moment * spec.second_moment


@dataclass(frozen=True)
class NormalizationConstants:
    a_np_sq: float
    b_n_sq: Optional[float]
    c_n: float
    p: int
    n: int
    beta: float
    ell_const: float
    sigma_alpha_moment: float

    @property
    def norm_sq(self) -> float:
        """Eigenvalue scale: ``b_n**2`` for thinned models, ``a_np**2`` otherwise."""
        return self.b_n_sq if self.b_n_sq is not None else self.a_np_sq


def normalization_constants(spec: NoiseSpec, vol: VolatilitySpec, n: int, beta: float,
                            ell_const: float = 1.0, moments: Optional[tuple] = None) -> NormalizationConstants:
    """Bundle ``a_np**2``, ``b_n**2``, ``c_n`` and ``E[sigma**alpha]`` at sample size ``n``.

    ``moments`` may carry precomputed ``(E[sigma**alpha], E[sigma**2])`` and is
    required for the mixing field.
    """
    p = dimension_rule(n, beta, ell_const)
    a_np = a_sequence(spec, n * p)
    if moments is None:
        if isinstance(vol, MixingVolatility):
            raise ValueError("moments of a mixing field must be supplied")
        m_alpha = sigma_alpha_moment(vol, spec.alpha, n_model=n).value
        m_two = sigma_alpha_moment(vol, 2.0, n_model=n).value
    else:
        m_alpha, m_two = moments
    b_sq = b_sequence(spec, vol, n, p) ** 2 if isinstance(vol, ThinnedVolatility) else None
    c_n = centering(spec, vol, n, second_moment=m_two)
    return NormalizationConstants(a_np**2, b_sq, c_n, p, n, beta, ell_const, m_alpha)
