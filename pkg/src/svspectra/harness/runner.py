"""Monte Carlo sweeps over an ``n``-grid, one record per ``(n, replication)``.

Every replication draws from its own seed ``derive_subseed(derive_subseed(master, n), r)``,
so records depend only on the config: not on execution order, worker count,
or how many replications are requested.  BLAS is pinned to one thread while
a sweep runs so that floating-point results cannot depend on its threading.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from ..limits import large_deviation_ratio, ld_threshold
from ..model import DependenceMatrix, assemble, band_k, nb_statistic
from ..normalization import NormalizationConstants, normalization_constants, sigma_alpha_moment
from ..sampling import MixingVolatility, ThinnedVolatility, derive_subseed, sample_noise, sample_volatility
from ..spectra import (
    diag_approx_spectrum,
    eigenvalues_sym,
    eigenvector_errors,
    fmatrix_spectrum,
    offdiag_norm,
    row_sums_squares,
    sample_covariance,
)
from .config import ExperimentConfig
from .records import DiagnosticsRecord

RUN_STREAM = 0  # n-grid values are >= 1, so stream 0 is free for run-level draws
NB_STREAM = 2**40
NB_SAMPLES = 10_000


@dataclass(frozen=True)
class GridPoint:
    n: int
    consts: NormalizationConstants
    dependence: Optional[DependenceMatrix]
    nb_estimate: Optional[float]


def _moments(config: ExperimentConfig) -> Optional[tuple]:
    if not isinstance(config.vol, MixingVolatility):
        return None
    seed = derive_subseed(config.master_seed, RUN_STREAM)
    alpha = config.noise.alpha
    m_alpha = sigma_alpha_moment(config.vol, alpha, mc_samples=config.moment_samples, seed=seed).value
    m_two = sigma_alpha_moment(config.vol, 2.0, mc_samples=config.moment_samples, seed=seed).value
    return m_alpha, m_two


def prepare_grid(config: ExperimentConfig) -> list:
    moments = _moments(config)
    points = []
    for n in config.n_grid:
        consts = normalization_constants(config.noise, config.vol, n, config.beta, config.ell_const, moments)
        A = nb = None
        if config.dependence is not None and config.experiment in ("fmatrix-eigen", "eigenvector-loc"):
            A = config.dependence.build(consts.p)
            k = min(band_k(consts.p, config.band_k_rule), consts.p)
            nb_seed = derive_subseed(derive_subseed(config.master_seed, n), NB_STREAM)
            nb = nb_statistic(A, k, num_samples=NB_SAMPLES, seed=nb_seed).value
        points.append(GridPoint(n, consts, A, nb))
    return points


def _data(config: ExperimentConfig, point: GridPoint, seed: int) -> np.ndarray:
    p, n = point.consts.p, point.n
    z = sample_noise(config.noise, p, n, derive_subseed(seed, 0))
    sigma = sample_volatility(config.vol, p, n, n_model=n, seed=derive_subseed(seed, 1))
    return assemble(sigma, z).entries


def _limit_moment(config: ExperimentConfig, consts: NormalizationConstants) -> float:
    # b_n already absorbs E[sigma^alpha] for thinned fields
    return 1.0 if isinstance(config.vol, ThinnedVolatility) else consts.sigma_alpha_moment


def run_replication(config: ExperimentConfig, point: GridPoint, r: int) -> DiagnosticsRecord:
    exp = config.experiment
    consts = point.consts
    n, p = point.n, consts.p
    seed = derive_subseed(derive_subseed(config.master_seed, n), r)
    rec = DiagnosticsRecord(exp, n, p, r)
    rec.set("alpha", config.noise.alpha)
    norm_sq, c_n = consts.norm_sq, consts.c_n

    if exp == "ld-ratio":
        y = ld_threshold(n, config.noise.alpha, config.ld_epsilon)
        est = large_deviation_ratio(config.noise, config.vol, n, y, config.ld_samples, seed,
                                    moment_samples=config.moment_samples)
        flag = "underpowered" if est.underpowered else ""
        rec.set("ld_ratio", est.ratio, flag)
        rec.set("ld_stderr", est.stderr, flag)
        return rec

    X = _data(config, point, seed)
    if exp == "trace-tail":
        rec.set("trace_normalized", (row_sums_squares(X).sum() - p * c_n) / norm_sq)
        return rec

    S = sample_covariance(X)
    if exp in ("diag-approx", "thinned-diag"):
        ratio = offdiag_norm(S) / norm_sq
        gap = np.max(np.abs(eigenvalues_sym(S) - np.sort(np.diag(S))[::-1])) / norm_sq
        rec.set("offdiag_ratio", ratio)
        rec.set("weyl_gap", gap)
    elif exp in ("point-process", "thinned-pp"):
        points = (eigenvalues_sym(S) - c_n) / norm_sq
        rec.set("moment", _limit_moment(config, consts))
        for x in config.thresholds:
            rec.set(f"count_exceed@{x:g}", np.count_nonzero(points > x))
            rec.set(f"count_below@{x:g}", np.count_nonzero(points < -x))
    elif exp == "frechet-top":
        lam1 = eigenvalues_sym(S)[0]
        # the top limit point is moment**(2/alpha) times a standard Frechet variable
        scale = _limit_moment(config, consts) ** (2.0 / config.noise.alpha)
        rec.set("lambda1_normalized", (lam1 - c_n) / (norm_sq * scale))
    elif exp == "fmatrix-eigen":
        A = point.dependence
        exact = fmatrix_spectrum(A, S, c_n)
        approx = diag_approx_spectrum(np.diag(S), A.diagonal, c_n)
        rec.set("fmatrix_gap", np.max(np.abs(exact - approx)) / norm_sq)
        rec.set("nb_estimate", point.nb_estimate)
    elif exp == "eigenvector-loc":
        errors = eigenvector_errors(point.dependence, S, c_n, range(1, config.top_k + 1))
        for j, err in enumerate(errors, start=1):
            if err.degenerate:
                rec.set(f"ev_error@{j}", None, "degenerate")
            else:
                rec.set(f"ev_error@{j}", err.value)
        rec.set("nb_estimate", point.nb_estimate)
    if exp in ("thinned-diag", "thinned-pp"):
        rec.set("bn_over_anp", consts.b_n_sq / consts.a_np_sq)
    return rec


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list:
    """All records of a sweep, ordered by ``(n, replication)``."""
    if threads < 1:
        raise ValueError("threads must be at least 1")
    with threadpool_limits(limits=1):
        grid = prepare_grid(config)
        tasks = [(point, r) for point in grid for r in range(config.replications)]
        if threads == 1:
            return [run_replication(config, point, r) for point, r in tasks]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda task: run_replication(config, *task), tasks))


def with_seed(config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    return config if seed is None else dataclasses.replace(config, master_seed=seed)

