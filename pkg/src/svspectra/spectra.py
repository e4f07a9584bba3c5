"""Sample covariance spectra and their diagonal approximations.

Eigenvalues are always returned in descending order.  Eigenvectors follow
the convention that their first coordinate exceeding ``1e-12`` in absolute
value is positive.  Row indices (order-statistic locations) are 0-based;
eigenvalue ranks ``j`` are 1-based, so ``j = 1`` is the largest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import DataMatrix, DependenceMatrix, matrix_sqrt
from .sampling import make_rng

__all__ = [
    "EigenPairs",
    "EigenvectorError",
    "SpectralSummary",
    "sample_covariance",
    "row_sums_squares",
    "eigenvalues_sym",
    "orient",
    "top_eigenpairs",
    "spectral_norm",
    "offdiag_norm",
    "offdiag_ratio",
    "fmatrix",
    "fmatrix_spectrum",
    "diag_approx_spectrum",
    "order_locations",
    "locate_weighted_order_stats",
    "eigenvector_error",
    "eigenvector_errors",
    "weyl_gap",
    "summarize",
]

ORIENTATION_TOL = 1e-12
DEGENERACY_RTOL = 1e-9
SYMMETRY_RTOL = 1e-10
_START_SEED = 0x5EED_CAFE


def _data(X) -> np.ndarray:
    return X.entries if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def _check_symmetric(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {C.shape}")
    scale = max(1.0, float(np.max(np.abs(C)))) if C.size else 1.0
    if C.size and np.max(np.abs(C - C.T)) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric")
    return C


def sample_covariance(X) -> np.ndarray:
    """``S = X X'``, exactly symmetric."""
    X = _data(X)
    S = X @ X.T
    upper = np.triu(S)
    return upper + np.triu(upper, 1).T


def row_sums_squares(X) -> np.ndarray:
    """Diagonal of ``X X'`` without forming the product."""
    X = _data(X)
    return np.einsum("ij,ij->i", X, X)


def eigenvalues_sym(C) -> np.ndarray:
    C = _check_symmetric(C)
    return np.linalg.eigvalsh(C)[::-1]


def orient(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first coordinate above ``1e-12`` in magnitude is positive."""
    v = np.asarray(v, dtype=float)
    idx = np.flatnonzero(np.abs(v) > ORIENTATION_TOL)
    if idx.size and v[idx[0]] < 0:
        return -v
    return v


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray  # columns, oriented
    degenerate: np.ndarray  # per pair: eigenvalue not simple within tolerance
    method: str = "dense"


def _start_vector(p: int) -> np.ndarray:
    v = make_rng(_START_SEED).standard_normal(p)
    return v / np.linalg.norm(v)


def _power_top(C: np.ndarray, count: int, tol: float, max_iter: int):
    """Top ``count`` eigenpairs by shifted power iteration with projection deflation.

    Returns ``None`` when any pair stagnates.
    """
    p = C.shape[0]
    radius = np.sum(np.abs(C), axis=1) - np.abs(np.diag(C))
    shift = max(0.0, -float(np.min(np.diag(C) - radius)))
    scale = max(float(np.max(np.diag(C) + radius)) + shift, 1e-300)
    found_vals, found_vecs = [], []
    base = _start_vector(p)
    for _ in range(count):
        Q = np.array(found_vecs).T if found_vecs else np.zeros((p, 0))
        v = base - Q @ (Q.T @ base)
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            return None
        v /= nv
        for _ in range(max_iter):
            w = C @ v
            lam = float(v @ w)
            if np.linalg.norm(w - lam * v) <= tol * scale:
                break
            w = w + shift * v
            w -= Q @ (Q.T @ w)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            v = w / nw
        else:
            return None
        found_vals.append(lam)
        found_vecs.append(v)
    return np.array(found_vals), np.array(found_vecs).T


def _flag_degenerate(values: np.ndarray, scale: float) -> np.ndarray:
    tol = DEGENERACY_RTOL * max(scale, 1e-300)
    gaps = np.abs(np.diff(values)) <= tol
    flags = np.zeros(len(values), dtype=bool)
    flags[:-1] |= gaps
    flags[1:] |= gaps
    return flags


def top_eigenpairs(C, k: int, method: str = "auto", tol: float = 1e-12, max_iter: int = 5000) -> EigenPairs:
    """The ``k`` largest eigenvalues with oriented unit eigenvectors.

    ``method`` is ``"dense"`` (full symmetric eigendecomposition), ``"power"``
    (shifted power iteration with deflation) or ``"auto"`` (power for
    ``k <= 10``).  The power path falls back to the dense solver when it
    stagnates.  A pair whose eigenvalue is within ``1e-9`` (relative) of a
    neighbour is flagged degenerate; its vector is still returned.
    """
    C = _check_symmetric(C)
    p = C.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, {p}], got {k}")
    count = min(k + 1, p)
    result = None
    used = "dense"
    if method in ("auto", "power") and (method == "power" or k <= 10):
        result = _power_top(C, count, tol, max_iter)
        if result is not None:
            used = "power"
            vals, vecs = result
            order = np.argsort(-vals, kind="stable")
            result = vals[order], vecs[:, order]
    elif method not in ("auto", "dense"):
        raise ValueError(f"unknown method {method!r}")
    if result is None:
        w, V = np.linalg.eigh(C)
        result = w[::-1][:count], V[:, ::-1][:, :count]
    vals, vecs = result
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    flags = _flag_degenerate(vals, scale)[:k]
    vecs = np.column_stack([orient(vecs[:, i]) for i in range(k)])
    return EigenPairs(vals[:k].copy(), vecs, flags, used)


def spectral_norm(C, tol: float = 1e-9, max_iter: int = 2000) -> float:
    """``max |lambda_i(C)|`` by power iteration on ``C**2``, falling back to the full spectrum."""
    C = _check_symmetric(C)
    if not np.any(C):
        return 0.0
    v = _start_vector(C.shape[0])
    for _ in range(max_iter):
        w = C @ v
        rho = float(w @ w)
        if rho == 0.0:
            break
        u = C @ w
        if np.linalg.norm(u - rho * v) <= tol * rho:
            return math.sqrt(rho)
        v = u / np.linalg.norm(u)
    return float(np.max(np.abs(np.linalg.eigvalsh(C))))


def offdiag_norm(S) -> float:
    """``||S - diag(S)||_2``."""
    S = np.asarray(S, dtype=float)
    return spectral_norm(S - np.diag(np.diag(S)))


def offdiag_ratio(X, norm_sq: float, S: Optional[np.ndarray] = None) -> float:
    """``||S - diag(S)||_2 / norm_sq``; pass ``S`` to skip recomputing ``X X'``."""
    if S is None:
        S = sample_covariance(X)
    return offdiag_norm(S) / norm_sq


def _sqrt_of(A) -> np.ndarray:
    if isinstance(A, DependenceMatrix):
        return A.sqrt_entries
    return matrix_sqrt(A)


def _diag_of(A) -> np.ndarray:
    return A.diagonal if isinstance(A, DependenceMatrix) else np.diag(np.asarray(A, dtype=float))


def fmatrix(A, S, c_n: float = 0.0) -> np.ndarray:
    """Symmetrized ``A^{1/2} (S - c_n I) A^{1/2}``."""
    R = _sqrt_of(A)
    S = np.asarray(S, dtype=float)
    if R.shape != S.shape:
        raise ValueError(f"dependence {R.shape} and covariance {S.shape} do not conform")
    centered = S - c_n * np.eye(S.shape[0]) if c_n else S
    M = R @ centered @ R
    return 0.5 * (M + M.T)


def fmatrix_spectrum(A, S, c_n: float = 0.0) -> np.ndarray:
    return eigenvalues_sym(fmatrix(A, S, c_n))


def diag_approx_spectrum(S_diag, A_diag, c_n: float = 0.0) -> np.ndarray:
    """Descending values of ``(S_i - c_n) * A_ii``."""
    S_diag = np.asarray(S_diag, dtype=float)
    A_diag = np.asarray(A_diag, dtype=float)
    if S_diag.shape != A_diag.shape:
        raise ValueError("diagonals must have equal length")
    return np.sort((S_diag - c_n) * A_diag)[::-1]


def _descending_order(values: np.ndarray) -> np.ndarray:
    # stable sort of the negated values puts ties at the smaller index first
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def order_locations(S_diag) -> np.ndarray:
    """Row indices ``L_1, ..., L_p`` of the descending order statistics of ``S_i``."""
    return _descending_order(S_diag)


def locate_weighted_order_stats(S_diag, A_diag, c_n: float = 0.0) -> np.ndarray:
    """Row indices of the descending values of ``(S_j - c_n) * A_jj``; ties go to the smaller index."""
    S_diag = np.asarray(S_diag, dtype=float)
    A_diag = np.asarray(A_diag, dtype=float)
    if S_diag.shape != A_diag.shape:
        raise ValueError("diagonals must have equal length")
    return _descending_order((S_diag - c_n) * A_diag)


@dataclass(frozen=True)
class EigenvectorError:
    value: float
    degenerate: bool
    location: int


def eigenvector_errors(A, S, c_n: float, ranks: Sequence[int], convention: str = "aligned",
                       method: str = "auto") -> list:
    """Distances between top eigenvectors of the F-matrix and their localized targets.

    The target for rank ``j`` is ``A^{1/2} e_L`` normalized to unit length,
    with ``L`` the location of the ``j``-th largest ``(S_i - c_n) A_ii``.

    ``convention="first-nonzero"`` orients both vectors by their first
    coordinate above ``1e-12``.  That rule is unstable when leading
    coordinates are rounding noise, so the default ``"aligned"`` reports the
    sign-invariant distance ``min(||v - t||, ||v + t||)``.
    """
    S = np.asarray(S, dtype=float)
    ranks = list(ranks)
    if not ranks:
        return []
    p = S.shape[0]
    if min(ranks) < 1 or max(ranks) > p:
        raise ValueError(f"ranks must lie in [1, {p}]")
    R = _sqrt_of(A)
    pairs = top_eigenpairs(fmatrix(A, S, c_n), max(ranks), method=method)
    locs = locate_weighted_order_stats(np.diag(S), _diag_of(A), c_n)
    out = []
    for j in ranks:
        v = pairs.vectors[:, j - 1]
        loc = int(locs[j - 1])
        t = R[:, loc] / np.linalg.norm(R[:, loc])
        if convention == "aligned":
            # norms of differences, not sqrt(2 - 2|<v,t>|), which cancels for small errors
            dist = float(min(np.linalg.norm(v - t), np.linalg.norm(v + t)))
        elif convention == "first-nonzero":
            dist = float(np.linalg.norm(v - orient(t)))
        else:
            raise ValueError(f"unknown convention {convention!r}")
        out.append(EigenvectorError(dist, bool(pairs.degenerate[j - 1]), loc))
    return out


def eigenvector_error(A, S, c_n: float, j: int, convention: str = "aligned") -> EigenvectorError:
    return eigenvector_errors(A, S, c_n, [j], convention=convention)[0]


def weyl_gap(C1, C2) -> float:
    """``max_i |lambda_i(C1) - lambda_i(C2)|`` over matched descending spectra."""
    l1 = eigenvalues_sym(C1)
    l2 = eigenvalues_sym(C2)
    if l1.shape != l2.shape:
        raise ValueError("matrices must have equal dimension")
    return float(np.max(np.abs(l1 - l2))) if l1.size else 0.0


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    diag_entries: np.ndarray
    order_locations: np.ndarray
    weighted_locations: Optional[np.ndarray] = None


def summarize(S, k: int = 0, A_diag=None, c_n: float = 0.0) -> SpectralSummary:
    """Spectrum of ``S`` plus the locations of its diagonal order statistics.

    ``k > 0`` also stores the top ``k`` oriented eigenvectors.
    """
    S = _check_symmetric(S)
    diag = np.diag(S).copy()
    vectors = top_eigenpairs(S, k).vectors if k else None
    weighted = None if A_diag is None else locate_weighted_order_stats(diag, A_diag, c_n)
    return SpectralSummary(eigenvalues_sym(S), vectors, diag, order_locations(diag), weighted)
