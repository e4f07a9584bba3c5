"""Data matrices ``X = sigma * Z``, dependence matrices ``A`` and band diagnostics.

Row and column indices are 0-based throughout.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .sampling import make_rng

__all__ = [
    "DataMatrix",
    "DependenceMatrix",
    "NBEstimate",
    "assemble",
    "matrix_sqrt",
    "make_dependence_matrix",
    "make_band_matrix",
    "make_perturbed_band_matrix",
    "apply_dependence",
    "is_band",
    "violating_rows",
    "j_statistic",
    "nb_statistic",
    "band_k",
    "save_matrix_csv",
    "load_matrix_csv",
]

EXACT_ENUMERATION_LIMIT = 100_000


@dataclass(frozen=True)
class DataMatrix:
    entries: np.ndarray
    provenance: Optional[tuple] = None

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]


def _entries(X) -> np.ndarray:
    return X.entries if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def assemble(sigma, z, provenance: Optional[tuple] = None) -> DataMatrix:
    """Hadamard product ``X_it = sigma_it * Z_it``."""
    sigma = np.asarray(sigma, dtype=float)
    z = np.asarray(z, dtype=float)
    if sigma.shape != z.shape or sigma.ndim != 2:
        raise ValueError(f"volatility {sigma.shape} and noise {z.shape} must be equal-sized matrices")
    if np.any(sigma < 0):
        raise ValueError("volatility must be non-negative")
    entries = sigma * z
    entries.setflags(write=False)
    return DataMatrix(entries, provenance)


def matrix_sqrt(A) -> np.ndarray:
    """Symmetric positive definite square root ``O T^{1/2} O'``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise ValueError("matrix_sqrt requires a symmetric matrix")
    d = np.diag(A)
    if np.count_nonzero(A - np.diag(d)) == 0:
        if np.any(d <= 0):
            raise ValueError("matrix is not positive definite")
        return np.diag(np.sqrt(d))
    t, O = np.linalg.eigh(A)
    if t[0] <= 0:
        raise ValueError(f"matrix is not positive definite (smallest eigenvalue {t[0]:.3g})")
    R = (O * np.sqrt(t)) @ O.T
    return 0.5 * (R + R.T)


@dataclass(frozen=True)
class DependenceMatrix:
    """Deterministic symmetric positive definite ``A`` with cached square root."""

    entries: np.ndarray
    sqrt_entries: np.ndarray = field(repr=False)
    declared_bandwidth: Optional[int]
    spectral_bound: float

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)


def make_dependence_matrix(entries, declared_bandwidth: Optional[int] = None,
                           spectral_bound: Optional[float] = None) -> DependenceMatrix:
    """Validate ``entries`` and wrap them with their square root.

    Raises ``ValueError`` if the matrix is not exactly symmetric, not positive
    definite, or its norm exceeds ``spectral_bound``.
    """
    A = np.array(entries, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise ValueError("dependence matrix must be exactly symmetric")
    eig = np.linalg.eigvalsh(A)
    if eig[0] <= 0:
        raise ValueError(f"dependence matrix is not positive definite (smallest eigenvalue {eig[0]:.3g})")
    norm = float(eig[-1])
    if spectral_bound is None:
        spectral_bound = norm
    elif norm > spectral_bound * (1 + 1e-12):
        raise ValueError(f"spectral norm {norm:.6g} exceeds declared bound {spectral_bound:.6g}")
    R = matrix_sqrt(A)
    p = A.shape[0]
    if np.linalg.norm(R @ R - A) > 1e-8 * p:
        raise ValueError("square root failed to reproduce the matrix")
    A.setflags(write=False)
    R.setflags(write=False)
    return DependenceMatrix(A, R, declared_bandwidth, float(spectral_bound))


def make_band_matrix(p: int, bandwidth: int, diag_value: float,
                     offdiag_profile: Union[Callable[[int], float], Sequence[float], None] = None) -> DependenceMatrix:
    """Diagonally dominant band matrix.

    ``offdiag_profile`` maps a lag ``1..bandwidth`` to the entry on that
    off-diagonal; a sequence is read as ``profile[lag - 1]``.
    """
    if not 0 <= bandwidth < p:
        raise ValueError(f"bandwidth must lie in [0, p), got {bandwidth} for p={p}")
    if offdiag_profile is None:
        offdiag_profile = ()
    if not callable(offdiag_profile):
        values = list(offdiag_profile)
        if len(values) < bandwidth:
            raise ValueError(f"profile has {len(values)} lags, bandwidth is {bandwidth}")
        profile = lambda lag: values[lag - 1]  # noqa: E731
    else:
        profile = offdiag_profile
    lags = [float(profile(lag)) for lag in range(1, bandwidth + 1)]
    radius = 2.0 * sum(abs(v) for v in lags)
    if not diag_value > radius:
        raise ValueError(f"diagonal {diag_value} does not dominate off-diagonal mass {radius}")
    A = diag_value * np.eye(p)
    for lag, v in enumerate(lags, start=1):
        idx = np.arange(p - lag)
        A[idx, idx + lag] = v
        A[idx + lag, idx] = v
    return make_dependence_matrix(A, declared_bandwidth=bandwidth, spectral_bound=diag_value + radius)


def make_perturbed_band_matrix(base: DependenceMatrix, num_dense_rows: int, seed: int) -> DependenceMatrix:
    """Break the band structure on a few randomly chosen rows.

    The chosen rows are coupled to each other at every lag, so only they
    violate the band and symmetry is kept.  Entries are bounded by
    ``spectral_bound / (2 p)``.
    """
    p = base.p
    if num_dense_rows == 0:
        return base
    if not 0 < num_dense_rows <= p:
        raise ValueError(f"num_dense_rows must lie in [0, p], got {num_dense_rows}")
    rng = make_rng(seed)
    rows = np.sort(rng.choice(p, size=num_dense_rows, replace=False))
    A = np.array(base.entries)
    cap = base.spectral_bound / (2.0 * p)
    E = np.zeros_like(A)
    for a, b in itertools.combinations(rows, 2):
        E[a, b] = E[b, a] = cap * rng.uniform(-1.0, 1.0)
    A += E
    bound = base.spectral_bound + float(np.linalg.norm(E))
    return make_dependence_matrix(A, declared_bandwidth=None, spectral_bound=bound)


def apply_dependence(A_sqrt, X) -> np.ndarray:
    """``Y = A^{1/2} X``."""
    R = A_sqrt.sqrt_entries if isinstance(A_sqrt, DependenceMatrix) else np.asarray(A_sqrt, dtype=float)
    X = _entries(X)
    if R.shape != (X.shape[0], X.shape[0]):
        raise ValueError(f"cannot apply a {R.shape} matrix to data with {X.shape[0]} rows")
    if np.array_equal(R, np.eye(R.shape[0])):
        return np.array(X)
    return R @ X


def _dense(A) -> np.ndarray:
    return A.entries if isinstance(A, DependenceMatrix) else np.asarray(A)


def is_band(A, k: int) -> bool:
    """True iff every entry farther than ``k`` from the diagonal is zero."""
    M = _dense(A)
    return not np.any(np.triu(M, k + 1)) and not np.any(np.tril(M, -k - 1))


def violating_rows(A, k: int) -> np.ndarray:
    """Boolean mask of rows with a non-zero entry at distance ``> k`` from the diagonal."""
    M = _dense(A)
    return np.any(np.triu(M, k + 1) != 0, axis=1) | np.any(np.tril(M, -k - 1) != 0, axis=1)


def j_statistic(A, a: Sequence[int], k: Optional[int] = None) -> int:
    """1 if any selected row ``a_i`` has a non-zero entry at a column ``j`` with ``|j - a_i| > k``.

    ``k`` defaults to ``len(a)``.
    """
    a = np.asarray(a, dtype=int)
    if a.size and np.any(np.diff(a) <= 0):
        raise ValueError("row selection must be strictly increasing")
    if k is None:
        k = len(a)
    return int(np.any(violating_rows(A, k)[a]))


@dataclass(frozen=True)
class NBEstimate:
    value: float
    stderr: float
    method: str


def nb_statistic(A, k: int, num_samples: int = 10_000, seed: int = 0, method: str = "auto") -> NBEstimate:
    """Probability that a uniformly drawn ``k``-subset of rows sees a band violation at bandwidth ``k``.

    ``method`` is ``"auto"`` (exact enumeration when ``C(p, k) <= 1e5``,
    Monte Carlo otherwise), ``"exact"`` or ``"mc"``.  A matrix with declared
    bandwidth ``<= k`` returns 0 without sampling.
    """
    p = _dense(A).shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"k must lie in [1, p], got {k}")
    if isinstance(A, DependenceMatrix) and A.declared_bandwidth is not None and A.declared_bandwidth <= k:
        return NBEstimate(0.0, 0.0, "declared")
    bad = violating_rows(A, k)
    if method == "auto":
        method = "exact" if math.comb(p, k) <= EXACT_ENUMERATION_LIMIT else "mc"
    if method == "exact":
        hits = sum(bool(bad[list(a)].any()) for a in itertools.combinations(range(p), k))
        return NBEstimate(hits / math.comb(p, k), 0.0, "exact")
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    rng = make_rng(seed)
    hits = 0
    chunk = 4096
    done = 0
    while done < num_samples:
        m = min(chunk, num_samples - done)
        # first k columns of a random permutation are a uniform k-subset
        subsets = np.argsort(rng.random((m, p)), axis=1)[:, :k]
        hits += int(np.count_nonzero(bad[subsets].any(axis=1)))
        done += m
    q = hits / num_samples
    return NBEstimate(q, math.sqrt(q * (1.0 - q) / num_samples), "mc")


def band_k(p: int, rule: str = "p^{1/4}") -> int:
    """Bandwidth schedule ``k_p``: ``floor(p ** 0.25)`` or ``fixed(k)``."""
    if rule in ("p^{1/4}", "p^1/4", "quarter-power"):
        return max(1, int(math.floor(p**0.25 + 1e-12)))
    if rule.startswith("fixed(") and rule.endswith(")"):
        return int(rule[6:-1])
    raise ValueError(f"unknown band rule {rule!r}")


def save_matrix_csv(path, M) -> None:
    """Row-major CSV; the header row holds the dimensions."""
    M = _dense(M) if isinstance(M, DependenceMatrix) else _entries(M)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(M.shape)
        for row in M:
            w.writerow(f"{v:.17g}" for v in row)


def load_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        rows, cols = (int(v) for v in next(r))
        M = np.array([[float(v) for v in row] for row in r], dtype=float)
    if M.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, body is {M.shape}")
    return M
