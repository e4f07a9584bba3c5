import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svspectra.model import (
    DataMatrix,
    apply_dependence,
    assemble,
    band_k,
    is_band,
    j_statistic,
    load_matrix_csv,
    make_band_matrix,
    make_dependence_matrix,
    make_perturbed_band_matrix,
    matrix_sqrt,
    nb_statistic,
    save_matrix_csv,
    violating_rows,
)


def naive_j(A, a, k):
    A = np.asarray(A)
    for i in a:
        for j in range(A.shape[1]):
            if abs(i - j) > k and A[i, j] != 0:
                return 1
    return 0


def random_pd(p, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((p, p))
    return B @ B.T + p * np.eye(p)


# ---- assemble

def test_assemble_identities():
    z = np.arange(6.0).reshape(2, 3) - 2
    assert np.array_equal(assemble(np.ones((2, 3)), z).entries, z)
    assert not np.any(assemble(np.zeros((2, 3)), z).entries)
    assert np.array_equal(assemble(2 * np.ones((2, 3)), z).entries, 2 * z)


def test_assemble_shape_and_readonly():
    X = assemble(np.ones((2, 3)), np.ones((2, 3)))
    assert isinstance(X, DataMatrix) and (X.p, X.n) == (2, 3)
    with pytest.raises(ValueError):
        X.entries[0, 0] = 5.0
    with pytest.raises(ValueError):
        assemble(np.ones((2, 3)), np.ones((3, 2)))
    with pytest.raises(ValueError):
        assemble(-np.ones((2, 3)), np.ones((2, 3)))


# ---- band matrices

def test_band_identity():
    A = make_band_matrix(5, 0, 1.0, [])
    assert np.array_equal(A.entries, np.eye(5))


def test_band_tridiagonal_eigenvalues():
    A = make_band_matrix(4, 1, 2.0, [0.5])
    w = np.linalg.eigvalsh(A.entries)
    # closed form 2 + cos(k pi / 5) for k = 1..4
    expected = np.sort(2 + np.cos(np.arange(1, 5) * np.pi / 5))
    assert np.allclose(w, expected, atol=1e-14)
    assert w.min() >= 1 and w.max() <= 3


@given(st.integers(1, 40), st.integers(0, 5), st.integers(0, 2**32))
def test_band_is_band(p, b, seed):
    b = min(b, p - 1)
    profile = np.random.default_rng(seed).uniform(-0.4, 0.4, b) / max(b, 1)
    A = make_band_matrix(p, b, 1.0, profile)
    assert is_band(A, b)
    assert np.array_equal(A.entries, A.entries.T)
    assert np.linalg.eigvalsh(A.entries).max() <= A.spectral_bound + 1e-12


def test_band_requires_dominance():
    with pytest.raises(ValueError):
        make_band_matrix(5, 1, 1.0, [0.6])


def test_perturbed_zero_rows_is_base():
    base = make_band_matrix(10, 1, 2.0, [0.5])
    out = make_perturbed_band_matrix(base, 0, seed=1)
    assert np.array_equal(out.entries, base.entries)


def test_perturbed_symmetric_and_nearly_banded():
    base = make_band_matrix(100, 1, 2.0, [0.5])
    A = make_perturbed_band_matrix(base, 2, seed=3)
    assert np.array_equal(A.entries, A.entries.T)
    assert violating_rows(A, 5).sum() == 2
    exact = 1 - math.comb(98, 5) / math.comb(100, 5)
    est = nb_statistic(A, 5, num_samples=20_000, seed=4)
    assert est.value < 0.2
    assert abs(est.value - exact) <= 4 * est.stderr


# ---- matrix_sqrt

def test_sqrt_identity_and_diagonal():
    assert np.array_equal(matrix_sqrt(np.eye(3)), np.eye(3))
    assert np.array_equal(matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


@given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=10))
def test_sqrt_diagonal_elementwise(d):
    assert np.array_equal(np.diag(matrix_sqrt(np.diag(d))), np.sqrt(d))


@pytest.mark.parametrize("seed", range(5))
def test_sqrt_random_pd(seed):
    A = random_pd(10, seed)
    R = matrix_sqrt(A)
    assert np.linalg.norm(R @ R - A) <= 1e-8 * 10
    assert np.array_equal(R, R.T)


def test_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        matrix_sqrt(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        matrix_sqrt(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_dependence_matrix_checks():
    A = make_dependence_matrix(random_pd(4, 0))
    assert A.p == 4
    with pytest.raises(ValueError):
        make_dependence_matrix(np.eye(3), spectral_bound=0.5)


# ---- apply_dependence

def test_apply_dependence_identity_bitwise():
    X = np.random.default_rng(0).standard_normal((4, 6))
    assert np.array_equal(apply_dependence(np.eye(4), X), X)
    assert np.array_equal(apply_dependence(matrix_sqrt(4 * np.eye(4)), X), 2 * X)


def test_apply_dependence_naive_loop():
    rng = np.random.default_rng(1)
    R, X = rng.standard_normal((3, 3)), rng.standard_normal((3, 5))
    Y = np.zeros((3, 5))
    for i in range(3):
        for t in range(5):
            for j in range(3):
                Y[i, t] += R[i, j] * X[j, t]
    assert np.allclose(apply_dependence(R, X), Y, rtol=1e-14, atol=1e-14)


# ---- J / NB statistics

def test_j_examples():
    assert j_statistic(np.eye(8), (0, 3, 7)) == 0
    band = make_band_matrix(20, 2, 2.0, [0.3, 0.2])
    assert j_statistic(band, (1, 5, 9), k=2) == 0
    A = np.zeros((12, 12))
    A[0, 9] = 1.0
    assert j_statistic(A, (0,), k=5) == 1


@settings(max_examples=40)
@given(st.integers(2, 8), st.integers(0, 7), st.integers(0, 2**32))
def test_j_consistency_with_is_band(p, k, seed):
    rng = np.random.default_rng(seed)
    A = np.where(rng.random((p, p)) < 0.3, rng.standard_normal((p, p)), 0.0)
    A = A + A.T + np.eye(p)
    k = min(k, p)
    js = [j_statistic(A, a, k=k) for r in range(1, p + 1) for a in itertools.combinations(range(p), r)]
    assert is_band(A, k) == (max(js) == 0)
    for a in itertools.combinations(range(p), min(k, p) or 1):
        assert j_statistic(A, a, k=k) == naive_j(A, a, k)


def test_j_requires_increasing():
    with pytest.raises(ValueError):
        j_statistic(np.eye(4), (2, 1))


def test_nb_band_exact_zero():
    band = make_band_matrix(30, 2, 2.0, [0.3, 0.2])
    est = nb_statistic(band, 3)
    assert est.value == 0.0 and est.method == "declared"
    assert nb_statistic(band.entries, 3).value == 0.0
    assert nb_statistic(np.eye(6), 2).value == 0.0


def one_bad_row(p=6, eps=1e-3):
    A = np.eye(p)
    A[0, p - 1] = eps
    return A


def test_nb_single_violating_row_exact():
    est = nb_statistic(one_bad_row(), 2, method="exact")
    assert est.value == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_nb_mc_against_enumeration(seed):
    A = one_bad_row()
    exact = nb_statistic(A, 2, method="exact").value
    est = nb_statistic(A, 2, num_samples=5000, seed=seed, method="mc")
    assert est.stderr > 0
    assert abs(est.value - exact) <= 4 * est.stderr


def test_is_band_examples():
    tri = make_band_matrix(5, 1, 2.0, [0.5])
    assert is_band(np.eye(5), 0)
    assert not is_band(tri, 0)
    assert is_band(tri, 1)


@pytest.mark.parametrize("p, rule, k", [(16, "p^{1/4}", 2), (332, "p^{1/4}", 4), (1, "p^{1/4}", 1), (50, "fixed(3)", 3)])
def test_band_k(p, rule, k):
    assert band_k(p, rule) == k


def test_band_k_rejects_unknown_rule():
    with pytest.raises(ValueError):
        band_k(10, "log p")


def test_matrix_csv_roundtrip(tmp_path):
    M = random_pd(5, 2) / 3
    save_matrix_csv(tmp_path / "A.csv", M)
    assert np.array_equal(load_matrix_csv(tmp_path / "A.csv"), M)
