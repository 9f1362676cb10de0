import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from modnet.errors import DimensionError
from modnet.linalg import (
    duplication_matrix,
    elimination_matrix,
    hadamard,
    kron,
    low_rank_truncate,
    signature_matrix,
    sym_eig,
    top_eigenpairs,
    unvech,
    vec,
    vech,
)

from conftest import random_symmetric


def test_vech_examples():
    assert_array_equal(vech(np.diag([0.25, 0.25])), [0.25, 0, 0.25])
    M = np.add.outer(np.arange(1, 4), np.arange(1, 4))
    assert_array_equal(vech(M), [2, 3, 4, 4, 5, 6])


def test_vech_is_column_major_lower_triangle():
    M = np.array([[1, 2, 4], [2, 3, 5], [4, 5, 6]])
    assert_array_equal(vech(M), [1, 2, 4, 3, 5, 6])


def test_unvech_examples():
    assert_array_equal(unvech([1, 2, 3], 2), [[1, 2], [2, 3]])
    assert_array_equal(unvech(vech(np.eye(3)), 3), np.eye(3))
    assert_array_equal(unvech([5], 1), [[5]])


def test_unvech_rejects_wrong_length():
    with pytest.raises(DimensionError):
        unvech([1, 2], 2)


def test_vec_is_column_stacking():
    assert_array_equal(vec(np.array([[1, 2], [3, 4]])), [1, 3, 2, 4])


def test_structural_matrices_small():
    assert_array_equal(elimination_matrix(1), [[1]])
    assert_array_equal(duplication_matrix(1), [[1]])
    M = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert_array_equal(elimination_matrix(2) @ vec(M), [1, 2, 3])
    assert_array_equal(elimination_matrix(3) @ duplication_matrix(3), np.eye(6))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_vech_roundtrip_and_structural_identities(n, seed):
    M = random_symmetric(np.random.default_rng(seed), n)
    assert_array_equal(unvech(vech(M), n), M)
    L, D = elimination_matrix(n), duplication_matrix(n)
    assert_array_equal(L @ vec(M), vech(M))
    assert_array_equal(D @ vech(M), vec(M))
    assert_array_equal(L @ D, np.eye(n * (n + 1) // 2))


def test_sym_eig_absolute_ordering():
    E = sym_eig(np.diag([3.0, -5.0, 1.0]))
    assert_allclose(E.values, [-5, 3, 1])


def test_sym_eig_tie_prefers_positive():
    E = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert_allclose(E.values, [1, -1], atol=1e-14)


def test_sym_eig_rank_one():
    p = np.array([0.75, 0.25])
    E = sym_eig(0.8 * np.outer(p, p))
    assert_allclose(E.values[0], 0.8 * p @ p, rtol=1e-14)
    assert abs(E.values[1]) < 1e-15


def test_sym_eig_reconstruction_and_orthonormality(rng):
    for n in (1, 5, 40):
        M = random_symmetric(rng, n)
        E = sym_eig(M)
        R = (E.vectors * E.values) @ E.vectors.T
        assert np.linalg.norm(R - M) <= 1e-7 * np.linalg.norm(M)
        assert_allclose(E.vectors.T @ E.vectors, np.eye(n), atol=1e-8)


def test_low_rank_truncate_examples(rng):
    E = sym_eig(np.diag([5.0, 1.0]))
    assert_allclose(low_rank_truncate(E, 1), np.diag([5.0, 0.0]))
    M = random_symmetric(rng, 6)
    full = low_rank_truncate(sym_eig(M), 6)
    assert np.linalg.norm(full - M) <= 1e-7 * np.linalg.norm(M)


def test_low_rank_truncate_error_non_increasing(rng):
    M = random_symmetric(rng, 10)
    E = sym_eig(M)
    errs = [np.linalg.norm(M - low_rank_truncate(E, d)) for d in range(1, 11)]
    assert all(a >= b - 1e-12 for a, b in zip(errs, errs[1:]))


def test_rank_one_truncation_beats_random_probes(rng):
    M = random_symmetric(rng, 8)
    best = np.linalg.norm(M - low_rank_truncate(sym_eig(M), 1))
    for _ in range(200):
        u = rng.standard_normal(8)
        u /= np.linalg.norm(u)
        lam = u @ M @ u
        assert best <= np.linalg.norm(M - lam * np.outer(u, u)) + 1e-12


def test_kron_and_hadamard():
    assert_array_equal(kron(np.eye(2), [[2]]), 2 * np.eye(2))
    P = kron(np.eye(2), [[0, 1], [1, 0]])
    expected = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert_array_equal(P, expected)
    B = np.array([[0.3, 0.75], [0.75, 0.4]])
    assert_allclose(hadamard(np.ones((2, 2)) - B, B), B * (1 - B))
    with pytest.raises(DimensionError):
        hadamard(np.eye(2), np.eye(3))


def test_signature_matrix():
    assert_array_equal(signature_matrix([2.0, -1.0, 0.0]), np.diag([1.0, -1.0, 1.0]))


def test_top_eigenpairs_matches_dense_solver(rng):
    n = 700
    X = rng.random((n, 3))
    M = X @ np.diag([1.0, -0.6, 0.4]) @ X.T + 0.01 * random_symmetric(rng, n)
    E = top_eigenpairs(M, 3)
    full = sym_eig(M)
    assert_allclose(E.values, full.values[:3], rtol=1e-10)
    for k in range(3):
        assert abs(abs(E.vectors[:, k] @ full.vectors[:, k]) - 1) < 1e-9


def test_top_eigenpairs_is_deterministic(rng):
    M = random_symmetric(rng, 400)
    a, b = top_eigenpairs(M, 2), top_eigenpairs(M, 2)
    assert_array_equal(a.values, b.values)
    assert_array_equal(a.vectors, b.vectors)


def test_top_eigenpairs_rejects_bad_d():
    with pytest.raises(DimensionError):
        top_eigenpairs(np.eye(3), 4)
