import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score

from modnet.embedding import (
    adjusted_rand_index,
    align_labels,
    estimate_rank,
    gmm_em,
    kmeans,
    relabel,
    spectral_embed,
)
from modnet.errors import DimensionError, DomainError
from modnet.linalg import low_rank_truncate, sym_eig, top_eigenpairs
from modnet.models import SbmParams, derive_seed, sample_memberships, sample_sbm

B1 = np.array([[0.85, 0.5, 0.25], [0.5, 0.85, 0.5], [0.25, 0.5, 0.85]])


def test_embed_all_ones():
    emb = spectral_embed(np.ones((4, 4)), 1)
    assert_allclose(np.abs(emb.coords), 1.0)
    assert_allclose(emb.values, [4.0])


def test_embed_gram_reconstructs_truncation(rng):
    B = np.array([[0.3, 0.75], [0.75, 0.4]])
    p = SbmParams(B, [0.5, 0.5])
    tau = sample_memberships(p.pi, 150, 1)
    A = sample_sbm(p, tau, 2)
    emb = spectral_embed(A, 2)
    target = low_rank_truncate(sym_eig(A), 2)
    assert np.linalg.norm(emb.gram() - target) <= 1e-7 * np.linalg.norm(A)
    assert_array_equal(emb.signs, [1.0, -1.0])


def test_embed_two_block_rows_concentrate():
    p = SbmParams([[0.6, 0.2], [0.2, 0.6]], [0.5, 0.5])
    tau = sample_memberships(p.pi, 600, 3)
    X = spectral_embed(sample_sbm(p, tau, 4), 2).coords
    c = np.array([X[tau == k].mean(0) for k in range(2)])
    spread = max(np.linalg.norm(X[tau == k] - c[k], axis=1).max() for k in range(2))
    assert spread < np.linalg.norm(c[0] - c[1])


def test_embed_rejects_bad_dimension():
    with pytest.raises(DimensionError):
        spectral_embed(np.eye(3), 0)


def test_estimate_rank_examples():
    assert estimate_rank([10, 9, 0.5, 0.4], 3) == 2
    assert estimate_rank([2, 2, 2, 2], 3) == 1
    assert estimate_rank([5, 0, 0], 2) == 1
    with pytest.raises(DimensionError):
        estimate_rank([3, 2], 2)


def test_estimate_rank_example_one_dense():
    hits = 0
    for r in range(200):
        s_tau, s_graph = derive_seed(77, r).spawn(2)
        tau = sample_memberships([1 / 3] * 3, 1800, s_tau)
        A = sample_sbm(SbmParams(B1, [1 / 3] * 3), tau, s_graph)
        hits += estimate_rank(top_eigenpairs(A, 4).values, 3) == 3
    assert hits >= 0.95 * 200


def test_kmeans_single_cluster(rng):
    X = rng.standard_normal((30, 2))
    res = kmeans(X, 1)
    assert_allclose(res.centers[0], X.mean(0))
    assert_array_equal(res.labels, 0)


def test_kmeans_separated_clouds(rng):
    X = np.vstack([rng.standard_normal((50, 2)) * 0.1, rng.standard_normal((50, 2)) * 0.1 + 1.0])
    truth = np.repeat([0, 1], 50)
    assert adjusted_rand_index(kmeans(X, 2).labels, truth) == 1.0


def test_kmeans_best_of_restarts_and_matches_sklearn(rng):
    X = np.vstack([rng.standard_normal((80, 2)) + c for c in ([0, 0], [4, 0], [0, 4])])
    res = kmeans(X, 3, restarts=10, seed=5)
    assert res.objective <= min(res.history) + 1e-9
    sk = KMeans(3, n_init=10, random_state=0).fit(X)
    assert res.objective <= sk.inertia_ * (1 + 1e-9)
    assert adjusted_rand_score(res.labels, sk.labels_) == pytest.approx(1.0)


def test_kmeans_seed_sequence_is_repeatable(rng):
    X = rng.standard_normal((60, 2))
    ss = np.random.SeedSequence(12)
    assert_array_equal(kmeans(X, 3, seed=ss).labels, kmeans(X, 3, seed=ss).labels)


def test_gmm_single_component(rng):
    X = rng.standard_normal((200, 2)) * [1.0, 2.0] + [3.0, -1.0]
    res = gmm_em(X, 1)
    assert_allclose(res.centers[0], X.mean(0), atol=1e-12)
    assert_array_equal(res.labels, 0)


def test_gmm_agrees_with_kmeans_and_is_monotone(rng):
    X = np.vstack([rng.standard_normal((100, 2)) * 0.3 + c for c in ([0, 0], [5, 5])])
    g = gmm_em(X, 2, seed=1)
    k = kmeans(X, 2, seed=1)
    assert adjusted_rand_index(g.labels, k.labels) == 1.0
    h = np.array(g.history)
    assert np.all(np.diff(h) >= -1e-8 * np.abs(h[1:]))


def test_align_labels_examples():
    ref = np.array([0, 0, 1, 1, 2])
    perm, agree = align_labels(ref, ref)
    assert_array_equal(perm, [0, 1, 2])
    assert agree == 5
    swapped = np.array([1, 1, 0, 0, 2])
    perm, agree = align_labels(swapped, ref)
    assert_array_equal(perm, [1, 0, 2])
    assert agree == 5
    assert_array_equal(relabel(swapped, perm), ref)


def test_align_labels_random_null(rng):
    a = rng.integers(0, 3, 300)
    b = rng.integers(0, 3, 300)
    _, agree = align_labels(a, b)
    # maximum over 6 permutations of a Binomial(300, 1/3) count
    assert 100 - 3 * np.sqrt(300 * 2 / 9) <= agree <= 100 + 4 * np.sqrt(300 * 2 / 9)


def test_align_labels_many_labels_uses_assignment(rng):
    ref = rng.integers(0, 12, 500)
    perm = rng.permutation(12)
    est = np.argsort(perm)[ref]
    p, agree = align_labels(est, ref)
    assert agree == 500
    assert_array_equal(relabel(est, p), ref)


def test_ari_examples():
    assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert adjusted_rand_index([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0
    # every cell of the contingency table is 1: index 0, expected 2/3, max 2
    assert adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)
    assert adjusted_rand_score([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)
    with pytest.raises(DomainError):
        adjusted_rand_index([0], [0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=2, max_size=40), st.integers(0, 10**6))
def test_ari_matches_sklearn_symmetric_permutation_invariant(a, seed):
    r = np.random.default_rng(seed)
    a = np.array(a)
    b = r.integers(0, 3, a.size)
    ours = adjusted_rand_index(a, b)
    assert ours == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)
    assert ours == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
    assert ours == pytest.approx(adjusted_rand_index(r.permutation(5)[a], b), abs=1e-12)
