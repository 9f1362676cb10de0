import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from modnet.errors import DimensionError, DomainError
from modnet.linalg import sym_eig
from modnet.models import (
    LatentPositions,
    SbmParams,
    block_counts,
    derive_seed,
    expected_matrix,
    hardy_weinberg_curve,
    hardy_weinberg_positions,
    indicator_matrix,
    sample_grdpg,
    sample_memberships,
    sample_sbm,
    sbm_latent_positions,
)

B3 = np.array([[0.5625, 0.1875], [0.1875, 0.0625]])


def test_params_validation():
    SbmParams([[0.5]], [1.0])
    with pytest.raises(DomainError):
        SbmParams([[0.5, 0.2], [0.3, 0.5]], [0.5, 0.5])
    with pytest.raises(DomainError):
        SbmParams([[1.0]], [1.0])
    with pytest.raises(DomainError):
        SbmParams([[0.5]], [0.9])
    with pytest.raises(DomainError):
        SbmParams([[0.5]], [1.0], rho=0.0)
    with pytest.raises(DimensionError):
        SbmParams([[0.5, 0.2], [0.2, 0.5]], [1.0])


def test_memberships_single_block():
    assert_array_equal(sample_memberships([1.0], 5, 0), np.zeros(5, dtype=int))


def test_memberships_balanced_fraction():
    tau = sample_memberships([0.5, 0.5], 100_000, 3)
    assert abs((tau == 0).mean() - 0.5) < 0.01


def test_memberships_deterministic():
    assert_array_equal(sample_memberships([0.2, 0.8], 50, 7), sample_memberships([0.2, 0.8], 50, 7))


def test_derive_seed_streams_are_distinct_and_repeatable():
    a = np.random.default_rng(derive_seed(1, 300, 0)).random(3)
    b = np.random.default_rng(derive_seed(1, 300, 0)).random(3)
    c = np.random.default_rng(derive_seed(1, 300, 1)).random(3)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sbm_near_complete():
    p = SbmParams([[0.999]], [1.0])
    A = sample_sbm(p, np.zeros(50, dtype=int), 11)
    assert A.mean() >= 0.95


def test_sbm_block_rates_within_three_se():
    p = SbmParams(B3, [0.25, 0.75])
    tau = sample_memberships(p.pi, 1000, 1)
    A = sample_sbm(p, tau, 2)
    Z = indicator_matrix(tau)
    n = block_counts(tau, 2)
    for k in range(2):
        for l in range(2):
            block = A[np.ix_(tau == k, tau == l)]
            if k == l:
                iu = np.triu_indices(n[k])
                vals = block[iu]
            else:
                vals = block.ravel()
            se = np.sqrt(B3[k, l] * (1 - B3[k, l]) / vals.size)
            assert abs(vals.mean() - B3[k, l]) < 3 * se
    assert Z.shape == (1000, 2)


def test_sbm_symmetric_binary_deterministic():
    p = SbmParams(B3, [0.25, 0.75], rho=0.5)
    tau = sample_memberships(p.pi, 200, 4)
    A = sample_sbm(p, tau, 5)
    assert_array_equal(A, A.T)
    assert set(np.unique(A)) <= {0.0, 1.0}
    assert_array_equal(A, sample_sbm(p, tau, 5))


def test_sbm_loops_toggle():
    p = SbmParams([[0.9]], [1.0])
    A = sample_sbm(p, np.zeros(40, dtype=int), 0, loops=False)
    assert np.all(np.diag(A) == 0)


def test_expected_matrix_examples():
    p = SbmParams([[0.4]], [1.0], rho=0.5)
    assert_allclose(expected_matrix(p, np.zeros(3, dtype=int)), np.full((3, 3), 0.2))
    p2 = SbmParams(B3, [0.25, 0.75], rho=0.5)
    assert_allclose(expected_matrix(p2, [0, 1]), 0.5 * B3)
    with pytest.raises(DimensionError):
        expected_matrix(p2, [0, 2])


def test_expected_matrix_rank_and_distinct_rows():
    B = np.array([[0.85, 0.5, 0.25], [0.5, 0.85, 0.5], [0.25, 0.5, 0.85]])
    p = SbmParams(B, [1 / 3] * 3)
    tau = sample_memberships(p.pi, 60, 9)
    P = expected_matrix(p, tau)
    vals = sym_eig(P).values
    assert (np.abs(vals) > 1e-10 * abs(vals[0])).sum() == 3
    assert np.unique(P, axis=0).shape[0] <= 3
    P1 = expected_matrix(SbmParams(B3, [0.25, 0.75]), sample_memberships([0.25, 0.75], 40, 1))
    vals1 = sym_eig(P1).values
    assert (np.abs(vals1) > 1e-10 * abs(vals1[0])).sum() == 1


def test_grdpg_constant_positions_is_erdos_renyi():
    x = np.full((400, 1), np.sqrt(0.3))
    A = sample_grdpg(LatentPositions(x), 3)
    iu = np.triu_indices(400)
    rate = A[iu].mean()
    assert abs(rate - 0.3) < 4 * np.sqrt(0.3 * 0.7 / iu[0].size)


def test_grdpg_zero_positions_give_empty_graph():
    A = sample_grdpg(LatentPositions(np.zeros((10, 2)), (0, 2)), 0)
    assert A.sum() == 0


def test_grdpg_rejects_invalid_probability():
    with pytest.raises(DomainError, match=r"\(0, 0\)"):
        sample_grdpg(LatentPositions(np.array([[0.0, 1.0]]), (1, 1)), 0)


def test_grdpg_reproduces_sbm_block_rates():
    B = np.array([[0.3, 0.75], [0.75, 0.4]])
    params = SbmParams(B, [0.5, 0.5])
    tau = np.repeat([0, 1], 30)
    latent = sbm_latent_positions(params, tau)
    assert_allclose(latent.probabilities(), B[np.ix_(tau, tau)], atol=1e-12)
    Z = indicator_matrix(tau)
    sums_g = np.zeros((2, 2))
    sums_s = np.zeros((2, 2))
    for r in range(200):
        sums_g += Z.T @ sample_grdpg(latent, derive_seed(5, r)) @ Z
        sums_s += Z.T @ sample_sbm(params, tau, derive_seed(6, r)) @ Z
    pairs = 200 * 900.0
    se = np.sqrt(2 * B * (1 - B) / pairs)
    assert np.all(np.abs(sums_g / pairs - sums_s / pairs) < 4 * se * np.sqrt(2))


def test_hardy_weinberg_curve():
    assert_allclose(hardy_weinberg_curve(np.array([0.0, 1.0])), [[0, 0, 1], [1, 0, 0]])
    t = np.linspace(0, 1, 101)
    assert_allclose(hardy_weinberg_curve(t).sum(1), 1.0, atol=1e-15)


def test_hardy_weinberg_mixture_fraction():
    latent, comp = hardy_weinberg_positions(0.6, (1.2, 5.5), (8.0, 1.2), 2000, 4)
    assert abs((comp == 0).mean() - 0.6) < 0.03
    assert_allclose(latent.X.sum(1), 1.0, atol=1e-15)
    assert latent.signature == (3, 0)
