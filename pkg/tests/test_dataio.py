import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from modnet.dataio import (
    PARCELLATION_SIZES,
    block_means_offdiag,
    coarsen_labels,
    degree_report,
    fisher_transform,
    format_parameter_table,
    knn_graph,
    load_labels,
    load_matrix,
    parameter_table,
    parcellation_labels,
    save_labels,
    save_matrix,
    synthetic_correlations,
    threshold_binarize,
)
from modnet.errors import DimensionError, DomainError, ParseError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_dense_csv(tmp_path):
    W = load_matrix(write(tmp_path, "w.csv", "1,0.3\n0.3,1\n"))
    assert W.order == 2
    assert_allclose(W.values, [[1, 0.3], [0.3, 1]])
    assert W.diagonal == "kept"
    assert load_matrix(write(tmp_path, "z.csv", "1,0.3\n0.3,1\n"), zero_diagonal=True).diagonal == "zeroed"


def test_load_edge_list(tmp_path):
    W = load_matrix(write(tmp_path, "e.txt", "3\n1 2 0.5\n"), "edge-list")
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = 0.5
    assert_array_equal(W.values, expected)


def test_load_rejects_asymmetry_with_position(tmp_path):
    with pytest.raises(ParseError, match=r"\(1, 2\)"):
        load_matrix(write(tmp_path, "a.csv", "1,0.3\n0.4,1\n"))


def test_load_tolerates_tiny_asymmetry(tmp_path):
    load_matrix(write(tmp_path, "t.csv", "1,0.3\n0.3000000000001,1\n"))


@pytest.mark.parametrize(
    "text,fmt,pattern",
    [
        ("1,2\n3\n", "dense-csv", "line 2: ragged"),
        ("1,x\nx,1\n", "dense-csv", "line 1: non-numeric"),
        ("1,2,3\n4,5,6\n", "dense-csv", "not square"),
        ("3\n1 2 a\n", "edge-list", "line 2"),
        ("3\n1 5 1\n", "edge-list", "line 2: node index"),
        ("1 2 3\n", "edge-list", "line 1"),
    ],
)
def test_load_parse_errors(tmp_path, text, fmt, pattern):
    with pytest.raises(ParseError, match=pattern):
        load_matrix(write(tmp_path, "bad", text), fmt)


def test_roundtrip_twelve_digits(tmp_path, rng):
    M = rng.standard_normal((7, 7))
    M = (M + M.T) / 2
    p = tmp_path / "m.csv"
    save_matrix(p, M)
    once = load_matrix(p).values
    assert_allclose(once, M, rtol=1e-11)
    save_matrix(p, once)
    assert_array_equal(load_matrix(p).values, once)


def test_labels_roundtrip(tmp_path):
    p = tmp_path / "l.csv"
    save_labels(p, [2, 0, 1, 1])
    codes, names = load_labels(p)
    assert_array_equal(codes, [2, 0, 1, 1])
    codes, names = load_labels(write(tmp_path, "n.csv", "visual\nmotor\nvisual\n"))
    assert_array_equal(codes, [1, 0, 1]) and names == ["motor", "visual"]


def test_threshold_examples(rng):
    W = rng.uniform(-0.9, 0.9, (8, 8))
    W = (W + W.T) / 2
    full = threshold_binarize(W, 0)
    assert_array_equal(full, 1 - np.eye(8))
    assert threshold_binarize(W, 0.95).sum() == 0
    S = np.array([[1, 0.31, -0.31], [0.31, 1, 0.1], [-0.31, 0.1, 1]])
    A = threshold_binarize(S, 0.3)
    assert A[0, 1] == 1 and A[0, 2] == 1 and A[1, 2] == 0
    with pytest.raises(DomainError):
        threshold_binarize(W, -1)


def test_threshold_monotone_and_percentile(rng):
    W = rng.uniform(-1, 1, (30, 30))
    W = (W + W.T) / 2
    prev = None
    for t in np.linspace(0, 1, 11):
        A = threshold_binarize(W, t)
        if prev is not None:
            assert np.all(A <= prev)
        prev = A
    A = threshold_binarize(W, 80, percentile=True)
    iu = np.triu_indices(30, 1)
    assert A[iu].mean() == pytest.approx(0.2, abs=0.01)


def test_fisher_transform():
    W = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, -0.5], [0.0, -0.5, 1.0]])
    F = fisher_transform(W)
    assert F[0, 1] == pytest.approx(0.5 * np.log(3))
    assert F[0, 2] == 0 and F[1, 2] == -F[0, 1]
    assert_array_equal(np.diag(F), 0)
    with pytest.raises(DomainError, match=r"\[1, 2\]"):
        fisher_transform(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_knn_examples():
    W = np.arange(1, 26, dtype=float).reshape(5, 5)
    W = W + W.T
    assert_array_equal(knn_graph(W, 4), 1 - np.eye(5))
    star = np.full((5, 5), 0.1)
    star[0, :] = star[:, 0] = 1.0
    A = knn_graph(star, 1)
    assert_array_equal(A[0], [0, 1, 1, 1, 1])
    with pytest.raises(DomainError):
        knn_graph(W, 5)


def test_knn_tie_break_lower_index():
    W = np.ones((4, 4))
    A = knn_graph(W, 1)
    # every node picks its lowest-index neighbour
    assert A[1, 0] == 1 and A[2, 0] == 1 and A[3, 0] == 1 and A[0, 1] == 1
    assert A[2, 3] == 0


def test_knn_properties(rng):
    W = rng.standard_normal((377, 20))
    C = np.corrcoef(W)
    A = knn_graph(C, 50)
    assert_array_equal(A, A.T)
    assert set(np.unique(A)) <= {0.0, 1.0}
    assert np.all(np.diag(A) == 0)
    rep = degree_report(A)
    assert rep["min"] >= 50


def test_parcellation_fixture_shape():
    tau = parcellation_labels()
    assert tau.size == 263 and len(PARCELLATION_SIZES) == 14
    coarse = coarsen_labels(tau)
    assert np.unique(coarse).size == 5
    with pytest.raises(DimensionError):
        coarsen_labels([0, 1], groups=((1,),))
    mats = synthetic_correlations(2, seed=3)
    assert mats[0].shape == (263, 263)
    assert_allclose(np.diag(mats[0]), 1.0)


def test_block_means_offdiag():
    A = np.ones((4, 4)) - np.eye(4)
    B, pi = block_means_offdiag(A, [0, 0, 1, 1])
    assert_allclose(B, np.ones((2, 2)))
    assert_allclose(pi, [0.5, 0.5])
    with pytest.raises(DomainError):
        block_means_offdiag(A, [0, 1, 1, 1])


def test_parameter_table_schema_and_na_rule():
    tau = parcellation_labels()
    groups = {"control": synthetic_correlations(6, seed=0), "case": synthetic_correlations(6, seed=1, loading=0.65)}
    rows = parameter_table(groups, tau)
    assert len(rows) == 8
    for r in rows:
        assert (r["sigmaR2"] is None) == (r["d"] == r["K"])
        if r["d"] == r["K"]:
            assert abs(r["Bias"]) < 1e-10
            assert r["sigmaL2"] == pytest.approx(r["sigmaS2"], rel=1e-10)
    text = format_parameter_table(rows)
    assert text.splitlines()[0] == "Type,K,d,Bias,sigmaL2,sigmaS2,sigmaR2"
    assert text.count("NA") == 4
