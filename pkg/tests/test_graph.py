import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpgcn.graph import (GraphError, SbmParams, build_graph, generate_sbm, laplacian,
                         laplacian_rank_one, neighboring_graph, normalize_features,
                         read_edge_list, read_features, write_edge_list, write_features)

from conftest import random_graph


def test_orientation_and_duplicates_collapse():
    g = build_graph(3, [(0, 1), (1, 0), (1, 2)])
    assert g.edge_set() == {(0, 1), (1, 2)}
    assert g.degrees.tolist() == [1, 2, 1]


def test_triangle_degrees(k3):
    assert k3.degrees.tolist() == [2, 2, 2]
    assert k3.num_edges == 3


@pytest.mark.parametrize("n, edges, match", [
    (2, [(0, 0)], "self-loop"),
    (3, [(0, 3)], "outside"),
    (3, [(-1, 2)], "outside"),
    (0, [], "positive"),
])
def test_build_graph_rejects(n, edges, match):
    with pytest.raises(GraphError, match=match):
        build_graph(n, edges)


def test_laplacian_p3(p3):
    expected = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    np.testing.assert_array_equal(laplacian(p3), expected)


def test_laplacian_k3(k3):
    np.testing.assert_array_equal(laplacian(k3), 3 * np.eye(3) - np.ones((3, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_rank_one_sum_equals_d_minus_a(seed):
    g = random_graph(15, 0.3, seed)
    # D - A built directly from the edge list, independent of Graph.adjacency.
    d_minus_a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        d_minus_a[u, u] += 1
        d_minus_a[v, v] += 1
        d_minus_a[u, v] -= 1
        d_minus_a[v, u] -= 1
    assert np.max(np.abs(laplacian_rank_one(g) - d_minus_a)) == 0.0
    assert np.max(np.abs(laplacian(g) - d_minus_a)) == 0.0


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 25), p=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_laplacian_psd_and_zero_row_sums(n, p, seed):
    lap = laplacian(random_graph(n, p, seed))
    assert np.allclose(lap, lap.T)
    assert np.linalg.eigvalsh(lap).min() >= -1e-10
    assert np.max(np.abs(lap @ np.ones(n))) <= 1e-10


def test_sbm_degenerate_probabilities():
    g, labels = generate_sbm(SbmParams(4, 1.0, 0.0), seed=3)
    assert g.edge_set() == {(0, 1), (2, 3)}
    assert labels.tolist() == [1, 1, -1, -1]
    g, _ = generate_sbm(SbmParams(6, 0.0, 0.0), seed=3)
    assert g.num_edges == 0


def test_sbm_edge_count_within_four_sigma():
    g, _ = generate_sbm(SbmParams(100, 0.5, 0.05), seed=11)
    within, across = 2 * (50 * 49 // 2), 50 * 50
    mean = 0.5 * within + 0.05 * across
    sd = np.sqrt(within * 0.25 + across * 0.05 * 0.95)
    assert mean == 1350.0
    assert abs(g.num_edges - mean) <= 4 * sd


def test_sbm_bit_identical_per_seed():
    a, la = generate_sbm(SbmParams(40, 0.3, 0.1), seed=5)
    b, lb = generate_sbm(SbmParams(40, 0.3, 0.1), seed=5)
    assert a == b and np.array_equal(a.edges, b.edges) and np.array_equal(la, lb)


@pytest.mark.parametrize("params", [(5, 0.5, 0.1), (4, 0.1, 0.5), (4, 1.2, 0.0)])
def test_sbm_params_invalid(params):
    with pytest.raises(GraphError):
        SbmParams(*params)


def test_neighboring_examples(k3, p3):
    assert neighboring_graph(k3, 0, 1).edge_set() == {(0, 2), (1, 2)}
    assert neighboring_graph(p3, 2, 0) == k3
    with pytest.raises(GraphError):
        neighboring_graph(k3, 1, 1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_neighboring_is_involution_changing_one_pair(seed, data):
    g = random_graph(12, 0.4, seed)
    u = data.draw(st.integers(0, 11))
    v = data.draw(st.integers(0, 11).filter(lambda v: v != u))
    h = neighboring_graph(g, u, v)
    assert len(g.edge_set() ^ h.edge_set()) == 1
    assert h.n == g.n
    assert neighboring_graph(h, u, v) == g


def test_read_edge_list(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text("3\n0 1\n1 2\n")
    assert read_edge_list(path) == build_graph(3, [(0, 1), (1, 2)])


def test_edge_list_round_trip_canonical(tmp_path):
    src = tmp_path / "in.edges"
    src.write_text("# comment\n5\n\n1 0  # reversed\n3 2\n0 1\n")
    g = read_edge_list(src)
    out = tmp_path / "out.edges"
    write_edge_list(g, out)
    assert out.read_text() == "5\n0 1\n2 3\n"
    assert read_edge_list(out) == g
    # Isolated trailing node 4 survives.
    assert g.n == 5


def test_edge_list_parse_error_cites_line(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("3\n0 1\n1 x\n")
    with pytest.raises(GraphError, match=":3:"):
        read_edge_list(path)


def test_features_round_trip(tmp_path):
    x = normalize_features([3.0, -4.0, 0.0])
    write_features(x, tmp_path / "x.txt")
    y = read_features(tmp_path / "x.txt", 3)
    np.testing.assert_array_equal(x, y)
    assert abs(np.linalg.norm(y) - 1) <= 1e-12
    with pytest.raises(GraphError):
        read_features(tmp_path / "x.txt", 4)
