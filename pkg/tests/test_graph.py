import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from idlegrad import graph
from idlegrad.schedule import stream


@pytest.mark.parametrize("make, n, m", [
    (graph.path_graph, 5, 4),
    (graph.cycle_graph, 6, 6),
    (graph.complete_graph, 5, 10),
])
def test_named_graphs_edge_counts(make, n, m):
    net = make(n)
    assert net.m == m
    assert net.degrees.sum() == 2 * m


@pytest.mark.parametrize("edges, msg", [
    ([(0, 0), (0, 1)], "self-loop"),
    ([(0, 1), (1, 0), (1, 2)], "duplicate"),
    ([(0, 1), (1, 5)], "out of range"),
    ([(0, 1)], "not connected"),
])
def test_network_rejects_bad_edges(edges, msg):
    with pytest.raises(graph.GraphError, match=msg):
        graph.Network(3, edges)


def test_rgg_edges_match_distances():
    net = graph.random_geometric_graph(30, 0.35, stream(4, 0, "graph"))
    pos = net.positions
    edges = set(net.edges)
    for i in range(30):
        for j in range(i + 1, 30):
            close = np.linalg.norm(pos[i] - pos[j]) < 0.35
            assert close == ((i, j) in edges)


def test_rgg_is_reproducible():
    a = graph.random_geometric_graph(20, 0.4, stream(9, 0, "graph"))
    b = graph.random_geometric_graph(20, 0.4, stream(9, 0, "graph"))
    assert a.edges == b.edges


def test_rgg_gives_up_on_tiny_radius():
    with pytest.raises(graph.GraphError, match="no connected graph after 5"):
        graph.random_geometric_graph(40, 0.01, stream(0, 0, "graph"), max_attempts=5)


def test_radius_for_edge_count_matches_monte_carlo():
    r = graph.radius_for_edge_count(50, 214)
    assert r == pytest.approx(0.266082003, abs=1e-8)  # frozen after the check below
    rng = np.random.default_rng(0)
    u, v = rng.random((400_000, 2)), rng.random((400_000, 2))
    frac = np.mean(np.linalg.norm(u - v, axis=1) < r)
    se = math.sqrt(frac * (1 - frac) / 400_000)
    assert abs(frac * 50 * 49 / 2 - 214) <= 4 * se * 50 * 49 / 2


def test_metropolis_on_path_by_hand():
    C = graph.metropolis_weights(graph.path_graph(3)).entries
    third = 1.0 / 3.0
    expected = np.array([[2 * third, third, 0], [third, third, third], [0, third, 2 * third]])
    np.testing.assert_allclose(C, expected, atol=1e-15)


@given(seed=st.integers(0, 10_000), n=st.integers(3, 14))
def test_metropolis_properties(seed, n):
    net = graph.random_geometric_graph(n, 0.8, stream(seed, 0, "graph"))
    C = graph.metropolis_weights(net)
    E = C.entries
    assert np.array_equal(E, E.T)
    np.testing.assert_allclose(E.sum(axis=1), 1.0, atol=1e-14)
    assert C.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    assert C.lambda2 < 1 - 1e-9  # connected
    assert C.lambdaN > -1
    shifted = graph.ensure_positive_definite(C, 0.1)
    assert shifted.lambdaN >= 0.1 - 1e-12
    assert shifted.is_positive_definite


def test_equal_weights_and_laplacian_spectrum():
    n = 6
    net = graph.path_graph(n)
    C = graph.equal_weights(net, 0.25)
    np.testing.assert_allclose(C.entries, np.eye(n) - 0.25 * net.laplacian())
    spec = graph.spectral_quantities(C, 0.25)
    assert spec.lambda2_L == pytest.approx(2 * (1 - math.cos(math.pi / n)), rel=1e-12)
    with pytest.raises(graph.GraphError):
        graph.equal_weights(net, 0.6)


@pytest.mark.parametrize("mutate, msg", [
    (lambda E: E + np.triu(np.full(E.shape, 1e-3), 1), "symmetric"),
    (lambda E: E * 1.01, "sum to 1"),
    (lambda E: E + np.array([[0.5, -0.5, 0], [-0.5, 0.5, 0], [0, 0, 0]]), "negative"),
    (lambda E: np.full(E.shape, 1 / 3), "sparsity"),
])
def test_weight_matrix_validation(mutate, msg):
    net = graph.path_graph(3)
    E = graph.metropolis_weights(net).entries
    with pytest.raises(graph.GraphError, match=msg):
        graph.WeightMatrix(mutate(E.copy()), net)


def test_csr_matches_dense():
    net = graph.random_geometric_graph(12, 0.5, stream(1, 0, "graph"))
    C = graph.metropolis_weights(net)
    ptr, idx, w, eid = C.csr
    dense = np.zeros((12, 12))
    for i in range(12):
        for q in range(ptr[i], ptr[i + 1]):
            dense[i, idx[q]] = w[q]
            assert tuple(sorted((i, idx[q]))) == net.edges[eid[q]]
    off = C.entries - np.diag(np.diag(C.entries))
    np.testing.assert_array_equal(dense, off)


def test_edgelist_round_trip_and_errors():
    net = graph.random_geometric_graph(10, 0.6, stream(2, 0, "graph"))
    buf = io.StringIO()
    graph.write_edgelist(net, buf)
    back = graph.read_edgelist(io.StringIO(buf.getvalue()))
    assert back == net
    with pytest.raises(graph.GraphError, match="header announces"):
        graph.read_edgelist(io.StringIO("3 5\n0 1\n1 2\n"))
    with pytest.raises(graph.GraphError, match="malformed"):
        graph.read_edgelist(io.StringIO("3 2\n0 x\n1 2\n"))


@pytest.mark.parametrize("n", [2, 4])
def test_full_radius_gives_complete_graph(n):
    net = graph.random_geometric_graph(n, math.sqrt(2.0), stream(0, 0, "graph"))
    assert net == graph.complete_graph(n)


@pytest.mark.parametrize("seed", range(10))
def test_rgg_edge_count_near_target(seed):
    r = graph.radius_for_edge_count(50, 214)
    net = graph.random_geometric_graph(50, r, stream(seed, 0, "graph"))
    assert abs(net.m - 214) <= 0.3 * 214


@pytest.mark.parametrize("net, expected", [
    (graph.complete_graph(2), np.full((2, 2), 0.5)),
    (graph.complete_graph(3), np.full((3, 3), 1 / 3)),
])
def test_metropolis_small_cases(net, expected):
    np.testing.assert_allclose(graph.metropolis_weights(net).entries, expected, atol=1e-15)


def test_positive_definite_shift_on_path():
    C = graph.metropolis_weights(graph.path_graph(3))
    np.testing.assert_allclose(np.sort(C.eigenvalues), [0, 2 / 3, 1], atol=1e-12)
    S = graph.ensure_positive_definite(C, 0.1)
    np.testing.assert_allclose(np.sort(S.eigenvalues), [0.55, 0.85, 1.0], atol=1e-12)
    assert np.all(np.diag(S.entries) >= 0.55)
    again = graph.ensure_positive_definite(S, 0.1)
    assert again.lambdaN > 0.1


@pytest.mark.parametrize("net, eigs", [
    (graph.complete_graph(2), [0.0, 2.0]),
    (graph.complete_graph(4), [0.0, 4.0, 4.0, 4.0]),
])
def test_laplacian_spectra_by_hand(net, eigs):
    spec = graph.spectral_quantities(graph.metropolis_weights(net))
    np.testing.assert_allclose(spec.laplacian_eigs, eigs, atol=1e-12)


@given(seed=st.integers(0, 1000), frac=st.floats(0.05, 0.95))
def test_equal_weights_lambda2(seed, frac):
    net = graph.random_geometric_graph(8, 0.6, stream(seed, 0, "graph"))
    c0 = frac / net.degrees.max()
    spec = graph.spectral_quantities(graph.equal_weights(net, c0), c0)
    assert spec.lambda2_C == pytest.approx(1 - c0 * spec.lambda2_L, abs=1e-12)
