import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.sparse import csgraph

from paramlap.errors import DataError, UsageError
from paramlap.graph import (DENSE_THRESHOLD, Graph, LaplacianOperator, bfs_distances,
                            combinatorial_laplacian, complete_graph, connected_components,
                            format_edge_list, induced_subgraph, is_connected, largest_component,
                            load_edge_list, path_graph, random_connected_graph, random_walk_laplacian,
                            read_edge_list, require_connected, star_graph, symmetric_laplacian,
                            write_edge_list)

edge_lists = st.integers(1, 25).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                             max_size=60)))


@given(edge_lists)
@settings(max_examples=80, deadline=None)
def test_from_edges_matches_dense_symmetrization(case):
    n, edges = case
    g = Graph.from_edges(n, edges)
    g.check_invariants()
    dense = np.zeros((n, n), dtype=int)
    for u, v in edges:
        if u != v:
            dense[u, v] = dense[v, u] = 1
    assert np.array_equal(g.adjacency.toarray(), dense)
    assert np.array_equal(g.degrees, dense.sum(axis=1))
    assert g.edge_count == dense.sum() // 2


@given(edge_lists)
@settings(max_examples=50, deadline=None)
def test_edge_list_text_roundtrip(case):
    n, edges = case
    g = Graph.from_edges(n, edges)
    back = load_edge_list(format_edge_list(g))
    # trailing isolated nodes survive through the header
    assert back.n == g.n
    assert np.array_equal(back.col_indices, g.col_indices)


def test_duplicates_and_loops_dropped():
    g = Graph.from_edges(3, [(0, 1), (1, 0), (0, 1), (2, 2)])
    assert g.edge_count == 1
    assert g.degrees.tolist() == [1, 1, 0]


def test_out_of_range_edge():
    with pytest.raises(DataError):
        Graph.from_edges(2, [(0, 2)])


def test_arrays_read_only():
    g = path_graph(3)
    with pytest.raises(ValueError):
        g.col_indices[0] = 2


def test_has_edge_and_neighbors(p4):
    assert p4.has_edge(1, 2) and p4.has_edge(2, 1)
    assert not p4.has_edge(0, 3)
    assert p4.neighbors(1).tolist() == [0, 2]
    assert p4.edges().tolist() == [[0, 1], [1, 2], [2, 3]]


def test_check_invariants_rejects_asymmetric():
    g = Graph(2, [0, 1, 1], [1])
    with pytest.raises(DataError):
        g.check_invariants()


def test_add_edges(p4):
    g = p4.add_edges([(0, 3), (0, 1)])
    g.check_invariants()
    assert g.edge_count == 4
    assert p4.edge_count == 3


def test_from_scipy():
    a = sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]))
    assert np.array_equal(Graph.from_scipy(a).adjacency.toarray(), a.toarray())


# -- I/O ---------------------------------------------------------------------

def test_load_edge_list_comments_and_blanks():
    g = load_edge_list("# a comment\n\n0 1\n1\t2  \n# trailing\n")
    assert g.n == 3 and g.edge_count == 2


@pytest.mark.parametrize("text, line", [("0 1\nx 2\n", 2), ("0 1 2\n", 1), ("0 -1\n", 1), ("3\n", 1)])
def test_load_edge_list_malformed(text, line):
    with pytest.raises(DataError, match=f"line {line}"):
        load_edge_list(text)


def test_file_roundtrip(tmp_path):
    g = random_connected_graph(30, 0.1, seed=3)
    path = tmp_path / "g.edges"
    write_edge_list(g, path)
    back = read_edge_list(path)
    assert np.array_equal(back.col_indices, g.col_indices)


def test_read_missing_file(tmp_path):
    with pytest.raises(DataError):
        read_edge_list(tmp_path / "nope.edges")


# -- traversal ---------------------------------------------------------------

@given(edge_lists)
@settings(max_examples=50, deadline=None)
def test_bfs_matches_scipy_shortest_paths(case):
    n, edges = case
    g = Graph.from_edges(n, edges)
    ref = csgraph.shortest_path(g.adjacency, unweighted=True, directed=False)
    for s in range(min(n, 5)):
        got = bfs_distances(g, s).astype(float)
        expect = ref[s]
        reach = np.isfinite(expect)
        assert np.array_equal(got[reach], expect[reach])
        assert np.all(got[~reach] < 0)


@given(edge_lists)
@settings(max_examples=50, deadline=None)
def test_components_match_scipy(case):
    n, edges = case
    g = Graph.from_edges(n, edges)
    k, ref = csgraph.connected_components(g.adjacency, directed=False)
    ours = connected_components(g)
    assert len(np.unique(ours)) == k
    # same partition: labels correspond one-to-one
    pairs = set(zip(ours.tolist(), ref.tolist()))
    assert len(pairs) == k
    assert is_connected(g) == (k == 1)


def test_is_connected_empty_graph():
    with pytest.raises(UsageError):
        is_connected(Graph.from_edges(0, []))


def test_require_connected():
    with pytest.raises(DataError):
        require_connected(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_largest_component_and_mapping():
    g = Graph.from_edges(7, [(0, 1), (2, 3), (3, 4), (4, 2), (5, 6)])
    sub, mapping = largest_component(g)
    assert sub.n == 3 and sub.edge_count == 3
    assert mapping == {2: 0, 3: 1, 4: 2}
    sub2, _ = induced_subgraph(g, [0, 1, 5])
    assert sub2.edge_count == 1


def test_random_connected_graph_properties():
    for seed in range(10):
        g = random_connected_graph(50, 0.2, seed=seed, max_degree=10)
        g.check_invariants()
        assert is_connected(g)
        assert g.degrees.max() <= 10


def test_constructors():
    assert complete_graph(5).edge_count == 10
    s = star_graph(4)
    assert s.degrees.tolist() == [4, 1, 1, 1, 1]
    assert path_graph(5).edge_count == 4


# -- Laplacian operator ------------------------------------------------------

def test_operator_matches_dense():
    g = random_connected_graph(40, 0.1, seed=1)
    rng = np.random.default_rng(0)
    left, right = rng.random(40) + 0.5, rng.random(40) + 0.5
    op = LaplacianOperator(g, left, right, scale=0.7, shift=0.3)
    a = g.adjacency.toarray().astype(float)
    lap = np.diag(a.sum(1)) - a
    ref = 0.3 * np.eye(40) + 0.7 * np.diag(left) @ lap @ np.diag(right)
    x = rng.standard_normal(40)
    xs = rng.standard_normal((40, 3))
    assert np.allclose(op.matvec(x), ref @ x, atol=1e-13)
    assert np.allclose(op @ xs, ref @ xs, atol=1e-13)
    assert np.allclose(op.tosparse().toarray(), ref, atol=1e-14)
    assert np.allclose(op.toarray(), ref, atol=1e-14)
    assert np.allclose(op.aslinearoperator() @ x, ref @ x, atol=1e-13)


def test_operator_toarray_size_limit():
    g = Graph.from_edges(DENSE_THRESHOLD + 1, [])
    with pytest.raises(UsageError):
        combinatorial_laplacian(g).toarray()


def test_classical_laplacians(p3):
    assert np.allclose(random_walk_laplacian(p3), [[1, -1, 0], [-0.5, 1, -0.5], [0, -1, 1]])
    s = 1 / np.sqrt(2)
    assert np.allclose(symmetric_laplacian(p3), [[1, -s, 0], [-s, 1, -s], [0, -s, 1]])
