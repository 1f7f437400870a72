"""CSR graph construction, degree normalization, grids, and reversal."""

import numpy as np
import pytest

from chatgnn.errors import GraphIndexError
from chatgnn.graph import build_graph, edge_arrays, grid_graph, reverse


def test_single_edge_symmetrized():
    g = build_graph(2, [(0, 1)])
    assert not g.directed
    assert g.num_arcs == 2
    assert g.num_edges == 1
    assert np.array_equal(g.degrees, [1, 1])
    assert np.array_equal(g.neighbors(0), [1])
    assert np.array_equal(g.neighbors(1), [0])


def test_duplicate_and_self_loop_edges_dropped():
    g = build_graph(3, [(0, 1), (1, 0), (0, 1), (2, 2)])
    assert g.num_edges == 1
    assert g.degrees[2] == 0
    assert g.neighbors(2).size == 0


def test_path_graph_norms():
    # 0 - 1 - 2: arc 0->1 weight 1/sqrt(d0*d1) = 1/sqrt(2)
    g = build_graph(3, [(0, 1), (1, 2)])
    e = edge_arrays(g)
    pairs = {(int(s), int(d)): float(n) for s, d, n in zip(e.src, e.dst, e.norm)}
    assert pairs[(0, 1)] == pytest.approx(1.0 / np.sqrt(2.0))
    assert pairs[(1, 0)] == pytest.approx(1.0 / np.sqrt(2.0))
    assert pairs[(1, 2)] == pytest.approx(1.0 / np.sqrt(2.0))
    assert e.norm_col.shape == (g.num_arcs, 1)


def test_neighbors_sorted_and_bounds_checked():
    g = build_graph(4, [(2, 0), (2, 3), (2, 1)])
    assert np.array_equal(g.neighbors(2), [0, 1, 3])
    with pytest.raises(GraphIndexError):
        g.neighbors(4)
    with pytest.raises(GraphIndexError):
        g.neighbors(-1)


def test_endpoint_validation():
    with pytest.raises(GraphIndexError):
        build_graph(2, [(0, 2)])
    with pytest.raises(GraphIndexError):
        build_graph(2, [(-1, 0)])


def test_directed_graph_keeps_orientation():
    g = build_graph(3, [(0, 1), (1, 2)], directed=True)
    assert g.directed
    assert g.num_arcs == 2
    assert np.array_equal(g.neighbors(0), [1])
    assert g.neighbors(1).size == 1
    assert g.neighbors(2).size == 0
    ind = g.in_degrees()
    assert np.array_equal(ind, [0, 1, 1])


def test_directed_norms_use_out_and_in_degree():
    # arcs 0->2 and 1->2: indeg(2)=2, outdeg(0)=outdeg(1)=1
    g = build_graph(3, [(0, 2), (1, 2)], directed=True)
    e = edge_arrays(g)
    assert np.allclose(e.norm, 1.0 / np.sqrt(2.0))


def test_reverse_directed():
    g = build_graph(3, [(0, 1), (0, 2)], directed=True)
    r = reverse(g)
    assert np.array_equal(r.neighbors(1), [0])
    assert np.array_equal(r.neighbors(2), [0])
    assert r.neighbors(0).size == 0
    with pytest.raises(ValueError):
        reverse(build_graph(2, [(0, 1)]))


def test_grid_graph_four_neighbors():
    g = grid_graph(3, 4)
    assert g.num_nodes == 12
    # interior node (1,1) -> id 5 has 4 neighbors, corner 0 has 2
    assert g.degrees[5] == 4
    assert g.degrees[0] == 2
    assert np.array_equal(g.neighbors(0), [1, 4])
    # total arcs: horizontal 3*3 + vertical 2*4 edges, times 2
    assert g.num_arcs == 2 * (3 * 3 + 2 * 4)


def test_grid_graph_rejects_bad_shape():
    with pytest.raises(ValueError):
        grid_graph(0, 5)


def test_graph_equality_on_arrays():
    a = build_graph(3, [(0, 1), (1, 2)])
    b = build_graph(3, [(1, 2), (0, 1)])
    assert a == b
    c = build_graph(3, [(0, 1)])
    assert a != c


def test_csr_row_ptr_consistency():
    g = build_graph(5, [(0, 1), (0, 2), (3, 4), (2, 4)])
    assert g.row_ptr[0] == 0
    assert g.row_ptr[-1] == g.num_arcs
    assert np.array_equal(np.diff(g.row_ptr), g.degrees)
    assert g.col_idx.size == g.num_arcs
