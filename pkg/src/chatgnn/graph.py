"""Compressed sparse row graphs and the per-arc views used by message passing.

Undirected graphs store every edge as two arcs, so one CSR structure
serves both directions. Self-loops are dropped and parallel edges are
merged at construction time; col_idx is sorted within each row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphIndexError


@dataclass(eq=False)
class Graph:
    num_nodes: int
    row_ptr: np.ndarray   # int64, len num_nodes + 1
    col_idx: np.ndarray   # int64, len num_arcs, sorted within each row
    degrees: np.ndarray   # int64, degrees[v] == row_ptr[v+1] - row_ptr[v]
    directed: bool

    @property
    def num_arcs(self) -> int:
        return int(self.col_idx.shape[0])

    @property
    def num_edges(self) -> int:
        """Undirected edge count; equals num_arcs for directed graphs."""
        return self.num_arcs if self.directed else self.num_arcs // 2

    def in_degrees(self) -> np.ndarray:
        """Number of arcs arriving at each node; equals degrees when undirected."""
        return np.bincount(self.col_idx, minlength=self.num_nodes).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        if not 0 <= v < self.num_nodes:
            raise GraphIndexError(f"node {v} out of range [0, {self.num_nodes})")
        return self.col_idx[self.row_ptr[v]:self.row_ptr[v + 1]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and self.directed == other.directed
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_idx, other.col_idx))


@dataclass
class EdgeArrays:
    """Flat arc view: arc e carries a message src[e] -> dst[e].

    norm[e] = 1 / sqrt(outdeg(src) * indeg(dst)) over the graph being
    aggregated; for undirected graphs both factors are the plain node
    degrees. Arcs never touch a node whose relevant degree is zero, so
    the entries are finite and lie in (0, 1].
    """

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    norm: np.ndarray
    norm_col: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.norm_col = np.ascontiguousarray(self.norm[:, None])

    @property
    def num_arcs(self) -> int:
        return int(self.src.shape[0])


def build_graph(num_nodes: int, edges, directed: bool = False) -> Graph:
    """CSR graph from an iterable of (u, v) pairs.

    Self-loops are dropped, duplicates merged; when undirected the edge
    set is symmetrized. Endpoints outside [0, num_nodes) raise.
    """
    if num_nodes < 0:
        raise ValueError(f"num_nodes must be >= 0, got {num_nodes}")
    pairs = np.array([(int(u), int(v)) for u, v in edges], dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        if pairs.min() < 0 or pairs.max() >= num_nodes:
            bad = pairs.flatten()
            bad = bad[(bad < 0) | (bad >= num_nodes)][0]
            raise GraphIndexError(f"edge endpoint {bad} out of range [0, {num_nodes})")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        if not directed and pairs.size:
            pairs = np.vstack([pairs, pairs[:, ::-1]])
        if pairs.size:
            pairs = np.unique(pairs, axis=0)
    src = pairs[:, 0] if pairs.size else np.zeros(0, dtype=np.int64)
    dst = pairs[:, 1] if pairs.size else np.zeros(0, dtype=np.int64)
    degrees = np.bincount(src, minlength=num_nodes).astype(np.int64)
    row_ptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(degrees, out=row_ptr[1:])
    return Graph(num_nodes, row_ptr, dst.astype(np.int64), degrees, directed)


def edge_arrays(g: Graph) -> EdgeArrays:
    """Flatten a CSR graph into parallel (src, dst, norm) arc arrays."""
    src = np.repeat(np.arange(g.num_nodes, dtype=np.int64), g.degrees)
    dst = g.col_idx
    out_deg = g.degrees
    in_deg = out_deg if not g.directed else g.in_degrees()
    norm = np.zeros(src.shape[0], dtype=np.float64)
    if src.size:
        norm = 1.0 / np.sqrt(out_deg[src].astype(np.float64) * in_deg[dst])
    return EdgeArrays(g.num_nodes, src, dst, norm)


def grid_graph(rows: int, cols: int) -> Graph:
    """Undirected 4-neighbor lattice with rows*cols nodes."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid_graph needs rows, cols >= 1, got {rows}x{cols}")
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1))
            if i + 1 < rows:
                edges.append((v, v + cols))
    return build_graph(rows * cols, edges, directed=False)


def reverse(g: Graph) -> Graph:
    """Directed graph with every arc flipped. Undirected input is an error."""
    if not g.directed:
        raise ValueError("reverse is only defined for directed graphs")
    src = np.repeat(np.arange(g.num_nodes, dtype=np.int64), g.degrees)
    flipped = np.stack([g.col_idx, src], axis=1)
    return build_graph(g.num_nodes, flipped, directed=True)
