"""Undirected simple graphs in CSR form and the combinatorial Laplacian."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DataError, UsageError

#: Largest node count for which operators may be materialized densely.
DENSE_THRESHOLD = 4096


def _frozen(a, dtype=np.int64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph.

    Each undirected edge is stored in both directions, so ``col_indices`` has
    length ``2 * edge_count``. Neighbour lists are strictly increasing.
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(self.row_offsets))
        object.__setattr__(self, "col_indices", _frozen(self.col_indices))
        if self.row_offsets.shape != (self.n + 1,):
            raise DataError("row_offsets must have length n + 1")

    @classmethod
    def from_edges(cls, n, edges) -> "Graph":
        """Build a graph from an iterable of ``(u, v)`` pairs.

        Duplicates (in either orientation) and self-loops are dropped.
        """
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise DataError(f"edge endpoint outside [0, {n})")
        e = e[e[:, 0] != e[:, 1]]
        both = np.concatenate([e, e[:, ::-1]])
        if both.size:
            both = np.unique(both, axis=0)
        counts = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        cols = both[:, 1] if both.size else np.zeros(0, dtype=np.int64)
        return cls(int(n), offsets, cols)

    @classmethod
    def from_scipy(cls, adj) -> "Graph":
        adj = sp.coo_matrix(adj)
        if adj.shape[0] != adj.shape[1]:
            raise DataError("adjacency must be square")
        return cls.from_edges(adj.shape[0], np.column_stack([adj.row, adj.col]))

    @property
    def edge_count(self) -> int:
        return len(self.col_indices) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.diff(self.row_offsets)
        d.setflags(write=False)
        return d

    @cached_property
    def row_ids(self) -> np.ndarray:
        """Source node of every stored directed edge (aligned with col_indices)."""
        r = np.repeat(np.arange(self.n), self.degrees)
        r.setflags(write=False)
        return r

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def edges(self) -> np.ndarray:
        """Undirected edges as an ``(|E|, 2)`` array with ``u < v``, sorted."""
        r, c = self.row_ids, self.col_indices
        keep = r < c
        return np.column_stack([r[keep], c[keep]])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.col_indices), dtype=np.int64)
        return sp.csr_matrix((data, self.col_indices, self.row_offsets), shape=(self.n, self.n))

    def add_edges(self, edges) -> "Graph":
        """Return a new graph with the given undirected edges added."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        return Graph.from_edges(self.n, np.concatenate([self.edges(), e]))

    def check_invariants(self) -> None:
        """Raise DataError if the CSR structure is not a valid simple undirected graph."""
        ro, ci = self.row_offsets, self.col_indices
        if ro[0] != 0 or ro[-1] != len(ci) or np.any(np.diff(ro) < 0):
            raise DataError("invalid row offsets")
        if len(ci) % 2:
            raise DataError("odd number of directed entries")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n):
            raise DataError("column index out of range")
        r = self.row_ids
        if np.any(r == ci):
            raise DataError("self-loop present")
        same_row = r[1:] == r[:-1]
        if np.any(ci[1:][same_row] <= ci[:-1][same_row]):
            raise DataError("neighbour lists not strictly increasing")
        fwd = r * self.n + ci
        bwd = np.sort(ci * self.n + r)
        if not np.array_equal(fwd, bwd):
            raise DataError("adjacency is not symmetric")
        if self.degrees.sum() != 2 * self.edge_count:
            raise DataError("degree sum mismatch")


# -- I/O ---------------------------------------------------------------------

_HEADER = re.compile(r"#\s*n=(\d+)\b")

def load_edge_list(text: str) -> Graph:
    """Parse an edge-list document: one ``u v`` pair per line, ``#`` comments.

    A ``# n=<count>`` comment (as written by ``format_edge_list``) fixes the
    node count so trailing isolated nodes survive a round trip.
    """
    pairs = []
    declared = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m:
                declared = max(declared, int(m.group(1)))
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"line {lineno}: non-integer node id in {raw!r}") from None
        if u < 0 or v < 0:
            raise DataError(f"line {lineno}: negative node id")
        pairs.append((u, v))
    n = max(max((max(p) for p in pairs), default=-1) + 1, declared)
    return Graph.from_edges(n, pairs)


def read_edge_list(path) -> Graph:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return load_edge_list(text)


def format_edge_list(g: Graph) -> str:
    lines = [f"# n={g.n} edges={g.edge_count}"]
    lines += [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(g))


# -- traversal ---------------------------------------------------------------

def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable nodes get -1."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    ro, ci = g.row_offsets, g.col_indices
    while queue:
        u = queue.popleft()
        for v in ci[ro[u]:ro[u + 1]]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_connected(g: Graph) -> bool:
    if g.n < 1:
        raise UsageError("graph has no nodes")
    return bool(np.all(bfs_distances(g, 0) >= 0))


def require_connected(g: Graph) -> None:
    if not is_connected(g):
        raise DataError("graph is disconnected; route it through largest_component first")


def connected_components(g: Graph) -> np.ndarray:
    """Component label per node, labels numbered by smallest contained node id."""
    labels = np.full(g.n, -1, dtype=np.int64)
    current = 0
    for s in range(g.n):
        if labels[s] < 0:
            labels[bfs_distances(g, s) >= 0] = current
            current += 1
    return labels


def induced_subgraph(g: Graph, nodes) -> tuple[Graph, dict[int, int]]:
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    mapping = {int(old): new for new, old in enumerate(nodes)}
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges()
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    return Graph.from_edges(len(nodes), remap[e[keep]]), mapping


def largest_component(g: Graph) -> tuple[Graph, dict[int, int]]:
    """Induced subgraph on the largest component and the old-to-new id map.

    Ties go to the component containing the smallest node id.
    """
    labels = connected_components(g)
    sizes = np.bincount(labels)
    best = int(np.argmax(sizes))  # component labels follow smallest node id
    return induced_subgraph(g, np.flatnonzero(labels == best))


# -- operators ---------------------------------------------------------------

class LaplacianOperator:
    """Matrix-free ``x -> shift*x + scale * diag(left) L diag(right) x``.

    ``L = D - A`` is applied straight from the CSR arrays. Every member of the
    Laplacian family used in this package (combinatorial, parameterized,
    parameterized adjacency) is an instance with different diagonals.
    """

    def __init__(self, g: Graph, left=None, right=None, scale=1.0, shift=0.0):
        self.graph = g
        self.left = None if left is None else np.asarray(left, dtype=float)
        self.right = None if right is None else np.asarray(right, dtype=float)
        self.scale = scale
        self.shift = shift
        self.shape = (g.n, g.n)
        self.dtype = np.dtype(float)

    def _lap(self, x):
        d = self.graph.degrees
        dx = d * x if x.ndim == 1 else d[:, None] * x
        return dx - self.graph.adjacency @ x

    def _diag(self, v, x):
        if v is None:
            return x
        return v * x if x.ndim == 1 else v[:, None] * x

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.graph.n:
            raise UsageError(f"operand has {x.shape[0]} rows, operator is {self.shape}")
        y = self._diag(self.left, self._lap(self._diag(self.right, x)))
        y = self.scale * y if self.scale != 1 else y
        if self.shift:
            y = y + self.shift * x
        return y

    __matmul__ = matvec
    matmat = matvec

    def tosparse(self) -> sp.csr_matrix:
        g = self.graph
        lap = sp.diags(g.degrees.astype(float)) - g.adjacency.astype(float)
        left = sp.diags(self.left) if self.left is not None else sp.identity(g.n)
        right = sp.diags(self.right) if self.right is not None else sp.identity(g.n)
        m = self.scale * (left @ lap @ right)
        if self.shift:
            m = m + self.shift * sp.identity(g.n)
        return sp.csr_matrix(m)

    def toarray(self) -> np.ndarray:
        if self.graph.n > DENSE_THRESHOLD:
            raise UsageError(f"dense materialization limited to n <= {DENSE_THRESHOLD}")
        g = self.graph
        lap = np.diag(g.degrees).astype(float) - g.adjacency.toarray()
        if self.left is not None:
            lap = self.left[:, None] * lap
        if self.right is not None:
            lap = lap * self.right[None, :]
        m = self.scale * lap
        if self.shift:
            m = m + self.shift * np.eye(g.n)
        return m

    def aslinearoperator(self):
        from scipy.sparse.linalg import LinearOperator
        return LinearOperator(self.shape, matvec=self.matvec, matmat=self.matvec, dtype=float)


def combinatorial_laplacian(g: Graph) -> LaplacianOperator:
    """Operator for ``L = D - A``; keeps integer arithmetic for integer inputs."""
    return LaplacianOperator(g, scale=1, shift=0)


def random_walk_laplacian(g: Graph) -> np.ndarray:
    """Dense ``D^{-1} L``; reference for the parameterized family."""
    if np.any(g.degrees == 0):
        raise DataError("isolated node: random-walk Laplacian undefined")
    lap = combinatorial_laplacian(g).toarray()
    return lap / g.degrees[:, None]


def symmetric_laplacian(g: Graph) -> np.ndarray:
    """Dense ``D^{-1/2} L D^{-1/2}``."""
    if np.any(g.degrees == 0):
        raise DataError("isolated node: symmetric Laplacian undefined")
    s = 1.0 / np.sqrt(g.degrees)
    return s[:, None] * combinatorial_laplacian(g).toarray() * s[None, :]


# -- small constructors ------------------------------------------------------

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(leaves: int) -> Graph:
    """Star with hub 0 and leaves 1..leaves."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def erdos_renyi(n: int, p: float, seed=None) -> Graph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, np.column_stack([iu[keep], ju[keep]]))


def random_connected_graph(n: int, p: float, seed=None, max_degree: int | None = None) -> Graph:
    """Random spanning tree plus Erdős–Rényi extras; always connected.

    With ``max_degree`` set, extra edges that would exceed it are skipped
    (the tree itself is built so every node has degree at most 3).
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    deg = np.zeros(n, dtype=np.int64)
    edges = []
    for k in range(1, n):
        # attach to an earlier node with spare tree capacity
        cands = order[:k]
        if max_degree is not None:
            cands = cands[deg[cands] < min(max_degree, 3)]
        u = cands[rng.integers(len(cands))]
        v = order[k]
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    present = {(min(a, b), max(a, b)) for a, b in edges}
    for u, v in zip(iu[keep], ju[keep]):
        if (u, v) in present:
            continue
        if max_degree is not None and (deg[u] >= max_degree or deg[v] >= max_degree):
            continue
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    return Graph.from_edges(n, edges)
