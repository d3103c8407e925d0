"""Shortest-path helpers on slot-indexed CSR adjacency.

Vertex-weighted paths pay a vertex's weight once on entry, and the start
vertex pays up front; this is realized by directing every undirected edge
u-v both ways with cost weight[v], plus a super-source whose edge into a
source s costs weight[s].  A vertex that is both source and sink yields the
one-vertex path of cost weight[s].
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

__all__ = ["VertexWeightedGraph", "min_edge_weight_path", "reachable_from"]


class VertexWeightedGraph:
    """Reusable directed structure for repeated vertex-weighted queries with
    changing weights but fixed adjacency and source set."""

    def __init__(self, indptr: np.ndarray, indices: np.ndarray,
                 sources: np.ndarray):
        n = indptr.size - 1
        self.n = n
        deg = np.diff(indptr)
        tails = np.repeat(np.arange(n), deg)
        heads = indices.astype(np.int64)
        src = np.asarray(sources, dtype=np.int64)
        self._rows = np.concatenate([tails, np.full(src.size, n, dtype=np.int64)])
        self._cols = np.concatenate([heads, src])
        order = np.lexsort((self._cols, self._rows))
        self._rows = self._rows[order]
        self._cols = self._cols[order]
        m_indptr = np.zeros(n + 2, dtype=np.int64)
        np.add.at(m_indptr, self._rows + 1, 1)
        np.cumsum(m_indptr, out=m_indptr)
        self._indptr = m_indptr
        self._mat = sparse.csr_matrix(
            (np.zeros(self._cols.size), self._cols, m_indptr), shape=(n + 1, n + 1))

    def min_path(self, weights: np.ndarray, sinks: np.ndarray):
        """Cheapest source-to-sink path under the given vertex weights.

        Returns (value, path-as-slot-array) or (inf, None) when no sink is
        reachable.
        """
        sinks = np.asarray(sinks, dtype=np.int64)
        if sinks.size == 0 or self._indptr[-1] == 0:
            return np.inf, None
        self._mat.data[:] = weights[self._cols]
        dist, pred = dijkstra(self._mat, directed=True, indices=self.n,
                              return_predecessors=True)
        vals = dist[sinks]
        best = int(np.argmin(vals))
        if not np.isfinite(vals[best]):
            return np.inf, None
        node = int(sinks[best])
        path = [node]
        while pred[node] >= 0 and pred[node] != self.n:
            node = int(pred[node])
            path.append(node)
        path.reverse()
        return float(vals[best]), np.array(path, dtype=np.int64)


def min_edge_weight_path(indptr: np.ndarray, indices: np.ndarray,
                         edge_costs: np.ndarray, sources: np.ndarray,
                         sinks: np.ndarray):
    """Cheapest path under nonnegative per-edge costs from any source to any
    sink.  `edge_costs` is aligned with `indices` (symmetric CSR)."""
    n = indptr.size - 1
    sources = np.asarray(sources, dtype=np.int64)
    sinks = np.asarray(sinks, dtype=np.int64)
    if sources.size == 0 or sinks.size == 0:
        return np.inf, None
    deg = np.diff(indptr)
    tails = np.repeat(np.arange(n), deg)
    rows = np.concatenate([tails, np.full(sources.size, n, dtype=np.int64)])
    cols = np.concatenate([indices.astype(np.int64), sources])
    data = np.concatenate([edge_costs.astype(np.float64),
                           np.zeros(sources.size)])
    mat = sparse.csr_matrix((data, (rows, cols)), shape=(n + 1, n + 1))
    dist, pred = dijkstra(mat, directed=True, indices=n,
                          return_predecessors=True)
    vals = dist[sinks]
    best = int(np.argmin(vals))
    if not np.isfinite(vals[best]):
        return np.inf, None
    node = int(sinks[best])
    path = [node]
    while pred[node] >= 0 and pred[node] != n:
        node = int(pred[node])
        path.append(node)
    path.reverse()
    return float(vals[best]), np.array(path, dtype=np.int64)


def reachable_from(indptr: np.ndarray, indices: np.ndarray,
                   sources: np.ndarray) -> np.ndarray:
    """Boolean mask of vertices reachable from the source set (undirected)."""
    n = indptr.size - 1
    seen = np.zeros(n, dtype=bool)
    stack = [int(s) for s in sources]
    seen[list(stack)] = True
    while stack:
        u = stack.pop()
        for v in indices[indptr[u]:indptr[u + 1]]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return seen
