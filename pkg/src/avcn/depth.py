"""Depth-based vertex representations.

Component ``k`` of a vertex's representation is the Shannon entropy (nats)
of the degree-proportional distribution on the subgraph induced by every
vertex within ``k`` hops of it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidParameter
from .graphs import Graph


def bfs_distances(graph: Graph, root: int) -> np.ndarray:
    """Hop distance from ``root`` to every vertex, -1 where unreachable."""
    if not 0 <= root < graph.vertex_count:
        raise IndexError(f"root {root} out of range for {graph.vertex_count} vertices")
    dist = np.full(graph.vertex_count, -1, dtype=np.int64)
    dist[root] = 0
    queue = deque([root])
    nbrs = graph.neighbors
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def expansion_subgraph(graph: Graph, root: int, k: int) -> Graph:
    if k < 1:
        raise InvalidParameter(f"expansion depth must be >= 1, got {k}")
    dist = bfs_distances(graph, root)
    keep = np.flatnonzero((dist >= 0) & (dist <= k))
    new_index = {int(v): i for i, v in enumerate(keep)}
    edges = [(new_index[i], new_index[j]) for i, j in graph.edges
             if i in new_index and j in new_index]
    labels = [graph.vertex_labels[v] for v in keep]
    return Graph.from_edges(len(keep), edges, labels, graph.graph_label)


def degree_entropy(degrees) -> float:
    """Entropy of the distribution p_i = d_i / sum(d).

    Terms are summed in sorted order so the value depends only on the degree
    multiset, which keeps it bitwise stable under vertex relabelling.
    """
    d = np.sort(np.asarray(degrees, dtype=np.float64))
    if d.size == 0:
        raise EmptyInput("entropy of an empty subgraph")
    total = d.sum()
    if total == 0:
        return 0.0
    p = d[d > 0] / total
    return float(-(p * np.log(p)).sum())


def subgraph_entropy(subgraph: Graph) -> float:
    if subgraph.vertex_count == 0:
        raise EmptyInput("entropy of an empty subgraph")
    return degree_entropy(subgraph.degrees)


def db_representations(graph: Graph, K: int) -> np.ndarray:
    """``(vertex_count, K)`` array of expansion-subgraph entropies for k = 1..K."""
    if K < 1:
        raise InvalidParameter(f"K must be >= 1, got {K}")
    n = graph.vertex_count
    E = np.array(sorted(graph.edges), dtype=np.int64).reshape(-1, 2)
    ei, ej = E[:, 0], E[:, 1]
    out = np.zeros((n, K), dtype=np.float64)
    for v in range(n):
        dist = bfs_distances(graph, v)
        reach = int(dist.max())
        for k in range(1, K + 1):
            if k > reach and k > 1:
                # the ball stopped growing
                out[v, k - 1] = out[v, k - 2]
                continue
            mask = (dist >= 0) & (dist <= k)
            inside = mask[ei] & mask[ej]
            deg = (np.bincount(ei[inside], minlength=n)
                   + np.bincount(ej[inside], minlength=n))
            out[v, k - 1] = degree_entropy(deg[mask])
    return out


@dataclass(frozen=True)
class DbRepresentationSet:
    """Representations for every graph of a dataset, computed up to depth ``K``.

    The depth-``k`` representation is the first ``k`` columns of the depth-``K``
    one, so a single set serves every depth up to ``K``.
    """

    K: int
    vectors: tuple  # one (n_p, K) array per graph

    @classmethod
    def compute(cls, graphs, K: int) -> "DbRepresentationSet":
        return cls(K, tuple(db_representations(g, K) for g in graphs))

    def at_depth(self, k: int) -> list:
        if not 1 <= k <= self.K:
            raise InvalidParameter(f"depth {k} outside 1..{self.K}")
        return [np.ascontiguousarray(r[:, :k]) for r in self.vectors]

    def stacked(self, k: int) -> np.ndarray:
        """All vertices of all graphs, in (graph, vertex) order."""
        return np.concatenate(self.at_depth(k), axis=0)
