"""Graph data model, TU-format ingestion and one-hot vertex features.

TU layout (all indices 1-based on disk)::

    {name}_A.txt               "i, j" per line, one line per directed edge
    {name}_graph_indicator.txt line n holds the graph id of node n
    {name}_graph_labels.txt    line g holds the class of graph g
    {name}_node_labels.txt     line n holds the integer label of node n (optional)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import MalformedDataset, MissingFile, UnknownLabel


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with discrete vertex labels.

    ``edges`` holds each edge once as ``(i, j)`` with ``i < j``.
    """

    vertex_count: int
    edges: frozenset
    vertex_labels: tuple
    graph_label: int = 0

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        if len(self.vertex_labels) != self.vertex_count:
            raise ValueError(
                f"{len(self.vertex_labels)} labels for {self.vertex_count} vertices"
            )
        for i, j in self.edges:
            if not (0 <= i < j < self.vertex_count):
                raise ValueError(f"bad edge ({i}, {j}) for {self.vertex_count} vertices")

    @classmethod
    def from_edges(cls, vertex_count, edges, vertex_labels=None, graph_label=0):
        """Build a graph from any iterable of vertex pairs.

        Both directions of an edge collapse to one undirected edge; self-loops
        are rejected. Labels default to all zeros.
        """
        norm = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            norm.add((a, b) if a < b else (b, a))
        if vertex_labels is None:
            vertex_labels = (0,) * vertex_count
        return cls(int(vertex_count), frozenset(norm), tuple(int(x) for x in vertex_labels), int(graph_label))

    @cached_property
    def neighbors(self) -> tuple:
        adj = [[] for _ in range(self.vertex_count)]
        for i, j in sorted(self.edges):
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        deg.flags.writeable = False
        return deg

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.vertex_count, self.vertex_count), dtype=np.int64)
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1
        return A

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel vertex ``v`` as ``perm[v]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.vertex_count)):
            raise ValueError("not a permutation of the vertex set")
        labels = [0] * self.vertex_count
        for v, lab in enumerate(self.vertex_labels):
            labels[perm[v]] = lab
        edges = [(perm[i], perm[j]) for i, j in self.edges]
        return Graph.from_edges(self.vertex_count, edges, labels, self.graph_label)


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: tuple
    num_classes: int
    label_alphabet: tuple
    class_values: tuple = field(default=())  # original class ids, indexed by 0-based class

    def __len__(self):
        return len(self.graphs)

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.graph_label for g in self.graphs], dtype=np.int64)


def vertex_degree(graph: Graph, v: int) -> int:
    if not 0 <= v < graph.vertex_count:
        raise IndexError(f"vertex {v} out of range for {graph.vertex_count} vertices")
    return int(graph.degrees[v])


def one_hot_features(graph: Graph, alphabet: Sequence[int]) -> np.ndarray:
    index = {lab: j for j, lab in enumerate(alphabet)}
    F = np.zeros((graph.vertex_count, len(index)), dtype=np.float64)
    for i, lab in enumerate(graph.vertex_labels):
        try:
            F[i, index[lab]] = 1.0
        except KeyError:
            raise UnknownLabel(f"vertex {i} has label {lab!r}, not in the alphabet") from None
    return F


def _read_ints(path: str) -> list:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise MalformedDataset(f"{path}:{lineno}: expected an integer, got {line!r}") from None
    return out


def _read_pairs(path: str) -> list:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise MalformedDataset(f"{path}:{lineno}: expected 'i, j', got {line!r}")
            try:
                out.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise MalformedDataset(f"{path}:{lineno}: non-integer node id in {line!r}") from None
    return out


def tu_paths(directory, name) -> dict:
    base = os.path.join(os.fspath(directory), name)
    return {
        "A": f"{base}_A.txt",
        "graph_indicator": f"{base}_graph_indicator.txt",
        "graph_labels": f"{base}_graph_labels.txt",
        "node_labels": f"{base}_node_labels.txt",
    }


def load_tu_dataset(directory, name: str) -> Dataset:
    """Read a TU benchmark dataset into 0-based :class:`Graph` objects.

    Without a node-label file every vertex is labelled by its degree.
    Class ids are remapped onto ``0..num_classes-1`` in ascending order
    of the original values.
    """
    paths = tu_paths(directory, name)
    for key in ("A", "graph_indicator", "graph_labels"):
        if not os.path.isfile(paths[key]):
            raise MissingFile(f"required file {paths[key]} not found")

    indicator = _read_ints(paths["graph_indicator"])
    graph_classes = _read_ints(paths["graph_labels"])
    pairs = _read_pairs(paths["A"])
    node_labels = None
    if os.path.isfile(paths["node_labels"]):
        node_labels = _read_ints(paths["node_labels"])
        if len(node_labels) != len(indicator):
            raise MalformedDataset(
                f"{len(indicator)} nodes in the graph indicator but "
                f"{len(node_labels)} node labels"
            )

    n_graphs = len(graph_classes)
    if not indicator:
        raise MalformedDataset("graph indicator is empty")
    if sorted(set(indicator)) != list(range(1, n_graphs + 1)):
        raise MalformedDataset(
            f"graph indicator must reference graphs 1..{n_graphs} (one line per graph label), "
            f"found ids {min(indicator)}..{max(indicator)} over {len(set(indicator))} graphs"
        )
    if any(b < a for a, b in zip(indicator, indicator[1:])):
        raise MalformedDataset("graph indicator is not sorted by graph id")

    # node n (0-based, global) -> (graph, local index)
    starts = {}
    local = np.empty(len(indicator), dtype=np.int64)
    counts = [0] * n_graphs
    for n, g in enumerate(indicator):
        gi = g - 1
        starts.setdefault(gi, n)
        local[n] = counts[gi]
        counts[gi] += 1

    edge_lists = [[] for _ in range(n_graphs)]
    n_nodes = len(indicator)
    for a, b in pairs:
        if not (1 <= a <= n_nodes and 1 <= b <= n_nodes):
            raise MalformedDataset(f"edge ({a}, {b}) references an unknown node (have {n_nodes})")
        ga, gb = indicator[a - 1], indicator[b - 1]
        if ga != gb:
            raise MalformedDataset(f"edge ({a}, {b}) joins graphs {ga} and {gb}")
        if a == b:
            continue
        edge_lists[ga - 1].append((int(local[a - 1]), int(local[b - 1])))

    class_values = tuple(sorted(set(graph_classes)))
    class_index = {c: i for i, c in enumerate(class_values)}

    graphs = []
    for gi in range(n_graphs):
        g = Graph.from_edges(counts[gi], edge_lists[gi], None, class_index[graph_classes[gi]])
        if node_labels is not None:
            s = starts[gi]
            labels = node_labels[s : s + counts[gi]]
        else:
            labels = [int(d) for d in g.degrees]
        graphs.append(Graph(g.vertex_count, g.edges, tuple(labels), g.graph_label))

    alphabet = tuple(sorted({lab for g in graphs for lab in g.vertex_labels}))
    return Dataset(name, tuple(graphs), len(class_values), alphabet, class_values)


def write_tu_dataset(dataset: Dataset, directory, name: str | None = None,
                     node_labels: bool = True) -> None:
    """Serialise ``dataset`` in TU layout, writing both directions of each edge."""
    name = name or dataset.name
    os.makedirs(directory, exist_ok=True)
    paths = tu_paths(directory, name)
    classes = dataset.class_values or tuple(range(dataset.num_classes))
    offset = 0
    with open(paths["A"], "w") as fa, open(paths["graph_indicator"], "w") as fi, \
            open(paths["graph_labels"], "w") as fg:
        nl = open(paths["node_labels"], "w") if node_labels else None
        try:
            for gid, g in enumerate(dataset.graphs, 1):
                for v in range(g.vertex_count):
                    fi.write(f"{gid}\n")
                    if nl:
                        nl.write(f"{g.vertex_labels[v]}\n")
                for i, j in sorted(g.edges):
                    fa.write(f"{i + offset + 1}, {j + offset + 1}\n")
                    fa.write(f"{j + offset + 1}, {i + offset + 1}\n")
                fg.write(f"{classes[g.graph_label]}\n")
                offset += g.vertex_count
        finally:
            if nl:
                nl.close()


def dataset_from_graphs(name: str, graphs: Iterable[Graph]) -> Dataset:
    graphs = tuple(graphs)
    classes = sorted({g.graph_label for g in graphs})
    if classes != list(range(len(classes))):
        raise MalformedDataset("graph labels must form a contiguous 0-based range")
    alphabet = tuple(sorted({lab for g in graphs for lab in g.vertex_labels}))
    return Dataset(name, graphs, len(classes), alphabet, tuple(classes))
