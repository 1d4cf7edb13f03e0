"""Small random labelled-graph datasets for demos and tests.

Class 0 graphs are ring systems (one or two cycles with pendant atoms),
class 1 graphs are trees. Vertex labels come from a 7-letter alphabet with
class-dependent frequencies, loosely imitating small molecule benchmarks.
"""

from __future__ import annotations

import numpy as np

from .graphs import Graph, dataset_from_graphs


def _ring_graph(rng, n):
    ring = int(rng.integers(5, 8))
    ring = min(ring, n)
    edges = [(i, (i + 1) % ring) for i in range(ring)] if ring >= 3 else [(0, 1)]
    v = ring
    if n - v >= 5 and rng.random() < 0.6:
        second = int(rng.integers(5, 7))
        second = min(second, n - v)
        base = int(rng.integers(ring))
        edges.append((base, v))
        for i in range(second - 1):
            edges.append((v + i, v + i + 1))
        edges.append((v + second - 1, v))
        v += second
    while v < n:
        edges.append((int(rng.integers(v)), v))
        v += 1
    return edges


def _tree_graph(rng, n):
    return [(int(rng.integers(max(0, v - 3), v)), v) for v in range(1, n)]


def make_dataset(n_graphs: int = 120, seed: int = 0, min_vertices: int = 10,
                 max_vertices: int = 28, name: str = "SYNTH"):
    rng = np.random.default_rng(seed)
    label_probs = {
        0: np.array([0.55, 0.15, 0.15, 0.05, 0.04, 0.03, 0.03]),
        1: np.array([0.40, 0.10, 0.30, 0.08, 0.06, 0.03, 0.03]),
    }
    graphs = []
    for p in range(n_graphs):
        cls = p % 2
        n = int(rng.integers(min_vertices, max_vertices + 1))
        edges = _ring_graph(rng, n) if cls == 0 else _tree_graph(rng, n)
        labels = rng.choice(7, size=n, p=label_probs[cls])
        graphs.append(Graph.from_edges(n, edges, labels, cls))
    return dataset_from_graphs(name, graphs)
