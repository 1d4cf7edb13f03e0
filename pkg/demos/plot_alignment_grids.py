"""
Aligning vertices to prototypes
===============================

Vertices from every graph are clustered on their depth-based representations.
Each cluster centre becomes one row of a fixed-size grid, so graphs of any
size end up as matrices with a shared row order.
"""

import numpy as np

from avcn import DbRepresentationSet, build_grid, fit_prototypes, one_hot_features
from avcn.synthetic import make_dataset

ds = make_dataset(40, seed=1)
L, M = 4, 12
reps = DbRepresentationSet.compute(ds.graphs, L)
print(len(ds), "graphs,", reps.stacked(L).shape[0], "vertices")

###############################################################################
# One prototype set per depth. Prototypes are ordered by how central they are
# in their own similarity graph.

prototypes = [fit_prototypes(reps.stacked(K), M, K, seed=(0, K)) for K in range(1, L + 1)]
print("row order at depth 2:", prototypes[1].order)

###############################################################################
# Build the grid of the first graph. Each column still sums to the number of
# vertices carrying that label: alignment moves mass, it does not create it.

g = ds.graphs[0]
F = one_hot_features(g, ds.label_alphabet)
X = build_grid(g, F, prototypes, reps.vectors[0])
print("grid", X.shape)
print("label counts", F.sum(axis=0))
print("grid column sums", X.sum(axis=0))

###############################################################################
# Shuffling the vertex order changes nothing.

perm = np.random.default_rng(3).permutation(g.vertex_count)
Xp = build_grid(None, F[perm], prototypes, reps.vectors[0][perm])
print("identical after shuffling:", np.array_equal(X, Xp))
