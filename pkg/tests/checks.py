"""Dataset-wide alignment checks shared by the acceptance and synthetic suites."""

import numpy as np

from avcn.alignment import (
    affinity_matrix,
    aligned_grids_per_depth,
    build_grid,
    correspondence_matrix,
)
from avcn.graphs import one_hot_features


def check_alignment_invariants(ds, reps, prototypes, shape, permutations=10, seed=0):
    rng = np.random.default_rng(seed)
    for p, g in enumerate(ds.graphs):
        F = one_hot_features(g, ds.label_alphabet)
        R = reps.vectors[p]
        for K, proto in enumerate(prototypes, 1):
            C = correspondence_matrix(affinity_matrix(R[:, :K], proto))
            assert np.array_equal(C.sum(axis=1), np.ones(g.vertex_count))
        for XK in aligned_grids_per_depth(F, R, prototypes):
            assert np.max(np.abs(XK.sum(axis=0) - F.sum(axis=0))) <= 1e-9
        X = build_grid(g, F, prototypes, R)
        assert X.shape == shape
        for _ in range(permutations):
            perm = rng.permutation(g.vertex_count)
            assert np.array_equal(build_grid(None, F[perm], prototypes, R[perm]), X)


def check_transitivity(reps, prototypes):
    for K, proto in enumerate(prototypes, 1):
        C = correspondence_matrix(affinity_matrix(reps.stacked(K), proto))
        # induced by a function: exactly one 1 per row
        assert np.array_equal(C.sum(axis=1), np.ones(C.shape[0]))
        assign = C.argmax(axis=1)
        same = assign[:, None] == assign[None, :]
        assert same.diagonal().all()
        assert np.array_equal(same, same.T)
        # transitive iff distinct rows of the relation are pairwise disjoint
        U = np.unique(same, axis=0).astype(np.float64)
        assert np.array_equal(U @ U.T, np.diag(U.sum(axis=1)))
        blocks = [np.flatnonzero(assign == j) for j in np.unique(assign)]
        assert sum(len(b) for b in blocks) == C.shape[0]
