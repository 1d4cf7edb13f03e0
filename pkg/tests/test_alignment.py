import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from avcn.alignment import (
    PrototypeSet,
    affinity_matrix,
    aligned_feature_matrix,
    aligned_grids_per_depth,
    build_grid,
    correspondence_matrix,
    fit_prototypes,
    kmeans,
    prototype_degrees,
    prototype_order,
)
from avcn.errors import EmptyInput, InvalidParameter


def best_partition_objective(points, M):
    """Exhaustive search over all labelings into at most M clusters."""
    pts = np.asarray(points, dtype=float)
    best = math.inf
    for lab in itertools.product(range(M), repeat=len(pts)):
        lab = np.array(lab)
        obj = 0.0
        for j in range(M):
            c = pts[lab == j]
            if len(c):
                obj += ((c - c.mean(axis=0)) ** 2).sum()
        best = min(best, obj)
    return best


def naive_matmul(A, B):
    n, k = len(A), len(A[0])
    m = len(B[0])
    return [[sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)] for i in range(n)]


def test_kmeans_two_points():
    res = kmeans(np.array([[0.0, 0.0], [10.0, 10.0]]), 2, seed=0)
    got = sorted(map(tuple, res.centroids))
    assert got == [(0.0, 0.0), (10.0, 10.0)]
    assert res.objective == 0.0


def test_kmeans_1d_reaches_enumerated_optimum():
    pts = [0, 1, 2, 10, 11, 12]
    assert best_partition_objective(np.array(pts)[:, None], 2) == pytest.approx(4.0)
    for seed in range(10):
        res = kmeans(np.array(pts, dtype=float), 2, seed=seed)
        assert sorted(res.centroids.ravel()) == [1.0, 11.0]
        assert res.objective == pytest.approx(4.0, abs=1e-12)


def test_kmeans_single_cluster_is_mean():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(40, 3))
    res = kmeans(pts, 1, seed=1)
    np.testing.assert_allclose(res.centroids[0], pts.mean(axis=0), atol=1e-12)


def test_kmeans_errors():
    with pytest.raises(EmptyInput):
        kmeans(np.zeros((0, 2)), 2)
    with pytest.raises(InvalidParameter):
        kmeans(np.zeros((3, 2)), 0)


def test_kmeans_more_clusters_than_distinct_points():
    pts = np.array([[0.0], [0.0], [1.0], [1.0], [5.0]])
    res = kmeans(pts, 4, seed=0)
    assert res.centroids.shape == (4, 1)
    assert res.objective == 0.0
    assert set(res.centroids.ravel()) <= {0.0, 1.0, 5.0}


def test_kmeans_is_deterministic():
    pts = np.random.default_rng(2).normal(size=(200, 4))
    a = kmeans(pts, 7, seed=11)
    b = kmeans(pts, 7, seed=11)
    np.testing.assert_array_equal(a.centroids, b.centroids)
    assert a.objective_history == b.objective_history


@pytest.mark.parametrize("seed", range(8))
def test_kmeans_fixed_point(seed):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([rng.normal(loc=c, size=(30, 2)) for c in (0, 4, 8)])
    res = kmeans(pts, 3, seed=seed, max_iters=1000, tol=0.0)
    # assignment step
    d = ((pts[:, None, :] - res.centroids[None]) ** 2).sum(-1)
    np.testing.assert_array_equal(np.argmin(d, axis=1), res.labels)
    # update step
    for j in range(3):
        np.testing.assert_allclose(res.centroids[j], pts[res.labels == j].mean(axis=0), atol=1e-12)


def test_empty_cluster_repair():
    pts = np.array([[0.0], [1.0], [10.0], [11.0]])
    # the centroid at 100 attracts nothing; it must jump to 11, the worst-served point
    res = kmeans(pts, 3, init=[[0.0], [100.0], [1.0]], tol=0.0, max_iters=2)
    assert res.centroids[1, 0] == 11.0
    res = kmeans(pts, 3, init=[[0.0], [100.0], [1.0]], tol=0.0)
    assert np.bincount(res.labels, minlength=3).min() >= 1
    assert all(b <= a for a, b in zip(res.objective_history, res.objective_history[1:]))
    assert res.objective == pytest.approx(0.5)


def test_surplus_clusters_may_stay_empty():
    pts = np.array([[0.0], [0.0], [0.0], [10.0]])
    res = kmeans(pts, 3, seed=0)
    assert res.objective == 0.0


def test_affinity_examples():
    A = affinity_matrix(np.array([[0.0, 0.0]]), PrototypeSet(2, np.array([[0.0, 0.0], [3.0, 4.0]])))
    np.testing.assert_array_equal(A, [[0.0, 5.0]])
    A = affinity_matrix(np.array([[1.0], [2.0]]), np.array([[0.0], [4.0]]))
    np.testing.assert_array_equal(A, [[1, 3], [2, 2]])
    with pytest.raises(InvalidParameter):
        affinity_matrix(np.zeros((2, 2)), np.zeros((3, 3)))


def test_correspondence_examples():
    np.testing.assert_array_equal(correspondence_matrix([[0.2, 0.1, 0.5]]), [[0, 1, 0]])
    np.testing.assert_array_equal(correspondence_matrix([[0.3, 0.3]]), [[1, 0]])
    np.testing.assert_array_equal(correspondence_matrix([[1, 3], [2, 2]]), [[1, 0], [1, 0]])


def test_aligned_feature_matrix_examples():
    C = [[1, 0], [1, 0], [0, 1]]
    F = [[1, 0], [0, 1], [1, 0]]
    expected = naive_matmul([list(r) for r in zip(*C)], F)
    assert expected == [[1, 1], [1, 0]]
    np.testing.assert_array_equal(aligned_feature_matrix(C, F), expected)
    F2 = np.random.default_rng(0).random((4, 3))
    np.testing.assert_array_equal(aligned_feature_matrix(np.eye(4), F2), F2)
    with pytest.raises(InvalidParameter):
        aligned_feature_matrix(np.eye(3), F2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_feature_mass_conservation(n, M, c, seed):
    rng = np.random.default_rng(seed)
    C = correspondence_matrix(rng.random((n, M)))
    F = rng.random((n, c))
    X = aligned_feature_matrix(C, F)
    assert X.shape == (M, c)
    np.testing.assert_allclose(X.sum(axis=0), F.sum(axis=0), atol=1e-9)


def test_prototype_order_examples():
    assert prototype_order(PrototypeSet(3, np.zeros((1, 3)))).tolist() == [0]
    two = PrototypeSet(1, np.array([[0.0], [1.0]]))
    e = math.exp(-1)
    np.testing.assert_allclose(prototype_degrees(two.centroids, 1), [1 + e, 1 + e], atol=1e-12)
    assert prototype_degrees(two.centroids, 1)[0] == pytest.approx(1.367879441171442)
    assert prototype_order(two).tolist() == [0, 1]
    three = PrototypeSet(1, np.array([[0.0], [1.0], [2.0]]))
    D = prototype_degrees(three.centroids, 1)
    assert D[1] == pytest.approx(1 + 2 * e)
    assert D[0] == pytest.approx(1 + e + math.exp(-2))
    assert prototype_order(three).tolist() == [1, 0, 2]


def test_prototype_degrees_against_formula():
    rng = np.random.default_rng(4)
    C = rng.random((6, 3))
    D = prototype_degrees(C, 3)
    for j in range(6):
        ref = sum(math.exp(-math.dist(C[j], C[k]) / 3) for k in range(6))
        assert D[j] == pytest.approx(ref, rel=1e-14)


def protos(rng, L, M):
    out = []
    for K in range(1, L + 1):
        c = rng.random((M, K)) * 2
        p = PrototypeSet(K, c)
        out.append(PrototypeSet(K, c, prototype_order(p)))
    return out


def test_build_grid_single_depth():
    rng = np.random.default_rng(0)
    P = protos(rng, 1, 5)
    reps = rng.random((8, 1)) * 2
    F = np.eye(3)[rng.integers(0, 3, 8)]
    X1 = aligned_grids_per_depth(F, reps, P)[0]
    np.testing.assert_array_equal(build_grid(None, F, P, reps), X1)
    C = correspondence_matrix(affinity_matrix(reps, P[0]))
    np.testing.assert_array_equal(X1, (C.T @ F)[P[0].order])


def test_build_grid_identical_depths_average():
    c = np.array([[0.0], [1.0], [3.0]])
    P = [PrototypeSet(1, c, prototype_order(PrototypeSet(1, c)))]
    c2 = np.hstack([c, c * 0])
    P.append(PrototypeSet(2, c2, prototype_order(PrototypeSet(2, c2))))
    reps = np.array([[0.1, 0.0], [2.9, 0.0], [1.2, 0.0]])
    F = np.eye(2)[[0, 1, 1]]
    per = aligned_grids_per_depth(F, reps, P)
    # distances to the second coordinate are zero, so both depths agree
    if np.array_equal(P[0].order, P[1].order):
        np.testing.assert_array_equal(per[0], per[1])
        np.testing.assert_array_equal(build_grid(None, F, P, reps), per[0])


def test_build_grid_rejects_mixed_M():
    rng = np.random.default_rng(0)
    P = protos(rng, 2, 4)
    P[1] = PrototypeSet(2, rng.random((5, 2)), np.arange(5))
    with pytest.raises(InvalidParameter):
        build_grid(None, np.eye(3), P, rng.random((3, 2)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31))
def test_grid_shape_and_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    M, L, c = 6, 3, 4
    P = protos(rng, L, M)
    reps = rng.random((n, L)) * 2
    F = np.eye(c)[rng.integers(0, c, n)]
    X = build_grid(None, F, P, reps)
    assert X.shape == (M, c)
    np.testing.assert_allclose(X.sum(axis=0), F.sum(axis=0), atol=1e-9)
    perm = rng.permutation(n)
    np.testing.assert_array_equal(build_grid(None, F[perm], P, reps[perm]), X)


def test_fit_prototypes_order_is_permutation():
    pts = np.random.default_rng(1).random((100, 2))
    P = fit_prototypes(pts, 8, 2, seed=3)
    assert P.M == 8 and sorted(P.order.tolist()) == list(range(8))
    D = prototype_degrees(P.centroids, 2)
    assert all(D[P.order[i]] >= D[P.order[i + 1]] for i in range(7))
