"""Prototype learning and transitive vertex alignment.

Every vertex of every graph is assigned to its nearest k-means centroid
("prototype"). Vertices of different graphs sharing a prototype are aligned
with each other, and since each prototype indexes one row of the output grid,
all graphs end up as fixed ``M x c`` matrices with a common row order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidParameter


@dataclass(frozen=True)
class PrototypeSet:
    K: int
    centroids: np.ndarray  # (M, K)
    order: np.ndarray = field(default=None)  # degree-descending permutation of 0..M-1

    @property
    def M(self) -> int:
        return self.centroids.shape[0]

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != self.K:
            raise InvalidParameter(f"centroids must be (M, {self.K}), got {c.shape}")
        object.__setattr__(self, "centroids", c)
        if self.order is not None:
            order = np.asarray(self.order, dtype=np.int64)
            if sorted(order.tolist()) != list(range(c.shape[0])):
                raise InvalidParameter("order is not a permutation of the prototypes")
            object.__setattr__(self, "order", order)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    objective_history: list  # objective after each assignment step
    n_iter: int

    @property
    def objective(self) -> float:
        return self.objective_history[-1]


def _sq_dists(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nmk,nmk->nm", diff, diff)


def _assign(points, centroids, chunk=8192):
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    for s in range(0, n, chunk):
        D = _sq_dists(points[s:s + chunk], centroids)
        lab = np.argmin(D, axis=1)
        labels[s:s + chunk] = lab
        d2[s:s + chunk] = D[np.arange(len(lab)), lab]
    return labels, d2


def kmeans_plusplus(points: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((M, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    closest = _sq_dists(points, centroids[:1])[:, 0]
    for j in range(1, M):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            # every point already coincides with a centroid
            idx = rng.integers(n)
        centroids[j] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centroids[j:j + 1])[:, 0])
    return centroids


def kmeans(points, M: int, seed: int = 0, max_iters: int = 300, tol: float = 1e-6,
           init=None) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds.

    Stops after ``max_iters`` assignment steps, when the assignment stops
    changing, or when the objective drops by less than ``tol``. A centroid
    that loses all its points jumps to the point farthest from its own
    centroid (lowest index on ties). The recorded objective never increases;
    an update that would raise it through rounding is discarded.

    ``init`` overrides the k-means++ seeding with explicit starting centroids.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise EmptyInput("k-means on an empty point set")
    if M < 1:
        raise InvalidParameter(f"M must be >= 1, got {M}")
    rng = np.random.default_rng(seed)
    if init is None:
        centroids = kmeans_plusplus(X, M, rng)
    else:
        centroids = np.array(init, dtype=np.float64).reshape(M, X.shape[1])

    labels, d2 = _assign(X, centroids)
    history = [float(d2.sum())]
    n_iter = 1
    while n_iter < max_iters:
        new_centroids = centroids.copy()
        new_labels = labels.copy()
        counts = np.bincount(new_labels, minlength=M)
        dist = d2.copy()
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(dist))
            if dist[far] == 0:
                break
            new_labels[far] = j
            new_centroids[j] = X[far]
            dist[far] = 0.0
        counts = np.bincount(new_labels, minlength=M)
        sums = np.zeros_like(centroids)
        np.add.at(sums, new_labels, X)
        filled = counts > 0
        new_centroids[filled] = sums[filled] / counts[filled, None]

        cand_labels, cand_d2 = _assign(X, new_centroids)
        obj = float(cand_d2.sum())
        n_iter += 1
        if obj > history[-1]:
            break
        stable = np.array_equal(cand_labels, labels)
        centroids, labels, d2 = new_centroids, cand_labels, cand_d2
        history.append(obj)
        if stable or history[-2] - obj < tol:
            break
    return KMeansResult(centroids, labels, history, n_iter)


def prototype_degrees(centroids: np.ndarray, K: int) -> np.ndarray:
    """Degree of each prototype in the prototype similarity graph.

    Similarity is ``exp(-||mu_j - mu_k|| / K)``; self-similarity (1) is
    included. Row terms are summed in sorted order so equal multisets of
    similarities give equal degrees.
    """
    C = np.asarray(centroids, dtype=np.float64)
    diff = C[:, None, :] - C[None, :, :]
    dist = np.sqrt(np.einsum("jkd,jkd->jk", diff, diff))
    S = np.exp(-dist / K)
    return np.sort(S, axis=1).sum(axis=1)


def prototype_order(prototypes: PrototypeSet) -> np.ndarray:
    """Prototype indices by descending degree, ascending index on ties."""
    D = prototype_degrees(prototypes.centroids, prototypes.K)
    return np.lexsort((np.arange(len(D)), -D))


def fit_prototypes(points, M: int, K: int, seed: int = 0, max_iters: int = 300,
                   tol: float = 1e-6) -> PrototypeSet:
    res = kmeans(points, M, seed=seed, max_iters=max_iters, tol=tol)
    proto = PrototypeSet(K, res.centroids)
    return PrototypeSet(K, res.centroids, prototype_order(proto))


def affinity_matrix(reps, prototypes) -> np.ndarray:
    """Euclidean distance from every vertex representation to every prototype."""
    R = np.asarray(reps, dtype=np.float64)
    C = prototypes.centroids if isinstance(prototypes, PrototypeSet) else np.asarray(prototypes, dtype=np.float64)
    if R.ndim != 2 or C.ndim != 2 or R.shape[1] != C.shape[1]:
        raise InvalidParameter(
            f"representation shape {R.shape} does not match prototype shape {C.shape}"
        )
    return np.sqrt(_sq_dists(R, C))


def correspondence_matrix(affinity) -> np.ndarray:
    """One-hot rows marking each vertex's nearest prototype (lowest index on ties)."""
    A = np.asarray(affinity, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise EmptyInput("affinity matrix is empty")
    C = np.zeros(A.shape, dtype=np.float64)
    C[np.arange(A.shape[0]), np.argmin(A, axis=1)] = 1.0
    return C


def aligned_feature_matrix(C, F) -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    if C.ndim != 2 or F.ndim != 2 or C.shape[0] != F.shape[0]:
        raise InvalidParameter(f"correspondence {C.shape} and features {F.shape} disagree")
    return C.T @ F


def aligned_grids_per_depth(F, reps, prototypes_per_K) -> list:
    """Prototype-ordered ``(C^K)^T F`` for each depth K = 1..L.

    ``reps`` is the graph's ``(n, >=L)`` representation array; depth K uses
    its first K columns.
    """
    F = np.asarray(F, dtype=np.float64)
    reps = np.asarray(reps, dtype=np.float64)
    if not prototypes_per_K:
        raise InvalidParameter("need prototypes for at least one depth")
    M = prototypes_per_K[0].M
    out = []
    for K, proto in enumerate(prototypes_per_K, 1):
        if proto.M != M:
            raise InvalidParameter(f"depth {K} has {proto.M} prototypes, depth 1 has {M}")
        if proto.K != K:
            raise InvalidParameter(f"prototype set {K} was built for depth {proto.K}")
        if reps.shape[0] != F.shape[0] or reps.shape[1] < K:
            raise InvalidParameter(f"representations {reps.shape} too small for depth {K}")
        C = correspondence_matrix(affinity_matrix(reps[:, :K], proto))
        X = aligned_feature_matrix(C, F)
        order = proto.order if proto.order is not None else prototype_order(proto)
        out.append(X[order])
    return out


def build_grid(graph, F, prototypes_per_K, reps) -> np.ndarray:
    """Average of the prototype-ordered aligned feature matrices over depths."""
    F = np.asarray(F)
    if graph is not None and F.shape[0] != graph.vertex_count:
        raise InvalidParameter(f"{F.shape[0]} feature rows for {graph.vertex_count} vertices")
    grids = aligned_grids_per_depth(F, reps, prototypes_per_K)
    total = np.zeros_like(grids[0])
    for X in grids:
        total += X
    return total / len(grids)
