"""Baseline clustering methods: k-means, PAM and agglomerative linkage.

Each method exists twice: as a plain function returning a
:class:`ClusteringResult` (used by the benchmark harness) and as a
scikit-learn style estimator with ``fit`` / ``fit_predict`` / ``labels_``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import (
    DataError,
    Dataset,
    DistanceMatrix,
    Partition,
    euclidean_distances,
    read_partition_file,
    validate_partition,
)

BUILTIN_METHODS = ("kmeans", "pam", "single", "average", "complete")
LINKAGES = ("single", "average", "complete")
KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class ClusteringResult:
    partition: Partition
    method_name: str
    objective: Optional[float] = None
    seed_used: Optional[int] = None


@dataclass(frozen=True)
class Dendrogram:
    """Merge history of an agglomerative clustering.

    ``merges[s] = (left, right)`` joins two nodes at ``heights[s]``. Nodes
    ``0..n-1`` are observations and node ``n + s`` is the cluster created by
    step ``s``, as in :func:`scipy.cluster.hierarchy.linkage`.
    """

    merges: np.ndarray
    heights: np.ndarray
    sizes: np.ndarray
    n: int
    linkage: str

    def to_linkage_matrix(self) -> np.ndarray:
        """The (n-1) x 4 matrix layout used by scipy."""
        return np.column_stack([self.merges, self.heights, self.sizes]).astype(float)


def _check_k(K: int, n: int) -> int:
    if int(K) != K or K < 1:
        raise ValueError(f"number of clusters must be a positive integer, got {K}")
    if K > n:
        raise ValueError(f"cannot form {K} clusters from {n} observations")
    return int(K)


def _as_points(d) -> np.ndarray:
    X = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise DataError("clustering needs a fully imputed, finite dataset")
    return X


def _as_square(dm) -> np.ndarray:
    if isinstance(dm, DistanceMatrix):
        return dm.square()
    dm = np.asarray(dm, dtype=float)
    if dm.ndim == 2:
        return dm
    return DistanceMatrix(_n_from_condensed(dm.size), dm).square()


def _n_from_condensed(m: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * m)) / 2))
    if n * (n - 1) // 2 != m:
        raise DataError(f"{m} is not a valid condensed distance length")
    return n


# --------------------------------------------------------------------------
# k-means


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _lloyd(X: np.ndarray, K: int, rng: np.random.Generator):
    """One Lloyd run from K distinct random observations.

    Returns (codes, objective, objective trace).
    """
    n = X.shape[0]
    centers = X[rng.choice(n, size=K, replace=False)].copy()
    codes = None
    trace = []
    for _ in range(KMEANS_MAX_ITER):
        d2 = _sq_dists(X, centers)
        new_codes = np.argmin(d2, axis=1)
        new_codes = _repair_empty(X, new_codes, d2, K)
        if codes is not None and np.array_equal(new_codes, codes):
            break
        codes = new_codes
        centers = np.array([X[codes == k].mean(axis=0) for k in range(K)])
        trace.append(_wcss(X, codes, centers))
    return codes, trace[-1], trace


def _repair_empty(X, codes, d2, K):
    """Give every empty cluster the point farthest from its current center."""
    counts = np.bincount(codes, minlength=K)
    if counts.min() > 0:
        return codes
    codes = codes.copy()
    own = d2[np.arange(len(codes)), codes]
    for k in np.flatnonzero(counts == 0):
        counts = np.bincount(codes, minlength=K)
        # only points whose cluster keeps at least one member may move
        movable = counts[codes] > 1
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        codes[i] = k
        own[i] = 0.0
    return codes


def _wcss(X, codes, centers) -> float:
    return float(sum(((X[codes == k] - c) ** 2).sum() for k, c in enumerate(centers)))


def kmeans(d, K: int, restarts: int = 10, seed: int = 0) -> ClusteringResult:
    """Best of ``restarts`` Lloyd runs by within-cluster sum of squares.

    Restart ``r`` draws its initial centers with seed ``seed + r``; ties in
    the objective go to the lowest restart index.
    """
    X = _as_points(d)
    K = _check_k(K, X.shape[0])
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        codes, obj, _ = _lloyd(X, K, np.random.default_rng(seed + r))
        if best is None or obj < best[1]:
            best = (codes, obj)
    return ClusteringResult(
        validate_partition(best[0] + 1, X.shape[0]), "kmeans", best[1], seed
    )


# --------------------------------------------------------------------------
# PAM


def _pick(candidates: np.ndarray, rng: np.random.Generator) -> int:
    if candidates.size == 1:
        return int(candidates[0])
    return int(rng.choice(candidates))


def _nearest_two(D: np.ndarray, medoids: np.ndarray):
    Dm = D[:, medoids]
    if len(medoids) == 1:
        return np.zeros(D.shape[0], dtype=int), Dm[:, 0], np.full(D.shape[0], np.inf)
    order = np.argsort(Dm, axis=1, kind="stable")[:, :2]
    rows = np.arange(D.shape[0])
    return order[:, 0], Dm[rows, order[:, 0]], Dm[rows, order[:, 1]]


def _pam_build(D: np.ndarray, K: int, rng) -> np.ndarray:
    total = D.sum(axis=0)
    medoids = [_pick(np.flatnonzero(total == total.min()), rng)]
    nearest = D[:, medoids[0]].copy()
    for _ in range(1, K):
        gain = np.maximum(nearest[:, None] - D, 0.0).sum(axis=0)
        gain[medoids] = -np.inf
        best = gain.max()
        medoids.append(_pick(np.flatnonzero(gain == best), rng))
        nearest = np.minimum(nearest, D[:, medoids[-1]])
    return np.array(medoids)


def _swap_deltas(D, medoids, nearest_idx, dn, ds) -> np.ndarray:
    """Change in total distance for swapping medoid slot i with object h."""
    K = len(medoids)
    # objects outside the removed medoid's cluster only move if h is closer
    base = np.minimum(D - dn[:, None], 0.0).sum(axis=0)
    deltas = np.tile(base, (K, 1))
    for i in range(K):
        own = nearest_idx == i
        if not own.any():
            continue
        Do = D[own]
        corr = np.minimum(ds[own, None], Do) - dn[own, None] - np.minimum(
            Do - dn[own, None], 0.0
        )
        deltas[i] += corr.sum(axis=0)
    deltas[:, medoids] = np.inf
    return deltas


def pam(dm, K: int, seed: int = 0, max_swaps: int = 10_000) -> ClusteringResult:
    """Partitioning Around Medoids (BUILD then SWAP) on a distance matrix.

    Every SWAP step performs the best improving (medoid, non-medoid)
    exchange; the search stops when no exchange lowers the total distance
    of observations to their closest medoid. The seed is only used to break
    exact ties between equally good candidates.
    """
    D = _as_square(dm)
    n = D.shape[0]
    K = _check_k(K, n)
    rng = np.random.default_rng(seed)
    medoids = _pam_build(D, K, rng)
    nearest_idx, dn, ds = _nearest_two(D, medoids)
    objective = dn.sum()
    scale = max(objective, 1.0)
    for _ in range(max_swaps):
        if K == n:
            break
        deltas = _swap_deltas(D, medoids, nearest_idx, dn, ds)
        best = deltas.min()
        # rounding noise must not be mistaken for an improvement
        if not best < -1e-12 * scale:
            break
        flat = np.flatnonzero(deltas.ravel() == best)
        i, h = divmod(_pick(flat, rng), n)
        medoids = medoids.copy()
        medoids[i] = h
        nearest_idx, dn, ds = _nearest_two(D, medoids)
        objective = dn.sum()
    labels = _assign_to_medoids(D, medoids)
    return ClusteringResult(
        validate_partition(labels + 1, n), "pam", float(objective), seed
    )


def _assign_to_medoids(D, medoids) -> np.ndarray:
    codes = np.argmin(D[:, medoids], axis=1)
    # a medoid always belongs to its own cluster, even with duplicate points
    codes[medoids] = np.arange(len(medoids))
    return codes


# --------------------------------------------------------------------------
# agglomerative clustering


def hclust(dm, linkage: str = "single") -> Dendrogram:
    """Agglomerative clustering with Lance-Williams distance updates.

    Clusters are tracked in slots named by their smallest observation index.
    At every step the closest pair of active slots is merged; exact ties go
    to the lexicographically smallest slot pair ``(i, j)``, ``i < j``.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    D = np.array(_as_square(dm), dtype=float)
    n = D.shape[0]
    if n < 2:
        raise DataError("hierarchical clustering needs at least two observations")
    np.fill_diagonal(D, np.inf)
    active = np.ones(n, dtype=bool)
    size = np.ones(n, dtype=int)
    node = np.arange(n)
    # row_min[i] caches min over j > i of D[i, j]; argmin picks the lowest j
    row_min = np.full(n, np.inf)
    row_arg = np.zeros(n, dtype=int)
    for i in range(n - 1):
        row_arg[i] = i + 1 + np.argmin(D[i, i + 1 :])
        row_min[i] = D[i, row_arg[i]]

    merges = np.empty((n - 1, 2), dtype=int)
    heights = np.empty(n - 1)
    sizes = np.empty(n - 1, dtype=int)
    for step in range(n - 1):
        i = int(np.argmin(row_min))
        j = int(row_arg[i])
        merges[step] = sorted((node[i], node[j]))
        heights[step] = row_min[i]
        sizes[step] = size[i] + size[j]

        if linkage == "single":
            new = np.minimum(D[i], D[j])
        elif linkage == "complete":
            new = np.maximum(D[i], D[j])
        else:
            new = (size[i] * D[i] + size[j] * D[j]) / (size[i] + size[j])
        new[[i, j]] = np.inf
        new[~active] = np.inf
        D[i] = new
        D[:, i] = new
        D[j] = np.inf
        D[:, j] = np.inf
        active[j] = False
        size[i] += size[j]
        node[i] = n + step
        row_min[j] = np.inf

        if i < n - 1:
            row_arg[i] = i + 1 + np.argmin(D[i, i + 1 :])
            row_min[i] = D[i, row_arg[i]]
        stale = np.flatnonzero(active & ((row_arg == i) | (row_arg == j)))
        for k in stale:
            if k != i and k < n - 1:
                row_arg[k] = k + 1 + np.argmin(D[k, k + 1 :])
                row_min[k] = D[k, row_arg[k]]
        # rows above i may now reach slot i more cheaply
        above = np.flatnonzero(active[:i])
        col = D[above, i]
        better = (col < row_min[above]) | ((col == row_min[above]) & (i < row_arg[above]))
        row_min[above[better]] = col[better]
        row_arg[above[better]] = i
    return Dendrogram(merges, heights, sizes, n, linkage)


def cut(dg: Dendrogram, K: int) -> Partition:
    """Undo the last ``K - 1`` merges and return the resulting clusters."""
    K = _check_k(K, dg.n)
    parent = np.arange(2 * dg.n - 1)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(dg.n - K):
        a, b = dg.merges[step]
        parent[find(a)] = dg.n + step
        parent[find(b)] = dg.n + step
    roots = [find(i) for i in range(dg.n)]
    return validate_partition(roots, dg.n)


def linkage_clustering(dm, K: int, linkage: str) -> ClusteringResult:
    dg = hclust(dm, linkage)
    return ClusteringResult(cut(dg, K), linkage, None, None)


# --------------------------------------------------------------------------
# external partitions


def ingest_partition(
    path: Union[str, Path], n: int, method_name: Optional[str] = None
) -> ClusteringResult:
    """Load a partition produced elsewhere (one label per line)."""
    path = Path(path)
    partition = read_partition_file(path, n)
    name = method_name or path.stem
    if not name.startswith("external:"):
        name = f"external:{name}"
    return ClusteringResult(partition, name, None, None)


def run_method(
    method: str, data: Dataset, dm: DistanceMatrix, K: int, seed: int, restarts: int = 10
) -> ClusteringResult:
    """Dispatch a built-in method by its identifier."""
    if method == "kmeans":
        return kmeans(data, K, restarts=restarts, seed=seed)
    if method == "pam":
        return pam(dm, K, seed=seed)
    if method in LINKAGES:
        return linkage_clustering(dm, K, method)
    raise ValueError(f"unknown method {method!r}; expected one of {BUILTIN_METHODS}")


# --------------------------------------------------------------------------
# scikit-learn estimators


class KMeans(ClusterMixin, BaseEstimator):
    """Lloyd k-means with random restarts.

    Parameters
    ----------
    n_clusters : int
    restarts : int, default=10
    random_state : int, default=0
    """

    def __init__(self, n_clusters=2, restarts=10, random_state=0):
        self.n_clusters = n_clusters
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        result = kmeans(X, self.n_clusters, self.restarts, self.random_state)
        codes = result.partition.codes
        self.labels_ = codes
        self.cluster_centers_ = np.array(
            [X[codes == k].mean(axis=0) for k in range(self.n_clusters)]
        )
        self.inertia_ = result.objective
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=float)
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)


class PAM(ClusterMixin, BaseEstimator):
    """Partitioning Around Medoids on Euclidean (unsquared) distances."""

    def __init__(self, n_clusters=2, random_state=0):
        self.n_clusters = n_clusters
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        dm = euclidean_distances(X)
        D = dm.square()
        result = pam(dm, self.n_clusters, seed=self.random_state)
        codes = result.partition.codes
        # medoid of each cluster, recovered from the final assignment
        self.medoid_indices_ = np.array(
            [
                members[np.argmin(D[np.ix_(members, members)].sum(axis=0))]
                for members in (np.flatnonzero(codes == k) for k in range(self.n_clusters))
            ]
        )
        self.cluster_centers_ = X[self.medoid_indices_]
        self.labels_ = codes
        self.inertia_ = result.objective
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=float)
        return np.argmin(_sq_dists(X, self.cluster_centers_), axis=1)


class Agglomerative(ClusterMixin, BaseEstimator):
    """Single, average or complete linkage cut at ``n_clusters`` clusters."""

    def __init__(self, n_clusters=2, linkage="single"):
        self.n_clusters = n_clusters
        self.linkage = linkage

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        self.dendrogram_ = hclust(euclidean_distances(X), self.linkage)
        self.labels_ = cut(self.dendrogram_, self.n_clusters).codes
        self.n_features_in_ = X.shape[1]
        return self
