"""Internal cluster validation indexes.

All functions return raw, uncalibrated values. Distances come from a
:class:`~clustbench.data.DistanceMatrix`; ``kdnorm`` and the k-means
criterion also need the coordinates in a :class:`~clustbench.data.Dataset`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from ._special import chi2_cdf
from .data import Dataset, DistanceMatrix, Partition, validate_partition

logger = logging.getLogger(__name__)

INDEX_NAMES = (
    "avewithin",
    "maxdiameter",
    "widestgap",
    "sindex",
    "min_separation",
    "pearsongamma",
    "densdec",
    "highdgap",
    "denscut",
    "entropy",
    "kdnorm",
    "cvnnd",
    "asw",
    "wcss_centroid",
    "sumdist_medoid",
)

LARGER_BETTER = frozenset({"sindex", "min_separation", "pearsongamma", "entropy", "asw"})


class UndefinedIndexError(ValueError):
    """An index is undefined for the given partition."""


def orientation(name: str) -> str:
    return "larger_better" if name in LARGER_BETTER else "smaller_better"


@dataclass(frozen=True)
class KernelDensity:
    q: float
    h: np.ndarray
    p_quantile: float

    def kernel(self, d):
        """Triangular kernel with support [0, q]."""
        d = np.asarray(d, dtype=float)
        return np.where(d <= self.q, 1.0 - d / self.q, 0.0)


@dataclass(frozen=True)
class DensityModeResult:
    densdec: float
    highdgap: float
    t_set: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class InternalIndexVector:
    """Raw values of every internal index; NaN marks an undefined index."""

    avewithin: float = np.nan
    maxdiameter: float = np.nan
    widestgap: float = np.nan
    sindex: float = np.nan
    min_separation: float = np.nan
    pearsongamma: float = np.nan
    densdec: float = np.nan
    highdgap: float = np.nan
    denscut: float = np.nan
    entropy: float = np.nan
    kdnorm: float = np.nan
    cvnnd: float = np.nan
    asw: float = np.nan
    wcss_centroid: float = np.nan
    sumdist_medoid: float = np.nan
    errors: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "errors"}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in INDEX_NAMES])


def _square(dm) -> np.ndarray:
    return dm.square() if isinstance(dm, DistanceMatrix) else np.asarray(dm, dtype=float)


def _partition(c, n=None) -> Partition:
    return c if isinstance(c, Partition) else validate_partition(c, n)


def _check_same_n(dm, c: Partition):
    n = dm.n if isinstance(dm, DistanceMatrix) else np.asarray(dm).shape[0]
    if c.n != n:
        raise ValueError(f"partition has {c.n} labels for {n} observations")


def _same_cluster(c: Partition) -> np.ndarray:
    return c.labels[:, None] == c.labels[None, :]


# --------------------------------------------------------------------------
# homogeneity


def avewithin(dm, c) -> float:
    """Mean over observations of the average distance to own-cluster members.

    Equals (1/n) * sum_k 1/(n_k - 1) * sum over ordered within-cluster pairs.
    Singleton clusters contribute 0.
    """
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    within = np.where(_same_cluster(c), D, 0.0).sum(axis=1)
    denom = c.sizes[c.codes] - 1
    per_point = np.divide(within, denom, out=np.zeros_like(within), where=denom > 0)
    return float(per_point.mean())


def maxdiameter(dm, c) -> float:
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    return float(np.where(_same_cluster(c), D, 0.0).max())


def _mst_max_edge(D: np.ndarray) -> float:
    """Largest edge of a minimum spanning tree (Prim, dense)."""
    m = D.shape[0]
    if m < 2:
        return 0.0
    in_tree = np.zeros(m, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    best[0] = np.inf
    largest = 0.0
    for _ in range(m - 1):
        x = int(best.argmin())
        largest = max(largest, best[x])
        in_tree[x] = True
        np.minimum(best, D[x], out=best)
        best[in_tree] = np.inf
    return float(largest)


def widestgap(dm, c) -> float:
    """Widest within-cluster gap, via the largest MST edge of each cluster.

    The largest edge of a cluster's minimum spanning tree equals the
    largest, over all splits of the cluster into two parts, of the smallest
    distance across the split.
    """
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    gaps = [_mst_max_edge(D[np.ix_(idx, idx)]) for idx in _clusters(c)]
    return float(max(gaps))


def _clusters(c: Partition):
    return c.groups


# --------------------------------------------------------------------------
# separation


def sindex(dm, c, p: float = 0.1):
    """Separation index and minimum separation.

    For each observation take the distance to the closest point of another
    cluster. Per cluster average the ``max(1, floor(p * n_k))`` smallest of
    these; ``sindex`` pools these across clusters.

    Returns
    -------
    (sindex, min_separation)
    """
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    if c.K < 2:
        raise UndefinedIndexError("sindex needs at least two clusters")
    border = np.where(_same_cluster(c), np.inf, D).min(axis=1)
    total = 0.0
    count = 0
    for k, idx in enumerate(_clusters(c)):
        m = max(1, int(np.floor(p * c.sizes[k] + 1e-12)))
        total += np.sort(border[idx])[:m].sum()
        count += m
    return float(total / count), float(border.min())


def pearsongamma(dm, c) -> float:
    """Pearson correlation between distances and the 0/1 'different cluster' vector."""
    dm = dm if isinstance(dm, DistanceMatrix) else DistanceMatrix.from_square(dm)
    c = _partition(c, dm.n)
    _check_same_n(dm, c)
    iu = np.triu_indices(dm.n, k=1)
    diff = (c.labels[iu[0]] != c.labels[iu[1]]).astype(float)
    d = dm.entries
    dc = d - d.mean()
    cc = diff - diff.mean()
    sd_d = np.sqrt((dc**2).sum())
    sd_c = np.sqrt((cc**2).sum())
    if sd_c == 0:
        raise UndefinedIndexError("pearsongamma undefined: clustering induces constant dissimilarities")
    if sd_d == 0:
        raise UndefinedIndexError("pearsongamma undefined: all distances are equal")
    return float(np.clip((dc @ cc) / (sd_d * sd_c), -1.0, 1.0))


# --------------------------------------------------------------------------
# density based


def kernel_density(dm, p: float = 0.1) -> KernelDensity:
    """Triangular-kernel density at each observation.

    The kernel radius is the ``p`` quantile (linear interpolation) of all
    pairwise distances; each point contributes 1 to its own density.
    """
    dm = dm if isinstance(dm, DistanceMatrix) else DistanceMatrix.from_square(dm)
    if dm.n < 2:
        raise ValueError("kernel density needs n >= 2")
    q = float(np.quantile(dm.entries, p))
    if q <= 0:
        raise UndefinedIndexError(
            f"kernel radius is 0 at quantile level {p}: too many duplicate points; "
            "jitter the data or raise the quantile level"
        )
    D = dm.square()
    h = np.clip(1.0 - D / q, 0.0, None).sum(axis=1)
    h.setflags(write=False)
    return KernelDensity(q, h, p)


def density_mode(dm, c, kd: KernelDensity) -> DensityModeResult:
    """Density decline along single-linkage growth from each cluster's mode.

    Each cluster is grown from its highest-density member by repeatedly
    attaching the remaining member x closest to the grown set (neighbour y).
    A penalty (h(x) - h(y))^2 is added whenever the density goes up, and the
    product of the highest remaining density and d(x, y) is recorded.
    Ties go to the lowest observation index.
    """
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    h = np.asarray(kd.h)
    penalty = 0.0
    t_values = []
    for idx in _clusters(c):
        m = idx.size
        if m < 2:
            continue
        Dc = D[np.ix_(idx, idx)]
        hc = h[idx]
        start = int(np.argmax(hc))  # first maximum is the lowest index
        attached = np.zeros(m, dtype=bool)
        attached[start] = True
        by_density = np.argsort(-hc, kind="stable")
        top = 0
        near_d = Dc[start].copy()
        near_d[start] = np.inf
        near_y = np.full(m, start)
        for _ in range(m - 1):
            while attached[by_density[top]]:
                top += 1
            x = int(near_d.argmin())
            y = int(near_y[x])
            t_values.append(hc[by_density[top]] * Dc[x, y])
            if hc[x] > hc[y]:
                penalty += (hc[x] - hc[y]) ** 2
            attached[x] = True
            # strict improvement keeps the earlier (lower index on ties) neighbour
            row = Dc[x]
            closer = (row < near_d) | ((row == near_d) & (x < near_y))
            closer &= ~attached
            near_d[closer] = row[closer]
            near_y[closer] = x
            near_d[x] = np.inf
    t_set = np.array(t_values)
    return DensityModeResult(
        float(np.sqrt(penalty / D.shape[0])),
        float(t_set.max()) if t_set.size else 0.0,
        t_set,
    )


def denscut(dm, c, kd: KernelDensity) -> float:
    """Average of density times the density contributed by other clusters."""
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    K = kd.kernel(D)
    h_other = np.where(_same_cluster(c), 0.0, K).sum(axis=1)
    return float((np.asarray(kd.h) * h_other).mean())


# --------------------------------------------------------------------------
# distributional shape


def entropy(c) -> float:
    c = _partition(c)
    frac = c.sizes / c.n
    return float(-(frac * np.log(frac)).sum())


def _mahalanobis_sq(Xc: np.ndarray) -> np.ndarray:
    m, p = Xc.shape
    centred = Xc - Xc.mean(axis=0)
    cov = centred.T @ centred / (m - 1)
    if np.linalg.cond(cov) > 1e12:
        cov = cov + 1e-8 * np.trace(cov) / p * np.eye(p)
    sol = np.linalg.solve(cov, centred.T)
    return np.einsum("ij,ji->i", centred, sol)


def kdnorm(d, c) -> float:
    """Kolmogorov distance between pooled squared Mahalanobis distances and chi2_p.

    Each cluster uses its own mean and sample covariance. Clusters with
    ``n_j <= p + 1`` points are left out of the pool.
    """
    X = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    c = _partition(c, X.shape[0])
    if c.n != X.shape[0]:
        raise ValueError(f"partition has {c.n} labels for {X.shape[0]} observations")
    p = X.shape[1]
    pooled = [
        _mahalanobis_sq(X[idx]) for idx in _clusters(c) if idx.size >= p + 2
    ]
    if not pooled:
        raise UndefinedIndexError(f"kdnorm needs a cluster with at least p + 2 = {p + 2} points")
    s = np.sort(np.concatenate(pooled))
    N = s.size
    F = chi2_cdf(s, p)
    upper = np.arange(1, N + 1) / N - F
    lower = F - np.arange(N) / N
    return float(np.clip(max(upper.max(), lower.max()), 0.0, 1.0))


def cvnnd(dm, c, k: int = 2) -> float:
    """Size-weighted coefficient of variation of k-th within-cluster neighbour distances.

    Only clusters with more than ``k`` members take part.
    """
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    num = 0.0
    den = 0
    for idx in _clusters(c):
        m = idx.size
        if m <= k:
            continue
        Dc = D[np.ix_(idx, idx)]
        # column 0 after sorting is the point itself
        kth = np.sort(Dc, axis=1)[:, k]
        mean = kth.mean()
        cv = 0.0 if mean == 0 else kth.std(ddof=1) / mean
        num += m * cv
        den += m
    if den == 0:
        raise UndefinedIndexError(f"cvnnd needs a cluster with more than k = {k} points")
    return float(num / den)


def asw(dm, c) -> float:
    """Average silhouette width; singleton clusters get silhouette 0."""
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    if c.K < 2:
        raise UndefinedIndexError("asw needs at least two clusters")
    sums = D @ c.onehot()
    rows = np.arange(c.n)
    own = c.codes
    own_size = c.sizes[own]
    a = np.divide(
        sums[rows, own], own_size - 1, out=np.zeros(c.n), where=own_size > 1
    )
    mean_other = sums / c.sizes
    mean_other[rows, own] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.divide(b - a, denom, out=np.zeros(c.n), where=denom > 0)
    s[own_size == 1] = 0.0
    return float(s.mean())


# --------------------------------------------------------------------------
# centroid representation


def centroid_representation(d, dm, c):
    """k-means and PAM criteria of the partition.

    Returns
    -------
    (wcss_centroid, sumdist_medoid)
    """
    X = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    D = _square(dm)
    c = _partition(c, D.shape[0])
    _check_same_n(dm, c)
    wcss = 0.0
    sumdist = 0.0
    for idx in _clusters(c):
        Xc = X[idx]
        wcss += float(((Xc - Xc.mean(axis=0)) ** 2).sum())
        sumdist += float(D[np.ix_(idx, idx)].sum(axis=0).min())
    return wcss, sumdist


# --------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class IndexParams:
    sindex_p: float = 0.1
    kernel_p: float = 0.1
    cvnnd_k: int = 2


def all_internal(
    d,
    dm: DistanceMatrix,
    c,
    params: Optional[IndexParams] = None,
    kd: Optional[KernelDensity] = None,
) -> InternalIndexVector:
    """Compute every internal index once; failures become NaN with a reason.

    A precomputed ``kd`` can be passed to share the kernel density across
    many partitions of the same data.
    """
    params = params or IndexParams()
    c = _partition(c, dm.n)
    values: dict = {}
    errors: dict = {}

    def attempt(names, fn, *args, **kwargs):
        try:
            out = fn(*args, **kwargs)
        except (UndefinedIndexError, np.linalg.LinAlgError) as exc:
            for name in names:
                errors[name] = str(exc)
            return
        if len(names) == 1:
            values[names[0]] = out
        else:
            values.update(zip(names, out))

    attempt(["avewithin"], avewithin, dm, c)
    attempt(["maxdiameter"], maxdiameter, dm, c)
    attempt(["widestgap"], widestgap, dm, c)
    attempt(["sindex", "min_separation"], sindex, dm, c, params.sindex_p)
    attempt(["pearsongamma"], pearsongamma, dm, c)
    if kd is None:
        try:
            kd = kernel_density(dm, params.kernel_p)
        except UndefinedIndexError as exc:
            for name in ("densdec", "highdgap", "denscut"):
                errors[name] = str(exc)
    if kd is not None:
        dmode = density_mode(dm, c, kd)
        values["densdec"] = dmode.densdec
        values["highdgap"] = dmode.highdgap
        attempt(["denscut"], denscut, dm, c, kd)
    attempt(["entropy"], entropy, c)
    attempt(["kdnorm"], kdnorm, d, c)
    attempt(["cvnnd"], cvnnd, dm, c, params.cvnnd_k)
    attempt(["asw"], asw, dm, c)
    attempt(["wcss_centroid", "sumdist_medoid"], centroid_representation, d, dm, c)
    for name, msg in errors.items():
        logger.debug("index %s undefined: %s", name, msg)
    return InternalIndexVector(**values, errors=errors)
