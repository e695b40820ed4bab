"""Random clustering ensembles and index calibration.

Random clusterings are generated by four greedy schemes started from K
randomly drawn observations. Raw index values of the method clusterings are
then standardised against the pooled values of methods and random
clusterings on the same data.

Random streams: every replicate gets its own ``numpy.random.PCG64``
generator seeded by ``SeedSequence([master_seed, algorithm_id, replicate])``,
so results do not depend on generation order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .data import DistanceMatrix, Partition, validate_partition

RANDOM_ALGORITHMS = ("kcentroids", "nearest", "farthest", "average")
DMODE_WEIGHTS = (0.75, 0.25)


class CalibrationError(ValueError):
    """The pooled values have zero spread, so the index cannot be calibrated."""


@dataclass(frozen=True)
class EnsembleSpec:
    K: int
    per_algorithm: int = 50
    master_seed: int = 0

    def __post_init__(self):
        if self.per_algorithm < 1:
            raise ValueError("per_algorithm must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @property
    def m(self) -> int:
        return len(RANDOM_ALGORITHMS) * self.per_algorithm


@dataclass(frozen=True)
class CalibratedIndex:
    raw: float
    calibrated: float
    pool_mean: float
    pool_sd: float
    orientation: str


def replicate_rng(master_seed: int, algorithm: str, replicate: int) -> np.random.Generator:
    alg_id = RANDOM_ALGORITHMS.index(algorithm)
    ss = np.random.SeedSequence([int(master_seed), alg_id, int(replicate)])
    return np.random.Generator(np.random.PCG64(ss))


def _square(dm) -> np.ndarray:
    return dm.square() if isinstance(dm, DistanceMatrix) else np.asarray(dm, dtype=float)


def _draw_seeds(n: int, K: int, seed) -> np.ndarray:
    if K < 1 or K > n:
        raise ValueError(f"cannot draw {K} starting points from {n} observations")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.choice(n, size=K, replace=False)


def rand_kcentroids(dm, K: int, seed) -> Partition:
    """Assign each observation to the nearest of K random observations.

    Distance ties go to the lowest centroid index; each drawn observation
    always stays in its own cluster, even if it duplicates another centroid.
    """
    D = _square(dm)
    centres = _draw_seeds(D.shape[0], K, seed)
    codes = np.argmin(D[:, centres], axis=1)
    codes[centres] = np.arange(K)
    return validate_partition(codes, D.shape[0])


def _greedy(D: np.ndarray, K: int, seed, kind: str) -> Partition:
    n = D.shape[0]
    starts = _draw_seeds(n, K, seed)
    codes = np.full(n, -1)
    codes[starts] = np.arange(K)
    unclustered = np.ones(n, dtype=bool)
    unclustered[starts] = False
    if kind == "nearest":
        # distance to and cluster of the closest clustered point
        sub = D[:, starts]
        first = np.argmin(sub, axis=1)
        near_d = sub[np.arange(n), first]
        near_pt = starts[first]
        # ties between clustered points go to the lowest observation index
        for col in range(K):
            tie = (sub[:, col] == near_d) & (starts[col] < near_pt)
            near_pt = np.where(tie, starts[col], near_pt)
    else:
        # per (observation, cluster): running max or sum of distances
        agg = D[:, starts].copy()
        counts = np.ones(K)
    for _ in range(n - K):
        if kind == "nearest":
            score = np.where(unclustered, near_d, np.inf)
            x = int(np.argmin(score))
            k = codes[near_pt[x]]
        else:
            per_cluster = agg if kind == "farthest" else agg / counts
            best_k = np.argmin(per_cluster, axis=1)
            best = per_cluster[np.arange(n), best_k]
            x = int(np.argmin(np.where(unclustered, best, np.inf)))
            k = int(best_k[x])
        codes[x] = k
        unclustered[x] = False
        if kind == "nearest":
            dx = D[x]
            closer = (dx < near_d) | ((dx == near_d) & (x < near_pt))
            near_d = np.where(closer, dx, near_d)
            near_pt = np.where(closer, x, near_pt)
        elif kind == "farthest":
            agg[:, k] = np.maximum(agg[:, k], D[x])
        else:
            agg[:, k] += D[x]
            counts[k] += 1
    return validate_partition(codes, n)


def rand_nearest_neighbour(dm, K: int, seed) -> Partition:
    """Grow K random starting clusters by nearest clustered neighbour.

    The unclustered observation closest to any clustered one joins that
    neighbour's cluster.
    """
    return _greedy(_square(dm), K, seed, "nearest")


def rand_farthest_neighbour(dm, K: int, seed) -> Partition:
    """Like :func:`rand_nearest_neighbour`, scoring clusters by their farthest member."""
    return _greedy(_square(dm), K, seed, "farthest")


def rand_average_distances(dm, K: int, seed) -> Partition:
    """Like :func:`rand_nearest_neighbour`, scoring clusters by average distance."""
    return _greedy(_square(dm), K, seed, "average")


GENERATORS = {
    "kcentroids": rand_kcentroids,
    "nearest": rand_nearest_neighbour,
    "farthest": rand_farthest_neighbour,
    "average": rand_average_distances,
}


def generate_ensemble(dm, spec: EnsembleSpec) -> List[Partition]:
    """All random clusterings, ordered by algorithm then replicate."""
    D = _square(dm)
    return [
        GENERATORS[alg](D, spec.K, replicate_rng(spec.master_seed, alg, i))
        for alg in RANDOM_ALGORITHMS
        for i in range(spec.per_algorithm)
    ]


def ensemble_labels(spec: EnsembleSpec) -> List[str]:
    return [f"{alg}:{i}" for alg in RANDOM_ALGORITHMS for i in range(spec.per_algorithm)]


def pool_stats(values: Iterable[float], orientation: str):
    """Mean and sd (n - 1 denominator) of oriented, non-missing values."""
    sign = _sign(orientation)
    v = sign * np.asarray(list(values), dtype=float)
    v = v[~np.isnan(v)]
    if v.size < 2:
        raise CalibrationError("need at least two non-missing pooled values")
    mean = v.mean()
    sd = v.std(ddof=1)
    if not sd > 1e-12 * max(1.0, abs(mean)):
        raise CalibrationError("pooled values have zero spread")
    return float(mean), float(sd)


def _sign(orientation: str) -> float:
    if orientation == "larger_better":
        return 1.0
    if orientation == "smaller_better":
        return -1.0
    raise ValueError(f"unknown orientation {orientation!r}")


def calibrate(
    method_values: Sequence[float],
    ensemble_values: Sequence[float],
    orientation: str,
) -> List[CalibratedIndex]:
    """Standardise method values against the pooled methods + ensemble values.

    Smaller-better indexes are negated first so that larger calibrated
    values are always better. Missing (NaN) values are left out of the pool
    and stay missing.
    """
    method_values = list(method_values)
    mean, sd = pool_stats(list(ensemble_values) + method_values, orientation)
    sign = _sign(orientation)
    return [
        CalibratedIndex(v, (sign * v - mean) / sd, mean, sd, orientation)
        for v in method_values
    ]


def standardise(value: float, mean: float, sd: float, orientation: str) -> float:
    return (_sign(orientation) * value - mean) / sd


def dmode_aggregate(densdec_star: float, highdgap_star: float) -> float:
    """Weighted combination of calibrated densdec and highdgap."""
    w1, w2 = DMODE_WEIGHTS
    return w1 * densdec_star + w2 * highdgap_star
