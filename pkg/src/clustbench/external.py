"""External indexes comparing a clustering with a reference partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Partition, validate_partition


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation; rows follow the first partition, columns the second."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.size == 0:
            raise ValueError("contingency table must be a non-empty 2-D array")
        if (counts < 0).any():
            raise ValueError("contingency counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _as_partition(x) -> Partition:
    return x if isinstance(x, Partition) else validate_partition(x)


def contingency(a, b) -> ContingencyTable:
    a, b = _as_partition(a), _as_partition(b)
    if a.n != b.n:
        raise ValueError(f"partitions have different lengths ({a.n} and {b.n})")
    counts = np.zeros((a.K, b.K), dtype=np.int64)
    np.add.at(counts, (a.codes, b.codes), 1)
    return ContingencyTable(counts)


def _table(t) -> ContingencyTable:
    return t if isinstance(t, ContingencyTable) else ContingencyTable(t)


def _pairs(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def ari(t) -> float:
    """Adjusted Rand index from a contingency table.

    Returns 1 when the index is degenerate (expected and maximum pair
    agreement coincide, e.g. both partitions are a single cluster).
    """
    t = _table(t)
    n = t.n
    if n < 2:
        raise ValueError("ARI needs at least two observations")
    index = _pairs(t.counts).sum()
    sum_a = _pairs(t.row_sums).sum()
    sum_b = _pairs(t.col_sums).sum()
    expected = sum_a * sum_b / _pairs(n)
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def vi(t) -> float:
    """Variation of information in nats: H(A) + H(B) - 2 I(A, B)."""
    t = _table(t)
    n = t.n
    h_a = _entropy(t.row_sums, n)
    h_b = _entropy(t.col_sums, n)
    h_ab = _entropy(t.counts.ravel(), n)
    # I = H(A) + H(B) - H(A,B), so VI = 2 H(A,B) - H(A) - H(B)
    return float(max(0.0, 2.0 * h_ab - h_a - h_b))


def bcubed(t):
    """BCubed precision, recall and F.

    Rows of the table are the reference classes, columns the clusters being
    evaluated. Precision averages, over observations, the share of their
    cluster that shares their class; recall the share of their class that
    shares their cluster. F is the harmonic mean of the two averages.

    Returns
    -------
    (precision, recall, f)
    """
    t = _table(t)
    n = t.n
    sq = t.counts.astype(float) ** 2
    col = t.col_sums.astype(float)
    row = t.row_sums.astype(float)
    precision = (sq[:, col > 0] / col[col > 0]).sum() / n
    recall = (sq[row > 0] / row[row > 0, None]).sum() / n
    f = 2 * precision * recall / (precision + recall)
    return float(precision), float(recall), float(f)


def external_indexes(pred, truth) -> dict:
    """ARI, VI, negative VI and BCubed of ``pred`` against ``truth``."""
    t = contingency(truth, pred)
    p, r, f = bcubed(t)
    v = vi(t)
    return {
        "ari": ari(t),
        "vi": v,
        "neg_vi": 0.0 - v,
        "bcubed_p": p,
        "bcubed_r": r,
        "bcubed_f": f,
    }
