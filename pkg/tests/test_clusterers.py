import itertools

import numpy as np
import pytest
from scipy.cluster.hierarchy import linkage as scipy_linkage

from clustbench.clusterers import (
    PAM,
    Agglomerative,
    KMeans,
    _lloyd,
    _nearest_two,
    _swap_deltas,
    cut,
    hclust,
    ingest_partition,
    kmeans,
    pam,
)
from clustbench.data import DataError, euclidean_distances
from clustbench.external import ari, contingency

from conftest import two_blobs

LINE = np.array([0.0, 1.0, 10.0, 11.0])


def brute_best_two_split(X):
    """Minimum WCSS over all 2-partitions, enumerated with point 0 in cluster 0."""
    n = len(X)
    masks = np.arange(1, 2 ** (n - 1))
    bits = ((masks[:, None] >> np.arange(n - 1)) & 1).astype(bool)
    member = np.column_stack([np.zeros(len(masks), dtype=bool), bits])
    total_sq = (X**2).sum()
    size_b = member.sum(axis=1)
    size_a = n - size_b
    sum_b = member.astype(float) @ X
    sum_a = X.sum(axis=0) - sum_b
    # WCSS = sum |x|^2 - |A| |mean_A|^2 - |B| |mean_B|^2
    values = total_sq - (sum_a**2).sum(axis=1) / size_a - (sum_b**2).sum(axis=1) / size_b
    best = int(np.argmin(values))
    return values[best], member[best].astype(int)


class TestKMeans:
    def test_line(self):
        res = kmeans(LINE, 2, restarts=10, seed=0)
        best, arg = brute_best_two_split(LINE[:, None])
        assert res.objective == pytest.approx(best) == pytest.approx(1.0)
        assert ari(contingency(res.partition, arg)) == 1.0

    def test_k_equals_n(self):
        res = kmeans(LINE, 4, seed=3)
        assert res.objective == 0
        assert res.partition.K == 4

    @pytest.mark.parametrize("seed", range(5))
    def test_blobs_every_seed(self, seed):
        X, truth = two_blobs(n=20, seed=7)
        best, arg = brute_best_two_split(X)
        res = kmeans(X, 2, seed=seed)
        assert ari(contingency(res.partition, truth)) == 1.0
        assert ari(contingency(arg, truth)) == 1.0
        assert res.objective == pytest.approx(best)

    def test_objective_monotone_and_best_of(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(80, 3))
        objs = []
        for r in range(6):
            _, obj, trace = _lloyd(X, 4, np.random.default_rng(11 + r))
            assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))
            objs.append(obj)
        res = kmeans(X, 4, restarts=6, seed=11)
        assert res.objective == pytest.approx(min(objs))

    def test_empty_cluster_repair(self):
        # duplicates make empty clusters likely; K clusters must still come out
        X = np.repeat(np.array([[0.0], [5.0]]), 10, axis=0)
        X = np.vstack([X, [[2.5]]])
        for seed in range(10):
            res = kmeans(X, 3, restarts=1, seed=seed)
            assert res.partition.K == 3

    def test_deterministic(self):
        X, _ = two_blobs(n=50, sep=1.0)
        a, b = kmeans(X, 3, seed=5), kmeans(X, 3, seed=5)
        np.testing.assert_array_equal(a.partition.labels, b.partition.labels)
        assert a.objective == b.objective

    @pytest.mark.parametrize("K", [0, 5])
    def test_bad_k(self, K):
        with pytest.raises(ValueError):
            kmeans(LINE, K)


class TestPAM:
    def brute(self, D, K):
        return min(D[:, list(c)].min(axis=1).sum() for c in itertools.combinations(range(len(D)), K))

    def test_line(self):
        res = pam(euclidean_distances(LINE), 2)
        assert res.objective == pytest.approx(2.0)
        assert self.brute(euclidean_distances(LINE).square(), 2) == pytest.approx(2.0)
        np.testing.assert_array_equal(res.partition.labels, [1, 1, 2, 2])

    def test_k_equals_n(self):
        assert pam(euclidean_distances(LINE), 4).objective == 0

    def test_one_medoid(self):
        dm = euclidean_distances(np.array([0.0, 1.0, 2.0]))
        res = pam(dm, 1)
        assert res.objective == pytest.approx(2.0)
        assert self.brute(dm.square(), 1) == pytest.approx(2.0)

    def test_swap_deltas_match_recomputation(self):
        rng = np.random.default_rng(4)
        D = euclidean_distances(rng.normal(size=(25, 2))).square()
        medoids = np.array([0, 7, 19])
        idx, dn, ds = _nearest_two(D, medoids)
        deltas = _swap_deltas(D, medoids, idx, dn, ds)
        base = D[:, medoids].min(axis=1).sum()
        for i in range(3):
            for h in range(25):
                if h in medoids:
                    assert deltas[i, h] == np.inf
                    continue
                trial = medoids.copy()
                trial[i] = h
                assert deltas[i, h] == pytest.approx(D[:, trial].min(axis=1).sum() - base, abs=1e-9)

    def test_no_improving_swap_at_end(self):
        rng = np.random.default_rng(5)
        dm = euclidean_distances(rng.normal(size=(40, 2)))
        res = pam(dm, 4)
        D = dm.square()
        parts = res.partition
        medoids = [
            m[np.argmin(D[np.ix_(m, m)].sum(axis=0))] for m in (parts.members(k) for k in range(1, 5))
        ]
        assert D[:, medoids].min(axis=1).sum() == pytest.approx(res.objective)
        for i in range(4):
            for h in range(40):
                trial = list(medoids)
                trial[i] = h
                assert D[:, trial].min(axis=1).sum() >= res.objective - 1e-9

    def test_too_many(self):
        with pytest.raises(ValueError):
            pam(euclidean_distances(LINE), 5)


class TestHclust:
    def test_single_heights(self):
        np.testing.assert_array_equal(hclust(euclidean_distances(LINE), "single").heights, [1, 1, 9])

    def test_complete_heights(self):
        np.testing.assert_array_equal(hclust(euclidean_distances(LINE), "complete").heights, [1, 1, 11])

    def test_average_final(self):
        assert hclust(euclidean_distances(LINE), "average").heights[-1] == pytest.approx(10.0)

    @pytest.mark.parametrize("method", ["single", "average", "complete"])
    def test_matches_scipy(self, method):
        rng = np.random.default_rng(9)
        dm = euclidean_distances(rng.normal(size=(120, 4)))
        ours = hclust(dm, method)
        ref = scipy_linkage(dm.entries, method)
        np.testing.assert_allclose(ours.heights, ref[:, 2], rtol=1e-12)
        np.testing.assert_array_equal(ours.merges, ref[:, :2].astype(int))
        np.testing.assert_array_equal(ours.sizes, ref[:, 3].astype(int))
        assert (np.diff(ours.heights) >= -1e-12).all()

    def test_tie_break_lowest_pair(self):
        # equally spaced points: every adjacent pair ties at distance 1
        dg = hclust(euclidean_distances(np.arange(5.0)), "single")
        assert tuple(dg.merges[0]) == (0, 1)

    def test_bad_linkage(self):
        with pytest.raises(ValueError):
            hclust(euclidean_distances(LINE), "ward")


class TestCut:
    def test_two(self):
        p = cut(hclust(euclidean_distances(LINE), "single"), 2)
        np.testing.assert_array_equal(p.labels, [1, 1, 2, 2])

    def test_extremes(self):
        dg = hclust(euclidean_distances(LINE), "single")
        assert cut(dg, 1).K == 1
        p = cut(dg, 4)
        assert p.K == 4 and (p.sizes == 1).all()

    def test_out_of_range(self):
        dg = hclust(euclidean_distances(LINE), "single")
        with pytest.raises(ValueError):
            cut(dg, 5)

    @pytest.mark.parametrize("seed", range(8))
    def test_single_linkage_mst_gap(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(5, 12)
        X = rng.normal(size=(n, 2))
        D = euclidean_distances(X).square()
        # Kruskal MST written independently of the clustering code
        edges = sorted((D[i, j], i, j) for i in range(n) for j in range(i + 1, n))
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        mst = []
        for w, i, j in edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
                mst.append(w)
        mst.sort(reverse=True)
        dg = hclust(euclidean_distances(X), "single")
        for K in range(2, n):
            labels = cut(dg, K).labels
            sep = min(D[i, j] for i in range(n) for j in range(n) if labels[i] != labels[j])
            assert sep == pytest.approx(mst[K - 2])

    @pytest.mark.parametrize("seed", range(5))
    def test_linkages_agree_on_separated_groups(self, seed):
        rng = np.random.default_rng(seed)
        groups = rng.integers(2, 4)
        pts = np.vstack([rng.uniform(0, 1, size=(4, 2)) + 100 * g for g in range(groups)])
        truth = np.repeat(np.arange(groups), 4)
        dm = euclidean_distances(pts)
        for method in ("single", "average", "complete"):
            assert ari(contingency(cut(hclust(dm, method), groups), truth)) == 1.0


class TestIngest:
    def test_parse(self, tmp_path):
        path = tmp_path / "mclust.txt"
        path.write_text("1\n1\n2\n")
        res = ingest_partition(path, 3)
        assert res.partition.K == 2
        assert res.method_name == "external:mclust"

    def test_length_mismatch(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("1\n2\n")
        with pytest.raises(DataError):
            ingest_partition(path, 3)

    def test_empty(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("")
        with pytest.raises(DataError):
            ingest_partition(path, 3)

    def test_letters(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("a\na\nb\nc\n")
        res = ingest_partition(path, 4, "specc")
        assert res.partition.K == 3
        np.testing.assert_array_equal(res.partition.sizes, [2, 1, 1])
        assert res.method_name == "external:specc"


class TestEstimators:
    def test_kmeans_estimator(self):
        X, truth = two_blobs(n=60)
        est = KMeans(n_clusters=2, random_state=1)
        labels = est.fit_predict(X)
        assert ari(contingency(labels, truth)) == 1.0
        np.testing.assert_array_equal(est.predict(X), labels)
        assert est.get_params() == {"n_clusters": 2, "restarts": 10, "random_state": 1}

    def test_pam_estimator(self):
        X, truth = two_blobs(n=60)
        est = PAM(n_clusters=2).fit(X)
        assert ari(contingency(est.labels_, truth)) == 1.0
        np.testing.assert_array_equal(est.predict(X), est.labels_)

    def test_agglomerative_clone(self):
        from sklearn.base import clone

        est = clone(Agglomerative(n_clusters=2, linkage="complete"))
        X, truth = two_blobs(n=40)
        assert ari(contingency(est.fit_predict(X), truth)) == 1.0
