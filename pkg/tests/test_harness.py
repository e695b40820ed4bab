import csv
import json

import numpy as np
import pytest
import yaml

from clustbench.calibration import CalibrationError, pool_stats
from clustbench.data import euclidean_distances, load_csv
from clustbench.harness import (
    CALIBRATED_NAMES,
    PCA_INDEXES,
    BenchmarkConfig,
    CalibrationPool,
    ConfigError,
    DatasetEntry,
    IndexReport,
    MethodSummary,
    calibrate_reference,
    config_from_dict,
    emit_reports,
    evaluate_dataset,
    load_config,
    pca_method_map,
    resolve_k,
    run_benchmark,
    summarize,
)
from clustbench.internal import INDEX_NAMES, all_internal, orientation

from conftest import two_blobs, write_dataset


@pytest.fixture
def blobs_csv(tmp_path):
    X, truth = two_blobs(n=60, sep=10.0, seed=3)
    return write_dataset(tmp_path / "blobs.csv", X, truth)


def config(path, **kw):
    raw = {
        "datasets": [{"path": str(path), "truth_column": "class"}],
        "ensemble": {"per_algorithm": 3},
        "master_seed": 5,
    }
    raw.update(kw)
    return config_from_dict(raw, path.parent)


class TestConfig:
    def test_defaults(self, blobs_csv):
        cfg = config(blobs_csv)
        assert cfg.methods == ("kmeans", "pam", "single", "average", "complete")
        assert cfg.datasets[0].id == "blobs"
        assert cfg.index_params.kernel_p == 0.1

    def test_yaml_relative_paths(self, tmp_path, blobs_csv):
        (tmp_path / "cfg.yaml").write_text(
            yaml.safe_dump({"datasets": [{"path": "blobs.csv", "K": 2}], "output_dir": "out"})
        )
        cfg = load_config(tmp_path / "cfg.yaml")
        assert cfg.datasets[0].path == str(tmp_path / "blobs.csv")
        assert cfg.output_dir == str(tmp_path / "out")

    @pytest.mark.parametrize(
        "patch, match",
        [
            ({"methods": ["ward"]}, "unknown methods"),
            ({"methods": ["pam", "pam"]}, "more than once"),
            ({"methods": []}, "no clustering methods"),
            ({"datasets": []}, "at least one dataset"),
            ({"colour": 1}, "unknown configuration keys"),
            ({"ensemble": {"per_algorithm": 0}}, "per_algorithm"),
            ({"ensemble": {"size": 3}}, "ensemble"),
            ({"index_params": {"kernel_p": 2}}, "out of range"),
            ({"datasets": [{"path": "a.csv"}]}, "give K or a truth_column"),
            ({"datasets": [{"path": "a.csv", "K": 1}]}, "K must be"),
            ({"datasets": [{"path": "a.csv", "K": 2, "scale": "minmax"}]}, "scale"),
            ({"datasets": [{"path": "a.csv", "K": 2}, {"path": "b/a.csv", "K": 2}]}, "duplicate"),
        ],
    )
    def test_invalid(self, blobs_csv, patch, match):
        with pytest.raises(ConfigError, match=match):
            config(blobs_csv, **patch)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.yaml")
        (tmp_path / "bad.yaml").write_text("datasets: [unclosed")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.yaml")

    def test_echo_has_no_machine_specific_fields(self, blobs_csv):
        echo = config(blobs_csv).echo()
        assert "jobs" not in echo and "output_dir" not in echo
        json.dumps(echo)


class TestResolveK:
    def test_order(self, blobs_csv):
        d = load_csv(blobs_csv, "class")
        assert resolve_k(DatasetEntry(str(blobs_csv), "b", "class", K=4), d) == 4
        assert resolve_k(DatasetEntry(str(blobs_csv), "b", "class"), d) == 2
        with pytest.raises(ConfigError):
            resolve_k(DatasetEntry(str(blobs_csv), "b"), load_csv(blobs_csv))
        with pytest.raises(ConfigError, match="exceeds"):
            resolve_k(DatasetEntry(str(blobs_csv), "b", K=100), d)


class TestRun:
    def test_pool_size(self, blobs_csv):
        cfg = config(blobs_csv, methods=["kmeans"], ensemble={"per_algorithm": 1})
        run = run_benchmark(cfg)
        o = run.outcomes[0]
        assert o.info["pool_members"] == 5
        assert [r.method for r in o.reports] == ["kmeans", "truth"]
        assert o.pool["avewithin"]["size"] == 5

    def test_blobs_recovered(self, blobs_csv):
        # unscaled: z-scoring would shrink the gap relative to the noise axis
        ds = [{"path": str(blobs_csv), "truth_column": "class", "scale": "none"}]
        run = run_benchmark(config(blobs_csv, datasets=ds))
        for r in run.reports:
            assert r.external["ari"] == 1.0
            assert r.external["vi"] == 0.0
            assert r.external["bcubed_f"] == 1.0
        assert len(run) == 6 and not run.failures

    def test_calibration_identity(self, blobs_csv):
        cfg = config(blobs_csv)
        o = run_benchmark(cfg).outcomes[0]
        pool = o.pool
        for name in INDEX_NAMES:
            if pool[name]["sd"] is None:
                continue
            for r in o.reports:
                if r.method == "truth" or r.calibrated[name] is None:
                    continue
                sign = 1 if orientation(name) == "larger_better" else -1
                expect = (sign * r.raw[name] - pool[name]["mean"]) / pool[name]["sd"]
                assert r.calibrated[name] == pytest.approx(expect)

    def test_truth_row_matches_identical_method(self, blobs_csv):
        ds = [{"path": str(blobs_csv), "truth_column": "class", "scale": "none"}]
        o = run_benchmark(config(blobs_csv, datasets=ds)).outcomes[0]
        rows = {r.method: r for r in o.reports}
        # every method recovers the blobs exactly, so the truth row is identical
        for name in INDEX_NAMES:
            assert rows["truth"].calibrated[name] == rows["kmeans"].calibrated[name]
        assert rows["truth"].calibrated["avewithin"] > 0

    def test_failure_isolated(self, tmp_path, blobs_csv):
        bad = tmp_path / "bad.csv"
        bad.write_text("class,x\n1,1\n1,abc\n2,3\n")
        cfg = config_from_dict(
            {
                "datasets": [
                    {"path": str(bad), "truth_column": "class"},
                    {"path": str(blobs_csv), "truth_column": "class"},
                ],
                "ensemble": {"per_algorithm": 1},
            }
        )
        run = run_benchmark(cfg)
        assert [o.dataset for o in run.failures] == ["bad"]
        assert "DataError" in run.failures[0].error
        assert {r.dataset for r in run.reports} == {"blobs"}

    def test_external_partition(self, tmp_path, blobs_csv):
        _, truth = two_blobs(n=60, sep=10.0, seed=3)
        part = tmp_path / "mine.txt"
        part.write_text("\n".join(str(3 - t) for t in truth) + "\n")
        cfg = config_from_dict(
            {
                "datasets": [{"path": str(blobs_csv), "truth_column": "class",
                              "partitions": {"mine": str(part)}}],
                "methods": ["kmeans"],
                "ensemble": {"per_algorithm": 2},
            }
        )
        o = run_benchmark(cfg).outcomes[0]
        assert [r.method for r in o.reports] == ["kmeans", "external:mine", "truth"]
        assert o.info["pool_members"] == 8 + 2
        assert o.reports[1].external["ari"] == 1.0

    def test_no_truth(self, tmp_path):
        X, _ = two_blobs(n=40, seed=1)
        path = write_dataset(tmp_path / "plain.csv", X)
        cfg = config_from_dict({"datasets": [{"path": str(path), "K": 2}],
                                "methods": ["pam"], "ensemble": {"per_algorithm": 1}})
        o = evaluate_dataset(cfg, 0)
        assert [r.method for r in o.reports] == ["pam"]
        assert o.reports[0].external is None


class TestCalibrateReference:
    def test_skipped_without_truth(self, tmp_path):
        X, _ = two_blobs(n=30, seed=2)
        d = load_csv(write_dataset(tmp_path / "x.csv", X))
        dm = euclidean_distances(d)
        vec = all_internal(d, dm, np.repeat([1, 2], 15))
        pool = CalibrationPool.from_vectors([vec, all_internal(d, dm, np.tile([1, 2], 15))])
        assert calibrate_reference(d, dm, pool) is None

    def test_not_added_to_pool(self, blobs_csv):
        d = load_csv(blobs_csv, "class")
        dm = euclidean_distances(d)
        rng = np.random.default_rng(0)
        vectors = [all_internal(d, dm, rng.integers(1, 3, 60)) for _ in range(10)]
        pool = CalibrationPool.from_vectors(vectors)
        before = pool.as_dict()
        ref = calibrate_reference(d, dm, pool)
        assert pool.as_dict() == before
        assert ref.method == "truth" and ref.external["ari"] == 1.0
        assert ref.calibrated["avewithin"] > 0


def test_pool_marks_uncalibratable():
    class V:
        errors = {}

    vecs = []
    for i in range(3):
        v = V()
        for name in INDEX_NAMES:
            setattr(v, name, 1.0 if name == "entropy" else float(i))
        vecs.append(v)
    pool = CalibrationPool.from_vectors(vecs)
    assert "entropy" in pool.errors
    assert pool.calibrate(vecs[0])["entropy"] is None
    with pytest.raises(CalibrationError):
        pool_stats([1.0, 1.0, 1.0], "larger_better")


def _report(method, cal, dataset="d"):
    full = {n: cal.get(n) for n in INDEX_NAMES}
    return IndexReport(dataset, method, 2, {}, full, cal.get("dmode"))


class TestSummarize:
    def test_single(self):
        (s,) = summarize([_report("a", {"asw": 0.5, "entropy": -1.0})])
        assert s.means["asw"] == 0.5 and s.means["entropy"] == -1.0
        assert s.means["cvnnd"] is None and s.counts["cvnnd"] == 0

    def test_symmetric(self):
        (s,) = summarize([_report("a", {"asw": 0.7}, "d1"), _report("a", {"asw": -0.7}, "d2")])
        assert s.means["asw"] == 0 and s.counts["asw"] == 2

    def test_missing_policy(self):
        rows = [
            _report("a", {"asw": 1.0, "kdnorm": 2.0}, "d1"),
            _report("a", {"asw": 3.0}, "d2"),
            _report("b", {"asw": 0.0}, "d1"),
        ]
        a, b = summarize(rows)
        assert (a.method, b.method) == ("a", "b")
        assert a.means["kdnorm"] == 2.0 and a.counts["kdnorm"] == 1
        assert a.means["asw"] == 2.0 and a.counts["asw"] == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([])


def _summary(method, values):
    return MethodSummary(method, dict(zip(PCA_INDEXES, values)), {})


class TestPca:
    def test_properties(self):
        rng = np.random.default_rng(0)
        sums = [_summary(f"m{i}", rng.normal(size=len(PCA_INDEXES))) for i in range(5)]
        mm = pca_method_map(sums)
        L = mm.loadings
        assert abs(L[:, 0] @ L[:, 1]) < 1e-10
        M = np.array([[s.means[i] for i in PCA_INDEXES] for s in sums])
        C = M - M.mean(axis=0)
        assert abs(mm.explained_variance.sum() - np.trace(np.cov(C, rowvar=False))) < 1e-10
        np.testing.assert_allclose(mm.scores, C @ L, atol=1e-10)
        assert mm.explained_ratio.sum() == pytest.approx(1.0)

    def test_two_methods(self):
        sums = [_summary("a", np.arange(11.0)), _summary("b", np.arange(11.0) ** 2)]
        mm = pca_method_map(sums)
        assert mm.scores.shape == (2, 1) and mm.note
        assert mm.explained_variance[1] == pytest.approx(0, abs=1e-12)

    def test_truth_excluded_and_missing_dropped(self):
        rng = np.random.default_rng(1)
        sums = [_summary(m, rng.normal(size=11)) for m in ("a", "b", "c", "truth")]
        sums[1].means["kdnorm"] = None
        mm = pca_method_map(sums)
        assert mm.methods == ["a", "b", "c"] and "kdnorm" not in mm.indexes

    def test_too_few(self):
        with pytest.raises(ValueError):
            pca_method_map([_summary("a", np.ones(11))])


class TestEmit:
    def test_files_and_determinism(self, tmp_path, blobs_csv):
        cfg = config(blobs_csv)
        a = emit_reports(run_benchmark(cfg), output_dir=tmp_path / "a")
        b = emit_reports(run_benchmark(cfg), output_dir=tmp_path / "b")
        names = sorted(p.name for p in a)
        assert names == sorted(
            ["blobs_indexes.csv", "parallel_coordinates.csv", "summary.csv", "pca_map.csv",
             "pca_loadings.csv", "pca_variance.csv", "report.json"]
        )
        for p, q in zip(a, b):
            assert p.read_bytes() == q.read_bytes()

        with (tmp_path / "a" / "blobs_indexes.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert [r["method"] for r in rows] == ["kmeans", "pam", "single", "average", "complete", "truth"]
        assert "raw_asw" in rows[0] and "cal_asw" in rows[0] and "bcubed_f" in rows[0]
        # 6 significant digits
        assert all(len(r["raw_asw"].replace("-", "").replace(".", "").lstrip("0")) <= 6 for r in rows)

        with (tmp_path / "a" / "parallel_coordinates.csv").open() as fh:
            long = list(csv.DictReader(fh))
        assert len(long) <= 6 * len(CALIBRATED_NAMES)
        assert all(r["value"] != "NA" for r in long)

        doc = json.loads((tmp_path / "a" / "report.json").read_text())
        assert doc["config"]["master_seed"] == 5
        assert set(doc["datasets"][0]["seeds"]) == {"methods", "ensemble"}

    def test_empty_methods(self, tmp_path, blobs_csv):
        cfg = BenchmarkConfig(datasets=(DatasetEntry(str(blobs_csv), "b", "class"),), methods=())
        from clustbench.harness import BenchmarkRun

        out = tmp_path / "never"
        with pytest.raises(ConfigError):
            emit_reports(BenchmarkRun(cfg, []), output_dir=out)
        assert not out.exists()

    def test_missing_marked_na(self, tmp_path):
        # clusters of three points in 2-D leave kdnorm undefined
        X = np.array([[0, 0], [0, 1], [1, 0.3], [9, 9], [9, 10], [10, 9.2]])
        path = write_dataset(tmp_path / "tiny.csv", X, [1, 1, 1, 2, 2, 2])
        cfg = config(path, methods=["single", "pam"])
        run = run_benchmark(cfg)
        emit_reports(run, output_dir=tmp_path / "out")
        text = (tmp_path / "out" / "tiny_indexes.csv").read_text()
        assert "NA" in text
        r = run.reports[0]
        assert r.calibrated["kdnorm"] is None and "kdnorm" in r.notes
