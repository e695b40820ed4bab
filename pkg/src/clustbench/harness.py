"""Benchmark pipeline: cluster, calibrate, compare with truth, summarise, emit.

A run is described by a :class:`BenchmarkConfig`, usually loaded from a
YAML (or JSON) file with :func:`load_config`::

    master_seed: 1            # seeds every method and ensemble stream
    output_dir: results       # relative to the config file
    jobs: 1                   # datasets evaluated in parallel
    methods: [kmeans, pam, single, average, complete]
    kmeans_restarts: 10
    ensemble:
      per_algorithm: 50       # 4 generators -> 200 random clusterings
      seed: 1                 # optional, defaults to master_seed
    index_params:
      sindex_p: 0.1
      kernel_p: 0.1
      cvnnd_k: 2
    datasets:
      - path: data/iris.csv
        id: iris              # optional, defaults to the file stem
        truth_column: species # optional; name or 0-based position
        scale: zscore         # zscore (default) or none
        K: 3                  # optional if a truth column is given
        partitions:           # optional externally computed clusterings
          mclust: parts/iris_mclust.txt

Missing cells are mean-imputed before scaling.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from .calibration import (
    CalibrationError,
    EnsembleSpec,
    dmode_aggregate,
    ensemble_labels,
    generate_ensemble,
    pool_stats,
    standardise,
)
from .clusterers import BUILTIN_METHODS, ingest_partition, run_method
from .data import (
    DataError,
    Dataset,
    DistanceMatrix,
    Partition,
    euclidean_distances,
    impute_mean,
    load_csv,
    scale_zscore,
)
from .external import external_indexes
from .internal import (
    INDEX_NAMES,
    IndexParams,
    KernelDensity,
    UndefinedIndexError,
    all_internal,
    kernel_density,
    orientation,
)

logger = logging.getLogger(__name__)

EXTERNAL_NAMES = ("ari", "vi", "neg_vi", "bcubed_p", "bcubed_r", "bcubed_f")
CALIBRATED_NAMES = INDEX_NAMES + ("dmode",)
# the eleven aspects shown in the method map
PCA_INDEXES = (
    "avewithin",
    "maxdiameter",
    "widestgap",
    "sindex",
    "pearsongamma",
    "dmode",
    "denscut",
    "entropy",
    "kdnorm",
    "cvnnd",
    "asw",
)


class ConfigError(ValueError):
    """The benchmark configuration is invalid."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DatasetEntry:
    path: str
    id: str
    truth_column: object = None
    scale: str = "zscore"
    K: Optional[int] = None
    partitions: tuple = ()


@dataclass(frozen=True)
class BenchmarkConfig:
    datasets: tuple
    methods: tuple = BUILTIN_METHODS
    per_algorithm: int = 50
    ensemble_seed: Optional[int] = None
    index_params: IndexParams = IndexParams()
    output_dir: str = "results"
    master_seed: int = 0
    kmeans_restarts: int = 10
    jobs: int = 1

    def echo(self) -> dict:
        out = asdict(self)
        out["datasets"] = [asdict(d) for d in self.datasets]
        for d in out["datasets"]:
            d["partitions"] = dict(d["partitions"])
        out["methods"] = list(self.methods)
        out.pop("jobs")
        out.pop("output_dir")
        return out


def _resolve(base: Path, p) -> str:
    path = Path(p)
    return str(path if path.is_absolute() else base / path)


def config_from_dict(raw: dict, base_dir=".") -> BenchmarkConfig:
    """Validate a parsed configuration mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    base = Path(base_dir)
    known = {
        "datasets", "methods", "ensemble", "index_params", "output_dir",
        "master_seed", "kmeans_restarts", "jobs",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    methods = tuple(raw.get("methods", BUILTIN_METHODS))
    bad = [m for m in methods if m not in BUILTIN_METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; built-ins are {list(BUILTIN_METHODS)}")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods are listed more than once")

    entries = raw.get("datasets")
    if not entries:
        raise ConfigError("at least one dataset is required")
    datasets = []
    seen = set()
    for i, e in enumerate(entries):
        if isinstance(e, str):
            e = {"path": e}
        if not isinstance(e, dict) or "path" not in e:
            raise ConfigError(f"dataset #{i} needs a 'path'")
        extra = set(e) - {"path", "id", "truth_column", "scale", "K", "partitions"}
        if extra:
            raise ConfigError(f"dataset #{i}: unknown keys {sorted(extra)}")
        ds_id = str(e.get("id") or Path(e["path"]).stem)
        if ds_id in seen:
            raise ConfigError(f"duplicate dataset id {ds_id!r}")
        seen.add(ds_id)
        scale = e.get("scale", "zscore")
        if scale not in ("zscore", "none"):
            raise ConfigError(f"dataset {ds_id!r}: scale must be 'zscore' or 'none'")
        K = e.get("K")
        if K is not None and (not isinstance(K, int) or K < 2):
            raise ConfigError(f"dataset {ds_id!r}: K must be an integer >= 2")
        if K is None and e.get("truth_column") is None:
            raise ConfigError(f"dataset {ds_id!r}: give K or a truth_column")
        parts = e.get("partitions") or {}
        if not isinstance(parts, dict):
            raise ConfigError(f"dataset {ds_id!r}: partitions must map names to files")
        datasets.append(
            DatasetEntry(
                path=_resolve(base, e["path"]),
                id=ds_id,
                truth_column=e.get("truth_column"),
                scale=scale,
                K=K,
                partitions=tuple(
                    (str(name), _resolve(base, p)) for name, p in sorted(parts.items())
                ),
            )
        )
    if not methods and not any(d.partitions for d in datasets):
        raise ConfigError("no clustering methods configured")

    ens = raw.get("ensemble") or {}
    extra = set(ens) - {"per_algorithm", "seed"}
    if extra:
        raise ConfigError(f"ensemble: unknown keys {sorted(extra)}")
    per_algorithm = int(ens.get("per_algorithm", 50))
    if per_algorithm < 1:
        raise ConfigError("ensemble.per_algorithm must be >= 1")
    ip = raw.get("index_params") or {}
    extra = set(ip) - {"sindex_p", "kernel_p", "cvnnd_k"}
    if extra:
        raise ConfigError(f"index_params: unknown keys {sorted(extra)}")
    params = IndexParams(
        sindex_p=float(ip.get("sindex_p", 0.1)),
        kernel_p=float(ip.get("kernel_p", 0.1)),
        cvnnd_k=int(ip.get("cvnnd_k", 2)),
    )
    if not (0 < params.sindex_p <= 1 and 0 < params.kernel_p <= 1 and params.cvnnd_k >= 1):
        raise ConfigError("index_params out of range")
    restarts = int(raw.get("kmeans_restarts", 10))
    jobs = int(raw.get("jobs", 1))
    if restarts < 1 or jobs < 1:
        raise ConfigError("kmeans_restarts and jobs must be >= 1")
    return BenchmarkConfig(
        datasets=tuple(datasets),
        methods=methods,
        per_algorithm=per_algorithm,
        ensemble_seed=ens.get("seed"),
        index_params=params,
        output_dir=_resolve(base, raw.get("output_dir", "results")),
        master_seed=int(raw.get("master_seed", 0)),
        kmeans_restarts=restarts,
        jobs=jobs,
    )


def load_config(path) -> BenchmarkConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return config_from_dict(raw, path.parent)


# --------------------------------------------------------------------------
# reports


@dataclass
class IndexReport:
    dataset: str
    method: str
    K: int
    raw: Dict[str, float]
    calibrated: Dict[str, Optional[float]]
    dmode: Optional[float]
    external: Optional[Dict[str, float]] = None
    timing: float = 0.0
    notes: Dict[str, str] = field(default_factory=dict)

    def value(self, name: str) -> Optional[float]:
        if name == "dmode":
            return self.dmode
        if name in EXTERNAL_NAMES:
            return None if self.external is None else self.external.get(name)
        return self.calibrated.get(name)


@dataclass
class DatasetOutcome:
    dataset: str
    reports: List[IndexReport] = field(default_factory=list)
    pool: Dict[str, dict] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    info: Dict[str, object] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class BenchmarkRun:
    config: BenchmarkConfig
    outcomes: List[DatasetOutcome]

    @property
    def reports(self) -> List[IndexReport]:
        return [r for o in self.outcomes for r in o.reports]

    @property
    def failures(self) -> List[DatasetOutcome]:
        return [o for o in self.outcomes if o.error is not None]

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from integer parts."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def prepare_dataset(entry: DatasetEntry) -> Dataset:
    d = load_csv(entry.path, entry.truth_column, name=entry.id)
    d = impute_mean(d)
    if entry.scale == "zscore":
        d = scale_zscore(d)
    return d


def resolve_k(entry: DatasetEntry, d: Dataset) -> int:
    """Configured K, else the number of truth classes."""
    if entry.K is not None:
        K = entry.K
    elif d.truth is not None:
        K = d.truth.K
    else:
        raise ConfigError(f"dataset {entry.id!r}: no K and no truth labels")
    if K > d.n:
        raise ConfigError(f"dataset {entry.id!r}: K={K} exceeds n={d.n}")
    return K


@dataclass
class CalibrationPool:
    """Pooled mean / sd per index for one dataset."""

    stats: Dict[str, tuple]
    sizes: Dict[str, int]
    errors: Dict[str, str]

    @classmethod
    def from_vectors(cls, vectors: Sequence) -> "CalibrationPool":
        stats, sizes, errors = {}, {}, {}
        for name in INDEX_NAMES:
            vals = np.array([getattr(v, name) for v in vectors], dtype=float)
            sizes[name] = int((~np.isnan(vals)).sum())
            try:
                stats[name] = pool_stats(vals, orientation(name))
            except CalibrationError as exc:
                errors[name] = str(exc)
        return cls(stats, sizes, errors)

    def calibrate(self, vector) -> Dict[str, Optional[float]]:
        out = {}
        for name in INDEX_NAMES:
            raw = getattr(vector, name)
            if name in self.stats and not np.isnan(raw):
                out[name] = standardise(raw, *self.stats[name], orientation(name))
            else:
                out[name] = None
        return out

    def as_dict(self) -> dict:
        return {
            name: {
                "mean": self.stats[name][0] if name in self.stats else None,
                "sd": self.stats[name][1] if name in self.stats else None,
                "size": self.sizes[name],
                "error": self.errors.get(name),
            }
            for name in INDEX_NAMES
        }


def _dmode(cal: Dict[str, Optional[float]]) -> Optional[float]:
    if cal.get("densdec") is None or cal.get("highdgap") is None:
        return None
    return dmode_aggregate(cal["densdec"], cal["highdgap"])


def _notes(vector) -> Dict[str, str]:
    return dict(sorted(vector.errors.items()))


def make_report(
    dataset_id: str,
    method: str,
    partition: Partition,
    vector,
    pool: CalibrationPool,
    truth: Optional[Partition],
    timing: float = 0.0,
) -> IndexReport:
    cal = pool.calibrate(vector)
    notes = _notes(vector)
    for name, msg in pool.errors.items():
        notes.setdefault(name, f"not calibrated: {msg}")
    return IndexReport(
        dataset=dataset_id,
        method=method,
        K=partition.K,
        raw=vector.as_dict(),
        calibrated=cal,
        dmode=_dmode(cal),
        external=None if truth is None else external_indexes(partition, truth),
        timing=timing,
        notes=notes,
    )


def calibrate_reference(
    dataset: Dataset,
    dm: DistanceMatrix,
    pool: CalibrationPool,
    params: IndexParams = IndexParams(),
    kd: Optional[KernelDensity] = None,
) -> Optional[IndexReport]:
    """Indexes of the truth partition, calibrated against an existing pool.

    The truth is not added to the pool. Returns None when the dataset has
    no truth labels.
    """
    truth = dataset.truth
    if truth is None:
        logger.info("dataset %s has no truth labels; reference row skipped", dataset.name)
        return None
    t0 = time.perf_counter()
    vector = all_internal(dataset, dm, truth, params, kd=kd)
    return make_report(
        dataset.name, "truth", truth, vector, pool, truth, time.perf_counter() - t0
    )


def evaluate_dataset(cfg: BenchmarkConfig, index: int) -> DatasetOutcome:
    """Full pipeline for one dataset; errors are captured in the outcome."""
    entry = cfg.datasets[index]
    outcome = DatasetOutcome(entry.id)
    try:
        _evaluate(cfg, index, entry, outcome)
    except (DataError, ConfigError, UndefinedIndexError, ValueError, OSError) as exc:
        logger.error("dataset %s failed: %s", entry.id, exc)
        outcome.reports = []
        outcome.error = f"{type(exc).__name__}: {exc}"
    return outcome


def _evaluate(cfg, index, entry, outcome):
    d = prepare_dataset(entry)
    K = resolve_k(entry, d)
    dm = euclidean_distances(d)
    method_seed = derive_seed(cfg.master_seed, index, 0)
    ens_seed = derive_seed(
        cfg.master_seed if cfg.ensemble_seed is None else cfg.ensemble_seed, index, 1
    )
    outcome.seeds = {"methods": method_seed, "ensemble": ens_seed}
    outcome.info = {
        "n": d.n,
        "p": d.p,
        "K": K,
        "has_truth": d.truth is not None,
        "preprocessing": list(d.preprocessing),
    }

    clusterings = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        res = run_method(method, d, dm, K, method_seed, cfg.kmeans_restarts)
        clusterings.append((method, res.partition, time.perf_counter() - t0))
    for name, path in entry.partitions:
        res = ingest_partition(path, d.n, name)
        clusterings.append((res.method_name, res.partition, 0.0))
    if not clusterings:
        raise ConfigError("no clusterings to evaluate")

    spec = EnsembleSpec(K=K, per_algorithm=cfg.per_algorithm, master_seed=ens_seed)
    ensemble = generate_ensemble(dm, spec)
    try:
        kd = kernel_density(dm, cfg.index_params.kernel_p)
    except UndefinedIndexError as exc:
        logger.warning("dataset %s: %s", entry.id, exc)
        kd = None

    method_vectors = []
    for method, part, elapsed in clusterings:
        t0 = time.perf_counter()
        vector = all_internal(d, dm, part, cfg.index_params, kd=kd)
        method_vectors.append((vector, elapsed + time.perf_counter() - t0))
    ensemble_vectors = [all_internal(d, dm, part, cfg.index_params, kd=kd) for part in ensemble]
    pool = CalibrationPool.from_vectors(ensemble_vectors + [v for v, _ in method_vectors])
    outcome.pool = pool.as_dict()
    outcome.info["pool_members"] = len(ensemble) + len(clusterings)
    outcome.info["ensemble"] = ensemble_labels(spec)

    for (method, part, _), (vector, elapsed) in zip(clusterings, method_vectors):
        outcome.reports.append(
            make_report(entry.id, method, part, vector, pool, d.truth, elapsed)
        )
    ref = calibrate_reference(d, dm, pool, cfg.index_params, kd=kd)
    if ref is not None:
        outcome.reports.append(ref)


def run_benchmark(cfg: BenchmarkConfig, jobs: Optional[int] = None) -> BenchmarkRun:
    """Evaluate every configured dataset; failures are isolated per dataset."""
    jobs = cfg.jobs if jobs is None else jobs
    indices = range(len(cfg.datasets))
    if jobs > 1 and len(cfg.datasets) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(evaluate_dataset, [cfg] * len(indices), indices))
    else:
        outcomes = [evaluate_dataset(cfg, i) for i in indices]
    return BenchmarkRun(cfg, outcomes)


# --------------------------------------------------------------------------
# aggregation


@dataclass
class MethodSummary:
    method: str
    means: Dict[str, Optional[float]]
    counts: Dict[str, int]


def summarize(reports: Sequence[IndexReport], names: Sequence[str] = CALIBRATED_NAMES + EXTERNAL_NAMES) -> List[MethodSummary]:
    """Per-method means over datasets, skipping missing values.

    Methods appear in order of first occurrence.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to summarise")
    order: List[str] = []
    for r in reports:
        if r.method not in order:
            order.append(r.method)
    out = []
    for method in order:
        rows = [r for r in reports if r.method == method]
        means, counts = {}, {}
        for name in names:
            vals = [r.value(name) for r in rows]
            vals = [v for v in vals if v is not None and not np.isnan(v)]
            counts[name] = len(vals)
            means[name] = float(np.mean(vals)) if vals else None
        out.append(MethodSummary(method, means, counts))
    return out


@dataclass
class MethodMap:
    methods: List[str]
    indexes: List[str]
    scores: np.ndarray
    loadings: np.ndarray
    explained_variance: np.ndarray
    total_variance: float
    note: Optional[str] = None

    @property
    def explained_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance


def pca_method_map(
    summaries: Sequence[MethodSummary],
    indexes: Sequence[str] = PCA_INDEXES,
    exclude: Sequence[str] = ("truth",),
    n_components: int = 2,
) -> MethodMap:
    """Principal components of the method x mean-calibrated-index matrix.

    Indexes missing for any method are dropped. Scores are the projections
    of the column-centred matrix; ``explained_variance`` uses the n - 1
    denominator and sums, over all components, to the total variance.
    """
    rows = [s for s in summaries if s.method not in exclude]
    if len(rows) < 2:
        raise ValueError("the method map needs at least two methods")
    usable = [i for i in indexes if all(s.means.get(i) is not None for s in rows)]
    if len(usable) < 2:
        raise ValueError("the method map needs at least two indexes present for all methods")
    M = np.array([[s.means[i] for i in usable] for s in rows])
    centred = M - M.mean(axis=0)
    U, S, Vt = np.linalg.svd(centred, full_matrices=False)
    # deterministic sign: largest-magnitude loading of each component positive
    signs = np.sign(Vt[np.arange(Vt.shape[0]), np.argmax(np.abs(Vt), axis=1)])
    signs[signs == 0] = 1.0
    Vt = Vt * signs[:, None]
    U = U * signs[None, :]
    var = S**2 / (M.shape[0] - 1)
    total = float((centred**2).sum() / (M.shape[0] - 1))
    rank = int((S > 1e-10 * max(S.max(), 1.0)).sum())
    k = min(n_components, len(S))
    note = None
    if rank < 2:
        k = 1
        note = f"centred matrix has rank {rank}; only one component is meaningful"
    return MethodMap(
        methods=[s.method for s in rows],
        indexes=usable,
        scores=(U * S)[:, :k],
        loadings=Vt[:k].T,
        explained_variance=var,
        total_variance=total,
        note=note,
    )


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "NA"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if np.isnan(f) else f
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_csv(path: Path, header, rows):
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def wide_columns() -> List[str]:
    return (
        ["method", "K"]
        + [f"raw_{n}" for n in INDEX_NAMES]
        + [f"cal_{n}" for n in INDEX_NAMES]
        + ["dmode"]
        + list(EXTERNAL_NAMES)
    )


def _wide_row(r: IndexReport) -> List[str]:
    ext = r.external or {}
    return (
        [r.method, str(r.K)]
        + [_fmt(r.raw.get(n)) for n in INDEX_NAMES]
        + [_fmt(r.calibrated.get(n)) for n in INDEX_NAMES]
        + [_fmt(r.dmode)]
        + [_fmt(ext.get(n)) for n in EXTERNAL_NAMES]
    )


def emit_reports(
    run: BenchmarkRun,
    summaries: Optional[List[MethodSummary]] = None,
    output_dir=None,
) -> List[Path]:
    """Write per-dataset tables, plot data and a JSON report.

    Files
    -----
    ``<dataset>_indexes.csv``
        One row per method (and ``truth``): raw, calibrated and external indexes.
    ``parallel_coordinates.csv``
        Long format (dataset, method, index, value) of calibrated indexes.
    ``summary.csv``
        Per-method means of calibrated and external indexes.
    ``pca_map.csv``, ``pca_loadings.csv``, ``pca_variance.csv``
        Method map coordinates, loadings and explained variance.
    ``report.json``
        Everything above at full precision, with the configuration and seeds.

    Timings are not written so that reruns give identical bytes.
    """
    cfg = run.config
    if not cfg.methods and not any(d.partitions for d in cfg.datasets):
        raise ConfigError("no clustering methods configured")
    out = Path(output_dir or cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    reports = run.reports
    if summaries is None and reports:
        summaries = summarize(reports)
    written = []

    for o in run.outcomes:
        if o.error is not None:
            continue
        path = out / f"{o.dataset}_indexes.csv"
        _write_csv(path, wide_columns(), [_wide_row(r) for r in o.reports])
        written.append(path)

    long_rows = []
    for r in reports:
        for name in CALIBRATED_NAMES:
            v = r.value(name)
            if v is not None:
                long_rows.append([r.dataset, r.method, name, _fmt(v)])
    path = out / "parallel_coordinates.csv"
    _write_csv(path, ["dataset", "method", "index", "value"], long_rows)
    written.append(path)

    method_map = None
    map_error = None
    if summaries:
        names = list(CALIBRATED_NAMES + EXTERNAL_NAMES)
        rows = [
            [s.method, name, _fmt(s.means[name]), str(s.counts[name])]
            for s in summaries
            for name in names
        ]
        path = out / "summary.csv"
        _write_csv(path, ["method", "index", "mean", "count"], rows)
        written.append(path)
        try:
            method_map = pca_method_map(summaries)
        except ValueError as exc:
            map_error = str(exc)
            logger.warning("method map skipped: %s", exc)
    if method_map is not None:
        k = method_map.scores.shape[1]
        pcs = [f"pc{i + 1}" for i in range(k)]
        path = out / "pca_map.csv"
        _write_csv(
            path,
            ["method"] + pcs,
            [[m] + [_fmt(v) for v in row] for m, row in zip(method_map.methods, method_map.scores)],
        )
        written.append(path)
        path = out / "pca_loadings.csv"
        _write_csv(
            path,
            ["index"] + pcs,
            [[i] + [_fmt(v) for v in row] for i, row in zip(method_map.indexes, method_map.loadings)],
        )
        written.append(path)
        path = out / "pca_variance.csv"
        _write_csv(
            path,
            ["component", "variance", "ratio"],
            [
                [f"pc{i + 1}", _fmt(v), _fmt(r)]
                for i, (v, r) in enumerate(
                    zip(method_map.explained_variance, method_map.explained_ratio)
                )
            ],
        )
        written.append(path)

    doc = {
        "config": cfg.echo(),
        "datasets": [
            {
                "id": o.dataset,
                "error": o.error,
                "seeds": o.seeds,
                "info": o.info,
                "pool": o.pool,
                "reports": [
                    {
                        "method": r.method,
                        "K": r.K,
                        "raw": r.raw,
                        "calibrated": r.calibrated,
                        "dmode": r.dmode,
                        "external": r.external,
                        "notes": r.notes,
                    }
                    for r in o.reports
                ],
            }
            for o in run.outcomes
        ],
        "summary": [asdict(s) for s in summaries or []],
        "method_map": None
        if method_map is None
        else {
            "methods": method_map.methods,
            "indexes": method_map.indexes,
            "scores": method_map.scores,
            "loadings": method_map.loadings,
            "explained_variance": method_map.explained_variance,
            "total_variance": method_map.total_variance,
            "note": method_map.note,
        },
        "method_map_error": map_error,
    }
    path = out / "report.json"
    try:
        path.write_text(json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    written.append(path)
    return written
