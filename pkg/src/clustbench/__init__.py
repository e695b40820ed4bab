"""Calibrated internal and external cluster validation for benchmark studies."""

from .calibration import (
    CalibratedIndex,
    EnsembleSpec,
    calibrate,
    dmode_aggregate,
    generate_ensemble,
    rand_average_distances,
    rand_farthest_neighbour,
    rand_kcentroids,
    rand_nearest_neighbour,
)
from .clusterers import (
    PAM,
    Agglomerative,
    ClusteringResult,
    Dendrogram,
    KMeans,
    cut,
    hclust,
    ingest_partition,
    kmeans,
    pam,
)
from .data import (
    DataError,
    Dataset,
    DistanceMatrix,
    MeanImputer,
    Partition,
    ZScoreScaler,
    euclidean_distances,
    impute_mean,
    load_csv,
    scale_zscore,
    validate_partition,
)
from .external import ContingencyTable, ari, bcubed, contingency, external_indexes, vi
from .harness import (
    BenchmarkConfig,
    IndexReport,
    MethodSummary,
    calibrate_reference,
    emit_reports,
    load_config,
    pca_method_map,
    run_benchmark,
    summarize,
)
from .internal import (
    InternalIndexVector,
    all_internal,
    asw,
    avewithin,
    centroid_representation,
    cvnnd,
    denscut,
    density_mode,
    entropy,
    kdnorm,
    kernel_density,
    maxdiameter,
    pearsongamma,
    sindex,
    widestgap,
)

__version__ = "0.1.0"

__all__ = [
    "Agglomerative",
    "all_internal",
    "ari",
    "asw",
    "avewithin",
    "bcubed",
    "BenchmarkConfig",
    "calibrate",
    "calibrate_reference",
    "CalibratedIndex",
    "centroid_representation",
    "ClusteringResult",
    "contingency",
    "ContingencyTable",
    "cut",
    "cvnnd",
    "DataError",
    "Dataset",
    "Dendrogram",
    "denscut",
    "density_mode",
    "DistanceMatrix",
    "dmode_aggregate",
    "emit_reports",
    "EnsembleSpec",
    "entropy",
    "euclidean_distances",
    "external_indexes",
    "generate_ensemble",
    "hclust",
    "impute_mean",
    "IndexReport",
    "ingest_partition",
    "InternalIndexVector",
    "kdnorm",
    "kernel_density",
    "KMeans",
    "kmeans",
    "load_config",
    "load_csv",
    "maxdiameter",
    "MeanImputer",
    "MethodSummary",
    "PAM",
    "pam",
    "Partition",
    "pca_method_map",
    "pearsongamma",
    "rand_average_distances",
    "rand_farthest_neighbour",
    "rand_kcentroids",
    "rand_nearest_neighbour",
    "run_benchmark",
    "scale_zscore",
    "sindex",
    "summarize",
    "validate_partition",
    "vi",
    "widestgap",
    "ZScoreScaler",
]
