"""scdkit: diachronic semantic change detection over embedding stores.

The package is organized in layers: immutable embedding stores with
bit-exact serialization (``store``), sense clustering (``cluster``), change
and polysemy metrics (``metrics``), significance testing and series
statistics (``stats``), dependency-frequency tabulation (``depfreq``), a
ground-truth synthetic corpus generator (``synthetic``), and a config-driven
pipeline with a ``scd`` command-line entry point (``pipeline``, ``cli``).
"""

__version__ = "0.1.0"

from .cluster import (
    AP_METHOD,
    KMEANS_METHOD,
    ClusterModel,
    ConvergenceError,
    SenseAffinityPropagation,
    SenseKMeans,
    stratified_sample,
)
from .depfreq import (
    DependencyRecord,
    DepTable,
    DepTableRow,
    read_dependency_records,
    tabulate_top_dependencies,
    write_dependency_records,
    write_dep_table_csv,
)
from .metrics import (
    AID_MODES,
    METRICS,
    ClusterDistribution,
    MetricSeries,
    NonPositiveSimilarityError,
    Prototype,
    aid,
    cluster_distribution,
    compute_series,
    cosine_similarity,
    entropy_normalized,
    jsd,
    prototype,
    prt,
    read_series_json,
    write_series,
)
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .stats import (
    MAX_PERMUTATIONS,
    PermutationResult,
    bh_adjust,
    pearson,
    permutation_scan,
    permutation_test_prt,
    rolling_mean,
    write_permutation_csv,
)
from .store import (
    EmbeddingRecord,
    EmbeddingStore,
    StoreFormatError,
    TimeSlice,
    filter_store,
    read_store,
    read_vec_matrix,
    slice_by_year,
    write_store,
    write_vec_matrix,
)
from .synthetic import (
    DriftEvent,
    SenseComponent,
    SynthSpec,
    SynthTruth,
    generate_synthetic,
    orthogonal_centers,
    write_truth,
)

__all__ = [
    "__version__",
    # store
    "EmbeddingRecord",
    "EmbeddingStore",
    "StoreFormatError",
    "TimeSlice",
    "filter_store",
    "read_store",
    "read_vec_matrix",
    "slice_by_year",
    "write_store",
    "write_vec_matrix",
    # cluster
    "AP_METHOD",
    "KMEANS_METHOD",
    "ClusterModel",
    "ConvergenceError",
    "SenseAffinityPropagation",
    "SenseKMeans",
    "stratified_sample",
    # metrics
    "AID_MODES",
    "METRICS",
    "ClusterDistribution",
    "MetricSeries",
    "NonPositiveSimilarityError",
    "Prototype",
    "aid",
    "cluster_distribution",
    "compute_series",
    "cosine_similarity",
    "entropy_normalized",
    "jsd",
    "prototype",
    "prt",
    "read_series_json",
    "write_series",
    # stats
    "MAX_PERMUTATIONS",
    "PermutationResult",
    "bh_adjust",
    "pearson",
    "permutation_scan",
    "permutation_test_prt",
    "rolling_mean",
    "write_permutation_csv",
    # depfreq
    "DependencyRecord",
    "DepTable",
    "DepTableRow",
    "read_dependency_records",
    "tabulate_top_dependencies",
    "write_dependency_records",
    "write_dep_table_csv",
    # synthetic
    "DriftEvent",
    "SenseComponent",
    "SynthSpec",
    "SynthTruth",
    "generate_synthetic",
    "orthogonal_centers",
    "write_truth",
    # pipeline
    "PipelineConfig",
    "PipelineError",
    "run_pipeline",
]
