"""Differentially private quantile estimation without data bounds.

The estimator runs AboveThreshold over counting queries on a geometric
candidate grid, so its error depends on the data's magnitude, not on a
promised range. The package bundles the noisy-threshold machinery, privacy
accounting for several query classes and neighbor models, an
exponential-mechanism interval baseline, private sums and means via private
clipping, and a benchmark/verification harness.
"""

from .accounting import (
    EmpiricalDpReport,
    MultiQuantileBudget,
    NeighborModel,
    PrivacyGuarantee,
    QueryClass,
    compose_zcdp,
    empirical_dp_check,
    guarantee_for,
    gumbel_exact_max_log_ratio,
    multi_quantile_guarantee,
    multi_quantile_levels,
    one_sided_loss,
    range_bounded_of_pair,
    zcdp_of_dp,
    zcdp_of_range_bounded,
)
from .aggregates import (
    ClipMethod,
    SumConfig,
    SumResult,
    clipped_sum,
    dp_mean,
    dp_sum,
)
from .bench import (
    ExperimentSpec,
    ResultRecord,
    emit_pdf_figures,
    normalized_error_rows,
    records_to_json,
    run_quantile_experiment,
    run_sum_experiment,
)
from .datasets import generate_synthetic, load_csv, perturb, true_quantile
from .emq import (
    BoundedRange,
    UqePdfCurve,
    emq_estimate,
    emq_interval_pmf,
    emq_pdf_curve,
    uqe_pdf_curve,
)
from .noise import NoiseKind, NoiseSpec, RandomSource, sample
from .quantile import (
    Dataset,
    GeometricGrid,
    LogBucketHistogram,
    MultiQuantileResult,
    QuantileEstimate,
    QuantileRequest,
    UnboundedEstimate,
    build_histogram,
    counting_query_stream,
    estimate_multiple_quantiles,
    estimate_quantile,
    estimate_quantile_unbounded,
    estimate_small_quantile_inverted,
    request_guarantee,
)
from .sparse_vector import (
    DEFAULT_MAX_QUERIES,
    QueryStream,
    SvtConfig,
    SvtOutcome,
    gumbel_halt_log_pmf,
    gumbel_no_halt_prob,
    run_above_threshold,
    run_iterative_em,
)
from .verify import run_all_verification_suites, run_verification_suite

__version__ = "0.1.0"

__all__ = [
    "BoundedRange",
    "ClipMethod",
    "DEFAULT_MAX_QUERIES",
    "Dataset",
    "EmpiricalDpReport",
    "ExperimentSpec",
    "GeometricGrid",
    "LogBucketHistogram",
    "MultiQuantileBudget",
    "MultiQuantileResult",
    "NeighborModel",
    "NoiseKind",
    "NoiseSpec",
    "PrivacyGuarantee",
    "QuantileEstimate",
    "QuantileRequest",
    "QueryClass",
    "QueryStream",
    "RandomSource",
    "ResultRecord",
    "SumConfig",
    "SumResult",
    "SvtConfig",
    "SvtOutcome",
    "UnboundedEstimate",
    "UqePdfCurve",
    "build_histogram",
    "clipped_sum",
    "compose_zcdp",
    "counting_query_stream",
    "dp_mean",
    "dp_sum",
    "emit_pdf_figures",
    "empirical_dp_check",
    "emq_estimate",
    "emq_interval_pmf",
    "emq_pdf_curve",
    "estimate_multiple_quantiles",
    "estimate_quantile",
    "estimate_quantile_unbounded",
    "estimate_small_quantile_inverted",
    "generate_synthetic",
    "guarantee_for",
    "gumbel_exact_max_log_ratio",
    "gumbel_halt_log_pmf",
    "gumbel_no_halt_prob",
    "load_csv",
    "multi_quantile_guarantee",
    "multi_quantile_levels",
    "normalized_error_rows",
    "one_sided_loss",
    "perturb",
    "range_bounded_of_pair",
    "records_to_json",
    "request_guarantee",
    "run_above_threshold",
    "run_all_verification_suites",
    "run_iterative_em",
    "run_quantile_experiment",
    "run_sum_experiment",
    "run_verification_suite",
    "sample",
    "true_quantile",
    "uqe_pdf_curve",
    "zcdp_of_dp",
    "zcdp_of_range_bounded",
]
