"""Pipeline search for tabular classification with surrogate-scored
intermediate evaluation, prefix-memoized step execution, and
median-thresholded early termination, plus a full-grid baseline harness."""

from .engine import (
    Decision,
    History,
    Pipeline,
    PipelineOutcome,
    SearchConfig,
    SearchResult,
    SearchSpace,
    build_history,
    canonical_prefix,
    early_stop,
    enumerate_pipelines,
    grid_search,
    load_space,
    median_threshold,
    sample_pipelines,
    search,
    select_winner,
)
from .errors import ConfigError, DataError, EtopError, NoWinnerError, StepError
from .harness import (
    GainsReport,
    RunConfig,
    accuracy_gain,
    compare_on_dataset,
    compute_gains,
    load_bench_manifest,
    run_bench,
    run_grid_baseline,
    time_gain,
)
from .steps import (
    StepFailure,
    StepOutcome,
    StepSpec,
    SurrogateConfig,
    apply_data_step,
    catalog,
    evaluate_step,
    fit_predict_model_step,
    surrogate_score,
)
from .tabular import (
    Dataset,
    SplitPair,
    accuracy,
    load_csv,
    split_train_valid,
    stratified_sample,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "Dataset", "Decision", "EtopError",
    "GainsReport", "History", "NoWinnerError", "Pipeline", "PipelineOutcome",
    "RunConfig", "SearchConfig", "SearchResult", "SearchSpace", "SplitPair",
    "StepError", "StepFailure", "StepOutcome", "StepSpec", "SurrogateConfig",
    "accuracy", "accuracy_gain", "apply_data_step", "build_history",
    "canonical_prefix", "catalog", "compare_on_dataset", "compute_gains",
    "early_stop", "enumerate_pipelines", "evaluate_step",
    "fit_predict_model_step", "grid_search", "load_bench_manifest",
    "load_csv", "load_space", "median_threshold", "run_bench",
    "run_grid_baseline", "sample_pipelines", "search", "select_winner",
    "split_train_valid", "stratified_sample", "surrogate_score", "time_gain",
]
