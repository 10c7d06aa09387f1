"""Run orchestration: the full-grid baseline, accuracy/time gains between the
two modes, dataset-level compare runs, and the multi-dataset bench driver.

Timing note: reported time-gain factors default to a deterministic work-unit
clock (one unit per fresh step evaluation) so that rerunning a compare with
identical flags reproduces its output files byte for byte. Measured
wall-clock seconds are always printed to stderr; passing ``wallclock=True``
puts them into the report instead, at the cost of reproducible bytes.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .engine import (
    MODE_ETOP,
    MODE_GRID,
    DEFAULT_CACHE_BUDGET,
    DEFAULT_PIPELINE_FRACTION,
    DEFAULT_SAMPLE_SIZE,
    STATUS_COMPLETED,
    SearchConfig,
    SearchResult,
    SearchSpace,
    grid_search,
    load_space,
    search,
)
from .errors import ConfigError, NoWinnerError
from .seeds import derive_seed
from .steps import (
    SurrogateConfig,
    apply_fitted_step,
    apply_schema_guard,
    fit_data_step,
    fit_model_step,
    fit_schema_guard,
)
from .tabular import Dataset, accuracy, load_csv, split_train_valid

HOLDOUT_FRACTION = 0.2
TIMING_WORK_UNITS = "work-units"
TIMING_WALLCLOCK = "wallclock"


@dataclass(frozen=True)
class RunConfig:
    """CLI-level configuration of a run."""

    data_path: Path
    target_column: str
    space_path: Path
    mode: str  # MODE_ETOP | MODE_GRID
    seed: int
    sample_size: int = DEFAULT_SAMPLE_SIZE
    pipeline_fraction: float = DEFAULT_PIPELINE_FRACTION
    surrogate: SurrogateConfig = SurrogateConfig()
    output_path: Path | None = None
    cache_data_budget: int = DEFAULT_CACHE_BUDGET
    wallclock: bool = False
    figures: bool = True

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            seed=self.seed,
            sample_size=self.sample_size,
            pipeline_fraction=self.pipeline_fraction,
            surrogate=self.surrogate,
            cache_data_budget=self.cache_data_budget,
        )


@dataclass(frozen=True)
class GainsReport:
    """Accuracy and time trade-off between the two modes on one dataset."""

    dataset: str
    etop_acc: float  # winner holdout accuracy, in [0, 1]
    grid_acc: float
    acc_gain_pp: float  # percentage points
    time_gain_factor: float
    pipelines_completed_etop: int
    pipelines_total: int
    steps_executed_etop: int
    steps_executed_grid: int
    seed: int
    timing_mode: str


def accuracy_gain(etop_acc: float, competitor_acc: float) -> float:
    """Accuracy gain: winner accuracy minus competitor accuracy, in whatever
    unit the inputs use (feed percentages to get percentage points)."""
    return etop_acc - competitor_acc


def time_gain(competitor_time: float, etop_time: float) -> float:
    """Time-gain factor: competitor time divided by this framework's time."""
    if etop_time <= 0:
        raise ConfigError("time gain requires a positive reference time")
    return competitor_time / etop_time


def run_grid_baseline(space: SearchSpace, dataset: Dataset, config: SearchConfig) -> SearchResult:
    """Every enumerated pipeline end to end from the sampled dataset, with
    prefix caching but no early termination and no history seeding."""
    return grid_search(space, dataset, config)


def retrain_and_score(result: SearchResult, holdout: Dataset) -> float:
    """Refit the winner on the full sampled training data and score it on the
    holdout rows.

    Each data step is fitted on the training side and applied to the holdout
    with the fitted statistics; any cells the pipeline's own steps leave
    non-numeric or missing on the holdout are aligned with a schema guard
    fitted on the transformed training data.
    """
    if result.winner is None:
        raise NoWinnerError(f"{result.mode} search produced no completed pipeline")
    pipeline, _ = result.winner
    train = result.sampled_data
    hold = holdout
    for step in pipeline.steps[:-1]:
        train, fitted = fit_data_step(step, train)
        hold = apply_fitted_step(fitted, hold)
    guard = fit_schema_guard(train)
    train = apply_schema_guard(guard, train)
    hold = apply_schema_guard(guard, hold)
    model = fit_model_step(pipeline.steps[-1], train, derive_seed(result.seed, "final-fit"))
    return accuracy(model.predict(hold), hold.labels.tolist())


def compute_gains(
    etop_result: SearchResult,
    etop_elapsed: float,
    grid_result: SearchResult,
    grid_elapsed: float,
    holdout: Dataset,
    *,
    dataset_name: str,
    timing_mode: str = TIMING_WORK_UNITS,
) -> GainsReport:
    """Retrain both winners, score them on the holdout set, and fill the
    gains report from the elapsed measurements supplied by the caller."""
    etop_acc = retrain_and_score(etop_result, holdout)
    grid_acc = retrain_and_score(grid_result, holdout)
    return GainsReport(
        dataset=dataset_name,
        etop_acc=etop_acc,
        grid_acc=grid_acc,
        acc_gain_pp=accuracy_gain(100.0 * etop_acc, 100.0 * grid_acc),
        time_gain_factor=time_gain(grid_elapsed, etop_elapsed),
        pipelines_completed_etop=sum(
            1 for o in etop_result.outcomes if o.status == STATUS_COMPLETED
        ),
        pipelines_total=len(etop_result.outcomes),
        steps_executed_etop=etop_result.counters.steps_executed_total,
        steps_executed_grid=grid_result.counters.steps_executed_total,
        seed=etop_result.seed,
        timing_mode=timing_mode,
    )


@dataclass
class CompareArtifacts:
    gains: GainsReport
    etop_result: SearchResult
    grid_result: SearchResult


def compare_on_dataset(
    raw: Dataset,
    space: SearchSpace,
    config: SearchConfig,
    *,
    dataset_name: str,
    wallclock: bool = False,
    log=sys.stderr,
) -> CompareArtifacts:
    """Run both modes against one dataset and compute their gains.

    A stratified 20% holdout is carved from the raw dataset before any
    sampling; both modes search the remaining 80% and the holdout is used
    only for the final winner scores.
    """
    split = split_train_valid(raw, HOLDOUT_FRACTION, derive_seed(config.seed, "holdout"))
    search_data, holdout = split.train, split.valid

    start = time.perf_counter()
    etop_result = search(space, search_data, config)
    etop_wall = time.perf_counter() - start

    start = time.perf_counter()
    grid_result = grid_search(space, search_data, config)
    grid_wall = time.perf_counter() - start

    if log is not None:
        print(
            f"[{dataset_name}] wall clock: etop {etop_wall:.2f}s "
            f"({etop_result.counters.steps_executed_total} step evals), "
            f"grid {grid_wall:.2f}s "
            f"({grid_result.counters.steps_executed_total} step evals)",
            file=log,
        )

    if wallclock:
        etop_elapsed, grid_elapsed, mode = etop_wall, grid_wall, TIMING_WALLCLOCK
    else:
        etop_elapsed = float(etop_result.counters.steps_executed_total)
        grid_elapsed = float(grid_result.counters.steps_executed_total)
        mode = TIMING_WORK_UNITS

    gains = compute_gains(
        etop_result, etop_elapsed, grid_result, grid_elapsed, holdout,
        dataset_name=dataset_name, timing_mode=mode,
    )
    return CompareArtifacts(gains, etop_result, grid_result)


def aggregate_reports(reports: list[GainsReport]) -> GainsReport:
    """Aggregate row: arithmetic means for accuracies and gains, sums for the
    counting columns."""
    if not reports:
        raise ConfigError("nothing to aggregate")
    n = len(reports)
    return GainsReport(
        dataset="aggregate",
        etop_acc=sum(g.etop_acc for g in reports) / n,
        grid_acc=sum(g.grid_acc for g in reports) / n,
        acc_gain_pp=sum(g.acc_gain_pp for g in reports) / n,
        time_gain_factor=sum(g.time_gain_factor for g in reports) / n,
        pipelines_completed_etop=sum(g.pipelines_completed_etop for g in reports),
        pipelines_total=sum(g.pipelines_total for g in reports),
        steps_executed_etop=sum(g.steps_executed_etop for g in reports),
        steps_executed_grid=sum(g.steps_executed_grid for g in reports),
        seed=reports[0].seed,
        timing_mode=reports[0].timing_mode,
    )


# ---------------------------------------------------------------------------
# Bench manifests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchEntry:
    name: str
    data_path: Path
    target_column: str
    space_path: Path


def load_bench_manifest(path: str | Path) -> list[BenchEntry]:
    """Parse and validate a bench manifest.

    The manifest is a JSON object ``{"entries": [{"data", "target",
    "space"}, ...]}``; relative paths resolve against the manifest's
    directory and every referenced file must exist.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such manifest: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("entries"), list):
        raise ConfigError(f'{path}: manifest must be an object with an "entries" list')
    if not obj["entries"]:
        raise ConfigError(f"{path}: manifest has no entries")
    base = path.parent
    entries = []
    for i, raw in enumerate(obj["entries"]):
        if not isinstance(raw, dict) or not {"data", "target", "space"} <= set(raw):
            raise ConfigError(f"{path}: entry {i} needs data, target and space fields")
        data_path = (base / raw["data"]).resolve()
        space_path = (base / raw["space"]).resolve()
        if not data_path.exists():
            raise ConfigError(f"{path}: entry {i}: no such data file {data_path}")
        if not space_path.exists():
            raise ConfigError(f"{path}: entry {i}: no such space file {space_path}")
        entries.append(BenchEntry(
            name=raw.get("name", Path(raw["data"]).stem),
            data_path=data_path,
            target_column=raw["target"],
            space_path=space_path,
        ))
    return entries


@dataclass
class BenchSummary:
    reports: list[GainsReport]
    aggregate: GainsReport
    etop_wins: int
    grid_wins: int
    ties: int

    def to_dict(self) -> dict:
        from .report import gains_to_dict

        return {
            "schema": "etop-bench-summary-v1",
            "entries": [gains_to_dict(g) for g in self.reports],
            "aggregate": gains_to_dict(self.aggregate),
            "etop_wins": self.etop_wins,
            "grid_wins": self.grid_wins,
            "ties": self.ties,
        }


def run_bench(
    entries: list[BenchEntry],
    seed: int,
    *,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    pipeline_fraction: float = DEFAULT_PIPELINE_FRACTION,
    surrogate: SurrogateConfig = SurrogateConfig(),
    cache_data_budget: int = DEFAULT_CACHE_BUDGET,
    wallclock: bool = False,
    log=sys.stderr,
) -> BenchSummary:
    """Compare both modes on every manifest entry; per-entry seeds are the
    run seed plus the entry index."""
    reports = []
    for i, entry in enumerate(entries):
        raw = load_csv(entry.data_path, entry.target_column)
        space = load_space(entry.space_path)
        config = SearchConfig(
            seed=seed + i,
            sample_size=sample_size,
            pipeline_fraction=pipeline_fraction,
            surrogate=surrogate,
            cache_data_budget=cache_data_budget,
        )
        artifacts = compare_on_dataset(
            raw, space, config, dataset_name=entry.name, wallclock=wallclock, log=log,
        )
        reports.append(artifacts.gains)
    etop_wins = sum(1 for g in reports if g.etop_acc > g.grid_acc)
    grid_wins = sum(1 for g in reports if g.grid_acc > g.etop_acc)
    return BenchSummary(
        reports=reports,
        aggregate=aggregate_reports(reports),
        etop_wins=etop_wins,
        grid_wins=grid_wins,
        ties=len(reports) - etop_wins - grid_wins,
    )
