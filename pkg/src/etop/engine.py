"""Pipeline-search engine: space enumeration, history of prior step
executions keyed by canonical prefix, median-thresholded early termination,
and the full search loop with winner selection.

Two modes share one walker. The default mode seeds a history from a random
subset of pipelines, then walks the full enumeration reusing cached step
accuracies and abandoning any pipeline whose latest step accuracy fails to
strictly exceed the running median of all recorded accuracies. Grid mode
walks every pipeline end to end with prefix caching but no history seeding
and no termination.
"""

from __future__ import annotations

import enum
import itertools
import json
import time
from bisect import insort
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .seeds import derive_seed
from .steps import (
    DATA_STEP,
    MODEL_STEP,
    StepFailure,
    StepSpec,
    SurrogateConfig,
    apply_data_step,
    canonical_step,
    evaluate_step,
    step_from_dict,
    step_to_dict,
)
from .tabular import Dataset, stratified_sample

MODE_ETOP = "etop"
MODE_GRID = "grid"

ORIGIN_HOE = "hoe"
ORIGIN_SEARCH = "search"

STATUS_COMPLETED = "completed"
STATUS_TERMINATED = "terminated"
STATUS_FAILED = "failed"

DEFAULT_SAMPLE_SIZE = 5000
DEFAULT_PIPELINE_FRACTION = 0.10
DEFAULT_CACHE_BUDGET = 128 * 1024 * 1024


@dataclass(frozen=True)
class Pipeline:
    """Ordered cascade of data steps ending in exactly one model step."""

    steps: tuple[StepSpec, ...]

    def __post_init__(self):
        if not self.steps:
            raise ConfigError("pipeline must contain at least one step")
        if self.steps[-1].kind != MODEL_STEP:
            raise ConfigError("pipeline must end in a model step")
        for s in self.steps[:-1]:
            if s.kind != DATA_STEP:
                raise ConfigError("only the final pipeline step may be a model step")

    @property
    def key(self) -> str:
        return canonical_prefix(self.steps)


@dataclass(frozen=True)
class SearchSpace:
    """Per-slot candidate steps whose Cartesian product is the pipeline set."""

    slots: tuple[tuple[StepSpec, ...], ...]

    def __post_init__(self):
        if not self.slots:
            raise ConfigError("search space needs at least one slot")
        for i, slot in enumerate(self.slots):
            if not slot:
                raise ConfigError(f"slot {i} is empty")
            if len({s.canonical for s in slot}) != len(slot):
                raise ConfigError(f"slot {i} contains duplicate candidates")
            want = MODEL_STEP if i == len(self.slots) - 1 else DATA_STEP
            for s in slot:
                if s.kind != want:
                    raise ConfigError(
                        f"slot {i} must hold only {want} steps, found {s.canonical}"
                    )

    @property
    def n_pipelines(self) -> int:
        n = 1
        for slot in self.slots:
            n *= len(slot)
        return n


def space_from_dict(obj: dict) -> SearchSpace:
    if not isinstance(obj, dict) or "slots" not in obj:
        raise ConfigError('space file must be an object with a "slots" list')
    slots = tuple(
        tuple(step_from_dict(s) for s in slot) for slot in obj["slots"]
    )
    return SearchSpace(slots)


def space_to_dict(space: SearchSpace) -> dict:
    return {"slots": [[step_to_dict(s) for s in slot] for slot in space.slots]}


def load_space(path: str | Path) -> SearchSpace:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such space file: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return space_from_dict(obj)


def canonical_prefix(steps) -> str:
    """Canonical key of a step sequence: per-step forms joined by ``|``."""
    steps = tuple(steps)
    if not steps:
        raise ConfigError("cannot key an empty step sequence")
    return "|".join(canonical_step(s) for s in steps)


def enumerate_pipelines(space: SearchSpace) -> list[Pipeline]:
    """Cartesian product of the slots in odometer order (last slot varies
    fastest)."""
    return [Pipeline(combo) for combo in itertools.product(*space.slots)]


def sample_pipelines(pipelines: list[Pipeline], fraction: float, seed: int) -> list[Pipeline]:
    """floor(fraction * N) pipelines (at least one), drawn without
    replacement by a seeded Fisher-Yates prefix."""
    if not pipelines:
        raise ConfigError("cannot sample from an empty pipeline list")
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"pipeline fraction must lie in (0, 1], got {fraction}")
    n = len(pipelines)
    k = max(1, int(fraction * n))
    rng = np.random.default_rng(seed)
    idx = list(range(n))
    for i in range(k):
        j = i + int(rng.integers(0, n - i))
        idx[i], idx[j] = idx[j], idx[i]
    return [pipelines[idx[i]] for i in range(k)]


# ---------------------------------------------------------------------------
# History and caches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryEntry:
    acc: float
    kind: str  # DATA_STEP | MODEL_STEP
    origin: str  # ORIGIN_HOE | ORIGIN_SEARCH
    elapsed: float


class History:
    """Prefix-keyed map of executed step sequences to recorded accuracies.

    Failed steps are never inserted. A sorted mirror of the accuracies keeps
    the running median cheap.
    """

    def __init__(self):
        self.entries: dict[str, HistoryEntry] = {}
        self._sorted_accs: list[float] = []

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __getitem__(self, key: str) -> HistoryEntry:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, key: str, entry: HistoryEntry) -> None:
        if key in self.entries:
            raise ConfigError(f"history already holds {key!r}")
        if not 0.0 <= entry.acc <= 1.0:
            raise DataError(f"accuracy {entry.acc} outside [0, 1]")
        self.entries[key] = entry
        insort(self._sorted_accs, entry.acc)

    def median(self) -> float:
        accs = self._sorted_accs
        if not accs:
            raise DataError("median of an empty history")
        mid = len(accs) // 2
        if len(accs) % 2:
            return accs[mid]
        return (accs[mid - 1] + accs[mid]) / 2.0


def median_threshold(h: History) -> float:
    """Median over every recorded accuracy, both origins and both kinds
    pooled; even counts average the two middle values."""
    return h.median()


class Decision(enum.Enum):
    CONTINUE = "continue"
    TERMINATE = "terminate"


def early_stop(h: History, acc: float) -> Decision:
    """Continue only when ``acc`` strictly exceeds the history median;
    equality terminates."""
    return Decision.CONTINUE if acc > median_threshold(h) else Decision.TERMINATE


class DataCache:
    """LRU cache of transformed datasets keyed by data-step prefix, bounded
    by an approximate byte budget. A zero budget disables data caching
    entirely (accuracies stay cached in the history regardless)."""

    def __init__(self, budget_bytes: int):
        self.budget = max(0, int(budget_bytes))
        self._items: OrderedDict[str, Dataset] = OrderedDict()
        self._sizes: dict[str, int] = {}
        self._used = 0

    @staticmethod
    def _estimate(d: Dataset) -> int:
        total = d.labels.nbytes
        for col, arr in zip(d.columns, d.cells):
            if arr.dtype == np.float64:
                total += arr.nbytes
            else:
                total += sum(8 + (len(v) if isinstance(v, str) else 0) for v in arr.tolist())
        return total

    def get(self, key: str) -> Dataset | None:
        if key in self._items:
            self._items.move_to_end(key)
            return self._items[key]
        return None

    def put(self, key: str, d: Dataset) -> None:
        if self.budget == 0 or key in self._items:
            return
        size = self._estimate(d)
        if size > self.budget:
            return
        while self._used + size > self.budget and self._items:
            old, _ = self._items.popitem(last=False)
            self._used -= self._sizes.pop(old)
        self._items[key] = d
        self._sizes[key] = size
        self._used += size


@dataclass
class Counters:
    """Execution accounting for one run. ``transforms_reexecuted`` tracks
    silent re-transforms after a data-cache miss; it varies with the cache
    budget and is therefore excluded from canonical serializations."""

    hoe_steps_executed: int = 0
    search_steps_executed: int = 0
    cache_hits: int = 0
    transforms_reexecuted: int = 0
    executions_by_key: dict[str, int] = field(default_factory=dict)

    @property
    def steps_executed_total(self) -> int:
        return self.hoe_steps_executed + self.search_steps_executed


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineOutcome:
    pipeline: Pipeline
    status: str  # STATUS_COMPLETED | STATUS_TERMINATED | STATUS_FAILED
    stopped_at: int | None  # step index for terminated/failed
    final_acc: float | None  # present iff completed
    steps_executed: int  # fresh evaluations attributed to this walk
    steps_cache_hit: int
    elapsed: float


@dataclass(frozen=True)
class SearchConfig:
    seed: int
    sample_size: int = DEFAULT_SAMPLE_SIZE
    pipeline_fraction: float = DEFAULT_PIPELINE_FRACTION
    surrogate: SurrogateConfig = SurrogateConfig()
    cache_data_budget: int = DEFAULT_CACHE_BUDGET

    def __post_init__(self):
        if self.sample_size < 1:
            raise ConfigError("sample_size must be >= 1")
        if not 0.0 < self.pipeline_fraction <= 1.0:
            raise ConfigError("pipeline_fraction must lie in (0, 1]")


@dataclass
class SearchResult:
    """Outcome of one search run.

    ``sampled_data``, ``elapsed_seconds`` and the counter internals exist for
    in-process consumers; the canonical JSON projection (see
    :mod:`etop.report`) carries only replay-deterministic content.
    """

    mode: str
    seed: int
    config: SearchConfig
    winner: tuple[Pipeline, float] | None
    no_winner_reason: str | None
    outcomes: list[PipelineOutcome]
    history: History
    hoe_pipelines: list[Pipeline]
    counters: Counters
    sampled_data: Dataset
    elapsed_seconds: float


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

class _StepAdvance:
    """Resolution of one step during a walk."""

    __slots__ = ("state", "acc", "working", "error")

    def __init__(self, state, acc=None, working=None, error=None):
        self.state = state  # "hit" | "fresh" | "failed"
        self.acc = acc
        self.working = working
        self.error = error


def _advance(
    key: str,
    step: StepSpec,
    working: Dataset,
    history: History,
    cache: DataCache,
    surrogate: SurrogateConfig,
    seed: int,
    origin: str,
    counters: Counters,
) -> _StepAdvance:
    """Resolve one step: reuse the cached accuracy when the prefix is known
    (re-running the transform only if its output was evicted), otherwise
    evaluate it fresh and record it."""
    if key in history:
        counters.cache_hits += 1
        if step.kind == DATA_STEP:
            cached = cache.get(key)
            if cached is None:
                cached = apply_data_step(step, working)
                counters.transforms_reexecuted += 1
                cache.put(key, cached)
            working = cached
        return _StepAdvance("hit", history[key].acc, working)

    outcome = evaluate_step(step, working, surrogate, seed)
    if isinstance(outcome, StepFailure):
        return _StepAdvance("failed", error=outcome.error)
    history.add(key, HistoryEntry(outcome.acc, step.kind, origin, outcome.elapsed))
    counters.executions_by_key[key] = counters.executions_by_key.get(key, 0) + 1
    if origin == ORIGIN_HOE:
        counters.hoe_steps_executed += 1
    else:
        counters.search_steps_executed += 1
    if step.kind == DATA_STEP:
        cache.put(key, outcome.transformed)
        working = outcome.transformed
    return _StepAdvance("fresh", outcome.acc, working)


def build_history(
    sampled: list[Pipeline],
    data: Dataset,
    surrogate: SurrogateConfig,
    seed: int,
    *,
    cache: DataCache | None = None,
    counters: Counters | None = None,
) -> History:
    """Execute every sampled pipeline end to end, recording each new prefix's
    accuracy exactly once. No early termination happens here; a failing step
    abandons the rest of that pipeline only."""
    history = History()
    cache = cache if cache is not None else DataCache(DEFAULT_CACHE_BUDGET)
    counters = counters if counters is not None else Counters()
    for pipeline in sampled:
        working = data
        prefix: list[StepSpec] = []
        for step in pipeline.steps:
            prefix.append(step)
            key = canonical_prefix(prefix)
            adv = _advance(key, step, working, history, cache, surrogate, seed, ORIGIN_HOE, counters)
            if adv.state == "failed":
                break
            working = adv.working
    return history


def select_winner(outcomes: list[PipelineOutcome]) -> tuple[Pipeline, float] | None:
    """Best completed pipeline by final accuracy; ties prefer fewer executed
    steps, then the lexicographically smaller canonical key."""
    completed = [o for o in outcomes if o.status == STATUS_COMPLETED]
    if not completed:
        return None
    best = min(completed, key=lambda o: (-o.final_acc, o.steps_executed, o.pipeline.key))
    return best.pipeline, best.final_acc


def _walk(
    pipelines: list[Pipeline],
    data: Dataset,
    history: History,
    cache: DataCache,
    config: SearchConfig,
    counters: Counters,
    *,
    terminate_early: bool,
) -> list[PipelineOutcome]:
    outcomes = []
    for pipeline in pipelines:
        working = data  # every pipeline restarts from the sampled dataset
        executed = 0
        hits = 0
        start = time.perf_counter()
        status = STATUS_COMPLETED
        stopped_at: int | None = None
        final_acc: float | None = None
        last = len(pipeline.steps) - 1
        for i, step in enumerate(pipeline.steps):
            key = canonical_prefix(pipeline.steps[: i + 1])
            adv = _advance(
                key, step, working, history, cache,
                config.surrogate, config.seed, ORIGIN_SEARCH, counters,
            )
            if adv.state == "failed":
                status = STATUS_FAILED
                stopped_at = i
                break
            executed += adv.state == "fresh"
            hits += adv.state == "hit"
            working = adv.working
            if i == last:
                final_acc = adv.acc  # a scored model step completes the walk
            elif terminate_early and early_stop(history, adv.acc) is Decision.TERMINATE:
                status = STATUS_TERMINATED
                stopped_at = i
                break
        outcomes.append(PipelineOutcome(
            pipeline=pipeline,
            status=status,
            stopped_at=stopped_at,
            final_acc=final_acc,
            steps_executed=executed,
            steps_cache_hit=hits,
            elapsed=time.perf_counter() - start,
        ))
    return outcomes


def _run(space: SearchSpace, dataset: Dataset, config: SearchConfig, mode: str) -> SearchResult:
    start = time.perf_counter()
    sampled_data = stratified_sample(
        dataset, config.sample_size, derive_seed(config.seed, "sample")
    )
    pipelines = enumerate_pipelines(space)
    cache = DataCache(config.cache_data_budget)
    counters = Counters()

    if mode == MODE_ETOP:
        hoe = sample_pipelines(
            pipelines, config.pipeline_fraction, derive_seed(config.seed, "pipeline-sample")
        )
        history = build_history(
            hoe, sampled_data, config.surrogate, config.seed,
            cache=cache, counters=counters,
        )
    else:
        hoe = []
        history = History()

    outcomes = _walk(
        pipelines, sampled_data, history, cache, config, counters,
        terminate_early=(mode == MODE_ETOP),
    )
    winner = select_winner(outcomes)
    reason = None if winner else "no pipeline completed: all terminated early or failed"
    return SearchResult(
        mode=mode,
        seed=config.seed,
        config=config,
        winner=winner,
        no_winner_reason=reason,
        outcomes=outcomes,
        history=history,
        hoe_pipelines=list(hoe),
        counters=counters,
        sampled_data=sampled_data,
        elapsed_seconds=time.perf_counter() - start,
    )


def search(space: SearchSpace, dataset: Dataset, config: SearchConfig) -> SearchResult:
    """Full run: stratified data sample, pipeline enumeration, history seeding
    from a random pipeline subset, then the early-terminating walk over the
    whole enumeration."""
    return _run(space, dataset, config, MODE_ETOP)


def grid_search(space: SearchSpace, dataset: Dataset, config: SearchConfig) -> SearchResult:
    """Exhaustive baseline: every pipeline end to end on the same sampled
    data, with prefix caching but no history seeding and no termination."""
    return _run(space, dataset, config, MODE_GRID)
