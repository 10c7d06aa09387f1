"""Catalog of pipeline steps, the transforms and learners behind them, the
fixed tree surrogate, and single-step evaluation.

Data steps have two faces sharing one implementation: ``apply_data_step``
(fit on the input, apply to the input: the search-time semantics) and the
``fit_data_step`` / ``apply_fitted_step`` pair used when a winner pipeline is
replayed onto held-out data with statistics learned from training data.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DataError, StepError
from .learners import DecisionTree, KNearest, LogisticOvR, RandomForest
from .seeds import derive_seed
from .tabular import (
    CATEGORICAL,
    NUMERIC,
    Column,
    Dataset,
    SplitPair,
    accuracy,
    split_train_valid,
)

DATA_STEP = "data"
MODEL_STEP = "model"

# Fraction of rows reserved for validation when a step is scored.
EVAL_VALID_FRACTION = 0.2


@dataclass(frozen=True)
class ParamDef:
    """Declared parameter of a catalog step."""

    name: str
    type: str  # "int" | "real" | "token"
    lo: float | None = None
    hi: float | None = None
    lo_open: bool = False
    choices: tuple[str, ...] | None = None
    data_dependent_hi: bool = False  # upper bound checked at application time


@dataclass(frozen=True)
class StepDef:
    name: str
    kind: str
    params: tuple[ParamDef, ...]


_CATALOG: tuple[StepDef, ...] = (
    StepDef("impute", DATA_STEP, (
        ParamDef("strategy", "token", choices=("mean", "median", "mode", "constant_zero")),
    )),
    StepDef("scale", DATA_STEP, (
        ParamDef("kind", "token", choices=("standard", "minmax", "none")),
    )),
    StepDef("encode", DATA_STEP, (
        ParamDef("kind", "token", choices=("onehot", "ordinal")),
    )),
    StepDef("select", DATA_STEP, (
        ParamDef("method", "token", choices=("variance", "anova_f")),
        ParamDef("k", "int", lo=1, data_dependent_hi=True),
    )),
    StepDef("dtree", MODEL_STEP, (
        ParamDef("max_depth", "int", lo=1, hi=32),
        ParamDef("min_leaf", "int", lo=1, hi=64),
    )),
    StepDef("rforest", MODEL_STEP, (
        ParamDef("n_trees", "int", lo=1, hi=64),
        ParamDef("max_depth", "int", lo=1, hi=32),
    )),
    StepDef("logreg", MODEL_STEP, (
        ParamDef("lr", "real", lo=0.0, hi=1.0, lo_open=True),
        ParamDef("epochs", "int", lo=1, hi=2000),
        ParamDef("l2", "real", lo=0.0, hi=1.0),
    )),
    StepDef("knn", MODEL_STEP, (
        ParamDef("k", "int", lo=1, hi=64),
    )),
)

_BY_NAME = {d.name: d for d in _CATALOG}


def catalog() -> tuple[StepDef, ...]:
    """Declared steps: four data-step families then four model-step families."""
    return _CATALOG


def _validate_param(step: str, pd: ParamDef, value: Any) -> int | float | str:
    if pd.type == "token":
        if not isinstance(value, str) or value not in pd.choices:
            raise StepError(f"{step}.{pd.name} must be one of {pd.choices}, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise StepError(f"{step}.{pd.name} must be a number, got {value!r}")
    if pd.type == "int":
        if isinstance(value, float) and not value.is_integer():
            raise StepError(f"{step}.{pd.name} must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if pd.lo is not None and (value < pd.lo or (pd.lo_open and value == pd.lo)):
        raise StepError(f"{step}.{pd.name}={value!r} below its declared range")
    if pd.hi is not None and value > pd.hi and not pd.data_dependent_hi:
        raise StepError(f"{step}.{pd.name}={value!r} above its declared range")
    return value


@dataclass(frozen=True)
class StepSpec:
    """A catalog step bound to concrete parameter values."""

    name: str
    params: tuple[tuple[str, int | float | str], ...]

    @staticmethod
    def make(name: str, **params: Any) -> "StepSpec":
        if name not in _BY_NAME:
            raise StepError(f"unknown step {name!r}")
        defn = _BY_NAME[name]
        declared = {p.name for p in defn.params}
        given = set(params)
        if given != declared:
            raise StepError(f"{name} expects params {sorted(declared)}, got {sorted(given)}")
        normalized = tuple(
            (p.name, _validate_param(name, p, params[p.name])) for p in defn.params
        )
        return StepSpec(name, normalized)

    @property
    def kind(self) -> str:
        return _BY_NAME[self.name].kind

    @property
    def param_map(self) -> dict[str, int | float | str]:
        return dict(self.params)

    @property
    def canonical(self) -> str:
        return canonical_step(self)


def _render_value(value: int | float | str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def canonical_step(spec: StepSpec) -> str:
    """Injective text form ``name{p1=v1,p2=v2}`` with params in declared
    order and reals rendered to 17 significant digits."""
    inner = ",".join(f"{k}={_render_value(v)}" for k, v in spec.params)
    return f"{spec.name}{{{inner}}}"


def step_from_dict(obj: dict) -> StepSpec:
    """Parse ``{"name": ..., "params": {...}}`` (the space-file encoding)."""
    if not isinstance(obj, dict) or "name" not in obj:
        raise StepError(f"step object must carry a name: {obj!r}")
    return StepSpec.make(obj["name"], **obj.get("params", {}))


def step_to_dict(spec: StepSpec) -> dict:
    return {"name": spec.name, "params": dict(spec.params)}


# ---------------------------------------------------------------------------
# Data-step transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedStep:
    """A data step plus the statistics it learned from its training input."""

    spec: StepSpec
    payload: Any


_FALLBACK_NUMERIC = 0.0
_FALLBACK_TOKEN = "0"


def _numeric_fill(arr: np.ndarray, strategy: str) -> float:
    present = arr[~np.isnan(arr)]
    if strategy == "constant_zero" or present.size == 0:
        return _FALLBACK_NUMERIC
    if strategy == "mean":
        return float(present.mean())
    if strategy == "median":
        return float(np.median(present))
    # mode: most frequent value, ties toward the smallest value
    values, counts = np.unique(present, return_counts=True)
    return float(values[counts.argmax()])


def _token_fill(arr: np.ndarray, strategy: str) -> str:
    tokens = [v for v in arr.tolist() if v is not None]
    if strategy == "constant_zero" or not tokens:
        return _FALLBACK_TOKEN
    # mean/median/mode all reduce to mode for tokens; ties lexicographic.
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    top = max(counts.values())
    return min(t for t, c in counts.items() if c == top)


def _fit_impute(spec: StepSpec, d: Dataset) -> FittedStep:
    strategy = spec.param_map["strategy"]
    fills = []
    for col, arr in zip(d.columns, d.cells):
        if col.kind == NUMERIC:
            fills.append(_numeric_fill(arr, strategy))
        else:
            fills.append(_token_fill(arr, strategy))
    return FittedStep(spec, tuple(fills))


def _apply_impute(fitted: FittedStep, d: Dataset) -> Dataset:
    cells = []
    for col, arr, fill in zip(d.columns, d.cells, fitted.payload):
        if col.kind == NUMERIC:
            out = arr.copy()
            out[np.isnan(out)] = fill
        else:
            out = arr.copy()
            out[np.array([v is None for v in arr.tolist()])] = fill
        cells.append(out)
    return Dataset(d.columns, tuple(cells), d.labels.copy())


def _fit_scale(spec: StepSpec, d: Dataset) -> FittedStep:
    kind = spec.param_map["kind"]
    stats = []
    for col, arr in zip(d.columns, d.cells):
        if col.kind != NUMERIC or kind == "none":
            stats.append(None)
            continue
        present = arr[~np.isnan(arr)]
        if present.size == 0:
            stats.append((0.0, 0.0))
        elif kind == "standard":
            spread = float(present.std(ddof=1)) if present.size > 1 else 0.0
            stats.append((float(present.mean()), spread))
        else:  # minmax
            lo = float(present.min())
            stats.append((lo, float(present.max()) - lo))
    return FittedStep(spec, tuple(stats))


def _apply_scale(fitted: FittedStep, d: Dataset) -> Dataset:
    cells = []
    for arr, st in zip(d.cells, fitted.payload):
        if st is None:
            cells.append(arr.copy())
            continue
        shift, spread = st
        out = arr.copy()
        mask = ~np.isnan(out)
        if spread == 0.0 or math.isnan(spread):
            out[mask] = 0.0
        else:
            out[mask] = (out[mask] - shift) / spread
        cells.append(out)
    return Dataset(d.columns, tuple(cells), d.labels.copy())


def _fit_encode(spec: StepSpec, d: Dataset) -> FittedStep:
    categories = []
    for col, arr in zip(d.columns, d.cells):
        if col.kind == CATEGORICAL:
            categories.append(tuple(sorted({v for v in arr.tolist() if v is not None})))
        else:
            categories.append(None)
    return FittedStep(spec, tuple(categories))


def _apply_encode(fitted: FittedStep, d: Dataset) -> Dataset:
    kind = fitted.spec.param_map["kind"]
    columns: list[Column] = []
    cells: list[np.ndarray] = []
    for col, arr, cats in zip(d.columns, d.cells, fitted.payload):
        if cats is None:
            columns.append(col)
            cells.append(arr.copy())
            continue
        tokens = arr.tolist()
        if kind == "onehot":
            # One 0/1 column per training category, lexicographic order;
            # missing or unseen tokens encode as all zeros.
            for cat in cats:
                columns.append(Column(f"{col.name}={cat}", NUMERIC))
                cells.append(np.array([1.0 if t == cat else 0.0 for t in tokens]))
        else:  # ordinal: category rank; unseen -> len(cats), missing stays missing
            rank = {cat: float(i) for i, cat in enumerate(cats)}
            unseen = float(len(cats))
            columns.append(Column(col.name, NUMERIC))
            cells.append(np.array([
                math.nan if t is None else rank.get(t, unseen) for t in tokens
            ]))
    return Dataset(tuple(columns), tuple(cells), d.labels.copy())


def _column_variance(arr: np.ndarray) -> float:
    present = arr[~np.isnan(arr)]
    if present.size < 2:
        return -math.inf
    return float(present.var(ddof=1))


def _column_anova_f(arr: np.ndarray, labels: np.ndarray) -> float:
    mask = ~np.isnan(arr)
    values = arr[mask]
    toks = labels[mask]
    groups = [values[toks == t] for t in sorted(set(toks.tolist()))]
    groups = [g for g in groups if g.size > 0]
    g = len(groups)
    n = sum(len(gr) for gr in groups)
    if g < 2 or n - g < 1:
        return 0.0
    grand = values.mean()
    ss_between = sum(len(gr) * (gr.mean() - grand) ** 2 for gr in groups)
    ss_within = sum(((gr - gr.mean()) ** 2).sum() for gr in groups)
    ms_between = ss_between / (g - 1)
    ms_within = ss_within / (n - g)
    if ms_within == 0.0:
        return math.inf if ms_between > 0.0 else 0.0
    return float(ms_between / ms_within)


def _fit_select(spec: StepSpec, d: Dataset) -> FittedStep:
    method = spec.param_map["method"]
    k = spec.param_map["k"]
    if k > d.n_features:
        raise StepError(f"select.k={k} exceeds the {d.n_features} available feature columns")
    scores = []
    for col, arr in zip(d.columns, d.cells):
        if col.kind != NUMERIC:
            scores.append(-math.inf)  # non-numeric columns rank last
        elif method == "variance":
            scores.append(_column_variance(arr))
        else:
            scores.append(_column_anova_f(arr, d.labels))
    order = sorted(range(d.n_features), key=lambda i: (-scores[i], i))
    kept = tuple(sorted(order[:k]))  # kept columns stay in original order
    return FittedStep(spec, kept)


def _apply_select(fitted: FittedStep, d: Dataset) -> Dataset:
    kept = fitted.payload
    if max(kept) >= d.n_features:
        raise StepError("select was fitted on a wider dataset than it is applied to")
    return Dataset(
        tuple(d.columns[i] for i in kept),
        tuple(d.cells[i].copy() for i in kept),
        d.labels.copy(),
    )


_FITTERS = {
    "impute": (_fit_impute, _apply_impute),
    "scale": (_fit_scale, _apply_scale),
    "encode": (_fit_encode, _apply_encode),
    "select": (_fit_select, _apply_select),
}


def fit_data_step(spec: StepSpec, d: Dataset) -> tuple[Dataset, FittedStep]:
    """Learn the step's statistics from ``d`` and transform ``d`` with them."""
    if spec.kind != DATA_STEP:
        raise StepError(f"{spec.name} is a model step, not a data step")
    fit, apply = _FITTERS[spec.name]
    fitted = fit(spec, d)
    return apply(fitted, d), fitted


def apply_fitted_step(fitted: FittedStep, d: Dataset) -> Dataset:
    """Transform ``d`` with statistics learned elsewhere (holdout scoring)."""
    return _FITTERS[fitted.spec.name][1](fitted, d)


def apply_data_step(spec: StepSpec, d: Dataset) -> Dataset:
    """Deterministic search-time transform: fit on ``d``, apply to ``d``.

    Labels and row count pass through unchanged.
    """
    return fit_data_step(spec, d)[0]


# ---------------------------------------------------------------------------
# Numeric schema guard
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemaGuard:
    """Per-column coercion plan making any dataset fully numeric and
    fully observed: categorical columns become ordinal codes (missing -> -1,
    unseen -> number of categories) and missing numeric cells take the
    column mean learned at fit time."""

    ordinal: tuple[tuple[str, ...] | None, ...]
    fills: tuple[float, ...]


def fit_schema_guard(d: Dataset) -> SchemaGuard:
    ordinal = []
    fills = []
    for col, arr in zip(d.columns, d.cells):
        if col.kind == CATEGORICAL:
            ordinal.append(tuple(sorted({v for v in arr.tolist() if v is not None})))
            fills.append(_FALLBACK_NUMERIC)
        else:
            ordinal.append(None)
            present = arr[~np.isnan(arr)]
            fills.append(float(present.mean()) if present.size else _FALLBACK_NUMERIC)
    return SchemaGuard(tuple(ordinal), tuple(fills))


def apply_schema_guard(guard: SchemaGuard, d: Dataset) -> Dataset:
    columns = []
    cells = []
    for col, arr, cats, fill in zip(d.columns, d.cells, guard.ordinal, guard.fills):
        if cats is None:
            out = arr.copy()
            out[np.isnan(out)] = fill
        else:
            rank = {cat: float(i) for i, cat in enumerate(cats)}
            unseen = float(len(cats))
            out = np.array([
                -1.0 if t is None else rank.get(t, unseen) for t in arr.tolist()
            ])
        columns.append(Column(col.name, NUMERIC))
        cells.append(out)
    return Dataset(tuple(columns), tuple(cells), d.labels.copy())


def coerce_numeric(d: Dataset) -> Dataset:
    """Coerce ``d`` to a fully numeric view using its own statistics."""
    return apply_schema_guard(fit_schema_guard(d), d)


# ---------------------------------------------------------------------------
# Model steps and the surrogate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurrogateConfig:
    """Fixed configuration of the intermediate-quality scorer. Never tuned
    during a run."""

    max_depth: int = 6
    min_leaf: int = 5
    split_criterion: str = "gini"

    def __post_init__(self):
        if self.max_depth < 1 or self.min_leaf < 1:
            raise StepError("surrogate max_depth and min_leaf must be >= 1")
        if self.split_criterion != "gini":
            raise StepError(f"unsupported split criterion {self.split_criterion!r}")


@dataclass(frozen=True)
class FittedModel:
    """Opaque handle to a trained model step."""

    spec: StepSpec
    classes: tuple[str, ...]
    column_names: tuple[str, ...]
    learner: Any

    def predict(self, d: Dataset) -> list[str]:
        X = d.numeric_matrix()
        idx = self.learner.predict(X)
        return [self.classes[i] for i in idx]


def _require_model_ready(d: Dataset, role: str) -> np.ndarray:
    for col, arr in zip(d.columns, d.cells):
        if col.kind != NUMERIC:
            raise StepError(
                f"{role} data still has categorical column {col.name!r}; "
                "the pipeline skipped encoding"
            )
        if np.isnan(arr).any():
            raise StepError(
                f"{role} data has missing cells in column {col.name!r}; "
                "the pipeline skipped imputation"
            )
    return d.numeric_matrix()


def _build_learner(spec: StepSpec, seed: int):
    p = spec.param_map
    if spec.name == "dtree":
        return DecisionTree(p["max_depth"], p["min_leaf"])
    if spec.name == "rforest":
        return RandomForest(p["n_trees"], p["max_depth"], derive_seed(seed, "forest"))
    if spec.name == "logreg":
        return LogisticOvR(p["lr"], p["epochs"], p["l2"], derive_seed(seed, "logreg"))
    if spec.name == "knn":
        return KNearest(p["k"])
    raise StepError(f"{spec.name} is not a model step")


def fit_model_step(spec: StepSpec, train: Dataset, seed: int) -> FittedModel:
    """Train the named learner on fully numeric, fully observed data."""
    if spec.kind != MODEL_STEP:
        raise StepError(f"{spec.name} is a data step, not a model step")
    X = _require_model_ready(train, "training")
    classes = train.classes
    if len(classes) < 2:
        raise StepError("model step requires at least 2 classes in training data")
    lookup = {tok: i for i, tok in enumerate(classes)}
    y = np.array([lookup[t] for t in train.labels.tolist()], dtype=np.intp)
    learner = _build_learner(spec, seed).fit(X, y, len(classes))
    return FittedModel(spec, classes, train.column_names, learner)


def fit_predict_model_step(spec: StepSpec, split: SplitPair, seed: int) -> tuple[float, FittedModel]:
    """Train on ``split.train`` and return validation accuracy on
    ``split.valid`` plus the fitted model."""
    model = fit_model_step(spec, split.train, seed)
    _require_model_ready(split.valid, "validation")
    predicted = model.predict(split.valid)
    return accuracy(predicted, split.valid.labels.tolist()), model


def surrogate_score(x: Dataset, cfg: SurrogateConfig, split_seed: int) -> float:
    """Validation accuracy of the fixed tree surrogate on an 80/20 stratified
    split of ``x`` derived from ``split_seed``."""
    X = _require_model_ready(x, "surrogate input")
    if x.n_classes < 2:
        raise StepError("surrogate requires at least 2 classes")
    split = split_train_valid(x, EVAL_VALID_FRACTION, split_seed)
    classes = split.train.classes
    lookup = {tok: i for i, tok in enumerate(classes)}
    y_train = np.array([lookup[t] for t in split.train.labels.tolist()], dtype=np.intp)
    tree = DecisionTree(cfg.max_depth, cfg.min_leaf).fit(
        split.train.numeric_matrix(), y_train, len(classes)
    )
    idx = tree.predict(split.valid.numeric_matrix())
    predicted = [classes[i] for i in idx]
    return accuracy(predicted, split.valid.labels.tolist())


# ---------------------------------------------------------------------------
# Single-step evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepOutcome:
    """Result of one executed step: its accuracy plus either the transformed
    dataset (data step) or the fitted model (model step)."""

    acc: float
    kind: str
    transformed: Dataset | None
    fitted_model: FittedModel | None
    elapsed: float


@dataclass(frozen=True)
class StepFailure:
    """A step whose preconditions failed; reported, never raised."""

    error: str
    elapsed: float


def evaluate_step(
    spec: StepSpec,
    data: Dataset,
    surrogate: SurrogateConfig,
    seed: int,
) -> StepOutcome | StepFailure:
    """Execute one step against ``data``.

    A data step is applied and its output scored by the surrogate on a
    numerically coerced view; a model step is trained and scored on the
    run-level 80/20 split. The split is derived from ``seed`` alone, so every
    step of a run shares one row partition. Precondition violations come back
    as :class:`StepFailure`.
    """
    start = time.perf_counter()
    split_seed = derive_seed(seed, "eval-split")
    try:
        if spec.kind == DATA_STEP:
            transformed = apply_data_step(spec, data)
            acc = surrogate_score(coerce_numeric(transformed), surrogate, split_seed)
            return StepOutcome(acc, DATA_STEP, transformed, None, time.perf_counter() - start)
        split = split_train_valid(data, EVAL_VALID_FRACTION, split_seed)
        acc, model = fit_predict_model_step(spec, split, derive_seed(seed, "model"))
        return StepOutcome(acc, MODEL_STEP, None, model, time.perf_counter() - start)
    except (StepError, DataError) as exc:
        return StepFailure(str(exc), time.perf_counter() - start)
