import numpy as np
import pytest

from etop.tabular import CATEGORICAL, NUMERIC, make_dataset


@pytest.fixture
def toy_blobs():
    """Two linearly separable 1-D blobs: x < 0 -> a, x > 10 -> b."""
    xs = [-3.0, -2.0, -1.5, -1.0, -0.5, 10.5, 11.0, 12.0, 12.5, 13.0]
    labels = ["a"] * 5 + ["b"] * 5
    return make_dataset([("x", NUMERIC, xs)], labels)


def blob_dataset(n_per_class=60, spread=0.6, gap=4.0, n_noise=0, seed=0, n_classes=2):
    """Well-separated gaussian blobs in 2-D plus optional noise columns."""
    rng = np.random.default_rng(seed)
    cols_x, cols_y, labels = [], [], []
    for c in range(n_classes):
        cols_x.extend(rng.normal(gap * c, spread, n_per_class).tolist())
        cols_y.extend(rng.normal(-gap * c, spread, n_per_class).tolist())
        labels.extend([chr(ord("a") + c)] * n_per_class)
    columns = [("f0", NUMERIC, cols_x), ("f1", NUMERIC, cols_y)]
    for j in range(n_noise):
        columns.append((f"noise{j}", NUMERIC, rng.uniform(-50, 50, len(labels)).tolist()))
    return make_dataset(columns, labels)


def trap_blobs(n_per_class=400, seed=0):
    """Binary dataset where half the selection choices destroy label signal:
    three informative columns of unequal strength plus three high-variance
    noise columns that bait variance-based selection."""
    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    y = np.array([0] * n_per_class + [1] * n_per_class)
    gaps = [3.0, 2.0, 1.5]
    columns = []
    for j, gap in enumerate(gaps):
        sign = 1 if j % 2 == 0 else -1
        columns.append((f"x{j}", NUMERIC, rng.normal(gap * y * sign, 1.0).tolist()))
    for j in range(3):
        columns.append((f"noise{j}", NUMERIC, rng.uniform(-50, 50, n).tolist()))
    return make_dataset(columns, ["a" if c == 0 else "b" for c in y])


def trap_space():
    """16-pipeline space over trap_blobs: 2 of 4 selection choices pick the
    noise columns; the models are deliberately mild so the quality signal
    lives in the selection slot."""
    from etop.steps import StepSpec

    def S(name, **p):
        return StepSpec.make(name, **p)

    from etop.engine import SearchSpace

    return SearchSpace((
        (S("select", method="anova_f", k=3), S("select", method="anova_f", k=2),
         S("select", method="variance", k=3), S("select", method="variance", k=2)),
        (S("dtree", max_depth=2, min_leaf=8), S("knn", k=15),
         S("rforest", n_trees=4, max_depth=2), S("logreg", lr=0.05, epochs=80, l2=0.1)),
    ))


def mixed_dataset(n=120, seed=3, missing=True):
    """Small mixed-schema dataset: informative numerics, one categorical,
    optional missing cells."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    x1 = (2.5 * y + rng.normal(0, 1, n)).tolist()
    x2 = (-1.5 * y + rng.normal(0, 1, n)).tolist()
    color = [["red", "blue"][c] if rng.random() > 0.2 else ["green", "yellow"][c] for c in y]
    if missing:
        x2 = [None if rng.random() < 0.1 else v for v in x2]
        color = [None if rng.random() < 0.05 else c for c in color]
    return make_dataset(
        [("x1", NUMERIC, x1), ("x2", NUMERIC, x2), ("color", CATEGORICAL, color)],
        ["pos" if c else "neg" for c in y],
    )
