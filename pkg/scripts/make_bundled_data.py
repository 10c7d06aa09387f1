#!/usr/bin/env python3
"""Regenerate the bundled sample data under src/etop/data/.

The CSVs are frozen into the repository; this script only records their
provenance. The breast-cancer table is scikit-learn's built-in copy of the
classic UCI diagnostic dataset; the two synthetic sets are drawn from fixed
seeds and tuned so that search-space choices produce genuinely different
intermediate data quality (informative vs. high-variance noise columns,
missing cells, categorical features, class imbalance).
"""

import csv
import json
from pathlib import Path

import numpy as np
from sklearn.datasets import load_breast_cancer

OUT = Path(__file__).resolve().parent.parent / "src" / "etop" / "data"
SYNTH_MIXED_SEED = 20240817
SYNTH_CREDIT_SEED = 424242


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fmt(x):
    return format(float(x), ".6g")


def make_breast_cancer():
    data = load_breast_cancer()
    names = [n.replace(" ", "_") for n in data.feature_names]
    rows = []
    for x, y in zip(data.data, data.target):
        rows.append([fmt(v) for v in x] + [data.target_names[y]])
    write_csv(OUT / "breast_cancer.csv", names + ["diagnosis"], rows)


def make_synth_mixed(n=500):
    """Imbalanced 3-class set, exactly 500 rows: four informative numerics
    with moderate overlap, one informative categorical, one high-variance
    noise column (a trap for variance-based selection), and scattered
    missing cells."""
    rng = np.random.default_rng(SYNTH_MIXED_SEED)
    classes = ["alpha", "beta", "gamma"]
    y = rng.choice(3, size=n, p=[0.55, 0.30, 0.15])
    centers = np.array([
        [0.0, 0.0, 0.8, -0.8],
        [1.4, 1.2, -0.4, 0.6],
        [-1.2, 1.8, 1.4, 1.6],
    ])
    X = centers[y] + rng.normal(0.0, 1.0, size=(n, 4))
    noise = rng.uniform(-8.0, 8.0, size=n)
    palettes = [
        ["red", "red", "green", "blue"],
        ["green", "green", "blue", "yellow"],
        ["blue", "yellow", "yellow", "red"],
    ]
    color = [palettes[c][rng.integers(0, 4)] for c in y]
    miss_x2 = rng.random(n) < 0.05
    miss_color = rng.random(n) < 0.03
    rows = []
    for i in range(n):
        rows.append([
            fmt(X[i, 0]),
            "" if miss_x2[i] else fmt(X[i, 1]),
            fmt(X[i, 2]),
            fmt(X[i, 3]),
            "" if miss_color[i] else color[i],
            fmt(noise[i]),
            classes[y[i]],
        ])
    write_csv(OUT / "synth_mixed.csv", ["x1", "x2", "x3", "x4", "color", "noise1", "label"], rows)


def make_synth_credit(n=800):
    """Imbalanced binary set with informative numerics and categoricals,
    two noise columns (one high-variance), and missing cells."""
    rng = np.random.default_rng(SYNTH_CREDIT_SEED)
    y = (rng.random(n) < 0.3).astype(int)
    income = np.round(np.exp(rng.normal(10.4 - 0.35 * y, 0.45, n)) / 100) * 100
    age = np.clip(np.round(rng.normal(44 - 4 * y, 12, n)), 18, 90)
    debt = np.clip(rng.normal(0.28 + 0.16 * y, 0.13, n), 0.0, 1.2)
    late = rng.poisson(0.4 + 1.4 * y)
    noise_a = rng.uniform(0.0, 1000.0, n)
    noise_b = rng.normal(0.0, 1.0, n)
    purposes = [["car", "home", "home", "education"], ["car", "repairs", "car", "cash"]]
    purpose = [purposes[c][rng.integers(0, 4)] for c in y]
    region = [["north", "south", "east", "west"][rng.integers(0, 4)] for _ in range(n)]
    miss_debt = rng.random(n) < 0.06
    miss_purpose = rng.random(n) < 0.04
    rows = []
    for i in range(n):
        rows.append([
            fmt(income[i]),
            fmt(age[i]),
            "" if miss_debt[i] else fmt(debt[i]),
            fmt(float(late[i])),
            "" if miss_purpose[i] else purpose[i],
            region[i],
            fmt(noise_a[i]),
            fmt(noise_b[i]),
            "default" if y[i] else "ok",
        ])
    write_csv(
        OUT / "synth_credit.csv",
        ["income", "age", "debt_ratio", "late_payments", "purpose", "region",
         "noise_a", "noise_b", "status"],
        rows,
    )


def make_space():
    """Default space: the first slot carries the quality-determining choices
    (feature selection, including variance-score traps on noisy data) so that
    first-step accuracies straddle the history median; later slots preserve
    or mildly perturb data quality and the model slot varies widely."""
    def step(name, **params):
        return {"name": name, "params": params}

    space = {"slots": [
        [step("select", method="anova_f", k=4),
         step("select", method="anova_f", k=2),
         step("select", method="variance", k=4),
         step("select", method="variance", k=2),
         step("select", method="variance", k=1)],
        [step("impute", strategy="mean"),
         step("impute", strategy="median")],
        [step("scale", kind="standard"),
         step("scale", kind="none")],
        [step("dtree", max_depth=6, min_leaf=2),
         step("rforest", n_trees=12, max_depth=6),
         step("knn", k=5),
         step("logreg", lr=0.1, epochs=300, l2=0.01)],
    ]}
    path = OUT / "default_space.json"
    path.write_text(json.dumps(space, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def make_manifest():
    manifest = {"entries": [
        {"name": "breast_cancer", "data": "breast_cancer.csv", "target": "diagnosis",
         "space": "default_space.json"},
        {"name": "synth_mixed", "data": "synth_mixed.csv", "target": "label",
         "space": "default_space.json"},
        {"name": "synth_credit", "data": "synth_credit.csv", "target": "status",
         "space": "default_space.json"},
    ]}
    path = OUT / "bench_manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    make_breast_cancer()
    make_synth_mixed()
    make_synth_credit()
    make_space()
    make_manifest()
