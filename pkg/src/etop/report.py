"""Canonical serializations and figure rendering.

The JSON projections here are replay-deterministic: they carry no wall-clock
measurements and no cache-budget echo, so byte equality of two serialized
results means the searches agreed on every semantic output. Wall-clock
numbers live on stderr and, optionally, in the gains report when wall-clock
timing is explicitly requested.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import TYPE_CHECKING

from .engine import (
    STATUS_COMPLETED,
    SearchResult,
)

if TYPE_CHECKING:  # pragma: no cover
    from .harness import GainsReport

SEARCH_RESULT_SCHEMA = "etop-search-result-v1"
GAINS_SCHEMA = "etop-gains-v1"

GAINS_CSV_HEADER = (
    "dataset,etop_acc,grid_acc,acc_gain_pp,time_gain_factor,"
    "pipelines_completed,pipelines_total,steps_etop,steps_grid"
)


def result_to_dict(res: SearchResult) -> dict:
    """Replay-deterministic projection of a search result."""
    winner = None
    if res.winner is not None:
        pipeline, acc = res.winner
        winner = {"pipeline": pipeline.key, "acc": acc}
    outcomes = []
    for o in res.outcomes:
        outcomes.append({
            "pipeline": o.pipeline.key,
            "status": o.status,
            "stopped_at": o.stopped_at,
            "final_acc": o.final_acc,
            "steps_executed": o.steps_executed,
            "steps_cache_hit": o.steps_cache_hit,
        })
    history = {
        key: {"acc": e.acc, "kind": e.kind, "origin": e.origin}
        for key, e in sorted(res.history.entries.items())
    }
    return {
        "schema": SEARCH_RESULT_SCHEMA,
        "mode": res.mode,
        "seed": res.seed,
        "config": {
            "sample_size": res.config.sample_size,
            "pipeline_fraction": res.config.pipeline_fraction if res.mode == "etop" else None,
            "surrogate": {
                "max_depth": res.config.surrogate.max_depth,
                "min_leaf": res.config.surrogate.min_leaf,
                "split_criterion": res.config.surrogate.split_criterion,
            },
        },
        "winner": winner,
        "no_winner_reason": res.no_winner_reason,
        "hoe_pipelines": [p.key for p in res.hoe_pipelines],
        "outcomes": outcomes,
        "history": history,
        "counters": {
            "hoe_steps_executed": res.counters.hoe_steps_executed,
            "search_steps_executed": res.counters.search_steps_executed,
            "steps_executed_total": res.counters.steps_executed_total,
            "cache_hits": res.counters.cache_hits,
        },
        "pipelines_total": len(res.outcomes),
        "pipelines_completed": sum(1 for o in res.outcomes if o.status == STATUS_COMPLETED),
    }


def result_to_json(res: SearchResult) -> str:
    return json.dumps(result_to_dict(res), indent=2) + "\n"


def gains_to_dict(g: "GainsReport") -> dict:
    return {
        "schema": GAINS_SCHEMA,
        "dataset": g.dataset,
        "etop_acc": g.etop_acc,
        "grid_acc": g.grid_acc,
        "acc_gain_pp": g.acc_gain_pp,
        "time_gain_factor": g.time_gain_factor,
        "pipelines_completed_etop": g.pipelines_completed_etop,
        "pipelines_total": g.pipelines_total,
        "steps_executed_etop": g.steps_executed_etop,
        "steps_executed_grid": g.steps_executed_grid,
        "seed": g.seed,
        "timing_mode": g.timing_mode,
    }


def gains_to_json(g: "GainsReport") -> str:
    return json.dumps(gains_to_dict(g), indent=2) + "\n"


def gains_csv_row(g: "GainsReport") -> str:
    cells = [
        g.dataset,
        repr(g.etop_acc),
        repr(g.grid_acc),
        repr(g.acc_gain_pp),
        repr(g.time_gain_factor),
        str(g.pipelines_completed_etop),
        str(g.pipelines_total),
        str(g.steps_executed_etop),
        str(g.steps_executed_grid),
    ]
    return ",".join(cells)


def write_gains_csv(reports: list["GainsReport"], path: Path, *, aggregate: bool = False) -> None:
    lines = [GAINS_CSV_HEADER]
    lines.extend(gains_csv_row(g) for g in reports)
    if aggregate and reports:
        from .harness import aggregate_reports

        lines.append(gains_csv_row(aggregate_reports(reports)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

_PNG_METADATA = {"Software": "etop"}  # keep output bytes run-independent


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="png", dpi=150, metadata=_PNG_METADATA)


def render_figures(reports: list["GainsReport"], outdir: Path) -> list[Path]:
    """Render the report figures next to the delimited output.

    Produces three PNGs: winner holdout accuracies (both modes), the
    time-gain factor, and end-to-end pipeline completion counts per dataset.
    """
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    outdir.mkdir(parents=True, exist_ok=True)
    names = [g.dataset for g in reports]
    x = range(len(reports))
    written = []

    fig, ax = plt.subplots(figsize=(max(4.0, 1.8 * len(reports) + 2.0), 3.6))
    width = 0.38
    ax.bar([i - width / 2 for i in x], [g.etop_acc for g in reports], width,
           label="early-termination search", color="#2a6fb0")
    ax.bar([i + width / 2 for i in x], [g.grid_acc for g in reports], width,
           label="full grid", color="#c17a2f")
    ax.set_xticks(list(x), names, rotation=20, ha="right")
    ax.set_ylabel("winner holdout accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "accuracy.png"
    _save(fig, path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(max(4.0, 1.8 * len(reports) + 2.0), 3.6))
    ax.bar(list(x), [g.time_gain_factor for g in reports], 0.5, color="#3d8f5f")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xticks(list(x), names, rotation=20, ha="right")
    ax.set_ylabel("time-gain factor (grid / early-termination)")
    fig.tight_layout()
    path = outdir / "time_gain.png"
    _save(fig, path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(max(4.0, 1.8 * len(reports) + 2.0), 3.6))
    ax.bar(list(x), [g.pipelines_total for g in reports], 0.5,
           label="enumerated", color="#d9d9d9")
    ax.bar(list(x), [g.pipelines_completed_etop for g in reports], 0.5,
           label="completed end-to-end", color="#2a6fb0")
    ax.set_xticks(list(x), names, rotation=20, ha="right")
    ax.set_ylabel("pipelines")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "pruning.png"
    _save(fig, path)
    plt.close(fig)
    written.append(path)
    return written
