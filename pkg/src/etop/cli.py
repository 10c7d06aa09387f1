"""Command-line front end.

Subcommands: ``search`` (early-terminating mode), ``grid`` (exhaustive
baseline), ``compare`` (both modes on one dataset, gains report + CSV +
figures), ``bench`` (compare over a manifest of datasets).

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 no pipeline completed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import (
    DEFAULT_CACHE_BUDGET,
    DEFAULT_PIPELINE_FRACTION,
    DEFAULT_SAMPLE_SIZE,
    MODE_ETOP,
    MODE_GRID,
    grid_search,
    load_space,
    search,
)
from .errors import ConfigError, DataError, EtopError, NoWinnerError, StepError
from .harness import (
    RunConfig,
    compare_on_dataset,
    load_bench_manifest,
    run_bench,
)
from .report import (
    gains_to_json,
    render_figures,
    result_to_json,
    write_gains_csv,
)
from .steps import SurrogateConfig
from .tabular import load_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NO_WINNER = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_run_flags(p: argparse.ArgumentParser, *, fraction: bool) -> None:
    p.add_argument("--data", required=True, help="CSV dataset path")
    p.add_argument("--target", required=True, help="label column name")
    p.add_argument("--space", required=True, help="search-space JSON path")
    p.add_argument("--seed", required=True, type=int, help="run seed")
    p.add_argument("--sample-size", type=int, default=DEFAULT_SAMPLE_SIZE,
                   help="stratified sample size (default %(default)s)")
    if fraction:
        p.add_argument("--pipeline-fraction", type=float, default=DEFAULT_PIPELINE_FRACTION,
                       help="fraction of pipelines seeding the history (default %(default)s)")
    p.add_argument("--cache-budget", type=int, default=DEFAULT_CACHE_BUDGET,
                   help="transformed-data cache budget in bytes; 0 disables data caching")
    p.add_argument("--surrogate-depth", type=int, default=6, help=argparse.SUPPRESS)
    p.add_argument("--surrogate-min-leaf", type=int, default=5, help=argparse.SUPPRESS)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="etop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("search", help="early-terminating pipeline search")
    _add_run_flags(p, fraction=True)
    p.add_argument("--out", help="result JSON path (default: stdout)")

    p = sub.add_parser("grid", help="exhaustive full-grid baseline")
    _add_run_flags(p, fraction=False)
    p.add_argument("--out", help="result JSON path (default: stdout)")

    p = sub.add_parser("compare", help="run both modes and report the gains")
    _add_run_flags(p, fraction=True)
    p.add_argument("--out", default="etop_report", help="output directory (default %(default)s)")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument("--wallclock", action="store_true",
                   help="report wall-clock time gains (output no longer byte-reproducible)")

    p = sub.add_parser("bench", help="compare over a manifest of datasets")
    p.add_argument("--manifest", required=True, help="bench manifest JSON path")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--sample-size", type=int, default=DEFAULT_SAMPLE_SIZE)
    p.add_argument("--pipeline-fraction", type=float, default=DEFAULT_PIPELINE_FRACTION)
    p.add_argument("--cache-budget", type=int, default=DEFAULT_CACHE_BUDGET)
    p.add_argument("--surrogate-depth", type=int, default=6, help=argparse.SUPPRESS)
    p.add_argument("--surrogate-min-leaf", type=int, default=5, help=argparse.SUPPRESS)
    p.add_argument("--out", default="etop_report", help="output directory (default %(default)s)")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--wallclock", action="store_true")
    return parser


def _surrogate(args) -> SurrogateConfig:
    return SurrogateConfig(max_depth=args.surrogate_depth, min_leaf=args.surrogate_min_leaf)


def _run_config(args, mode: str) -> RunConfig:
    return RunConfig(
        data_path=Path(args.data),
        target_column=args.target,
        space_path=Path(args.space),
        mode=mode,
        seed=args.seed,
        sample_size=args.sample_size,
        pipeline_fraction=getattr(args, "pipeline_fraction", DEFAULT_PIPELINE_FRACTION),
        surrogate=_surrogate(args),
        output_path=Path(args.out) if getattr(args, "out", None) else None,
        cache_data_budget=args.cache_budget,
        wallclock=getattr(args, "wallclock", False),
        figures=not getattr(args, "no_figures", False),
    )


def _cmd_single(args, mode: str) -> int:
    run = _run_config(args, mode)
    dataset = load_csv(run.data_path, run.target_column)
    space = load_space(run.space_path)
    runner = search if mode == MODE_ETOP else grid_search
    result = runner(space, dataset, run.search_config())
    payload = result_to_json(result)
    if run.output_path:
        run.output_path.write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    print(
        f"{mode}: {result.counters.steps_executed_total} step evaluations, "
        f"{sum(1 for o in result.outcomes if o.status == 'completed')}/"
        f"{len(result.outcomes)} pipelines completed "
        f"in {result.elapsed_seconds:.2f}s",
        file=sys.stderr,
    )
    if result.winner is None:
        print(f"warning: {result.no_winner_reason}", file=sys.stderr)
        return EXIT_NO_WINNER
    return EXIT_OK


def _cmd_compare(args) -> int:
    run = _run_config(args, MODE_ETOP)
    raw = load_csv(run.data_path, run.target_column)
    space = load_space(run.space_path)
    name = run.data_path.stem
    artifacts = compare_on_dataset(
        raw, space, run.search_config(), dataset_name=name, wallclock=run.wallclock,
    )
    outdir = run.output_path
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "gains.json").write_text(gains_to_json(artifacts.gains), encoding="utf-8")
    write_gains_csv([artifacts.gains], outdir / "gains.csv")
    (outdir / "etop_result.json").write_text(result_to_json(artifacts.etop_result), encoding="utf-8")
    (outdir / "grid_result.json").write_text(result_to_json(artifacts.grid_result), encoding="utf-8")
    if run.figures:
        render_figures([artifacts.gains], outdir / "figures")
    g = artifacts.gains
    print(
        f"{name}: etop {g.etop_acc:.4f} vs grid {g.grid_acc:.4f} on holdout "
        f"({g.acc_gain_pp:+.2f} pp), time-gain {g.time_gain_factor:.2f}x "
        f"[{g.timing_mode}], completed {g.pipelines_completed_etop}/{g.pipelines_total}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    entries = load_bench_manifest(args.manifest)
    summary = run_bench(
        entries,
        args.seed,
        sample_size=args.sample_size,
        pipeline_fraction=args.pipeline_fraction,
        surrogate=_surrogate(args),
        cache_data_budget=args.cache_budget,
        wallclock=args.wallclock,
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_gains_csv(summary.reports, outdir / "bench.csv", aggregate=True)
    import json as _json

    (outdir / "bench_summary.json").write_text(
        _json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    if not args.no_figures:
        render_figures(summary.reports, outdir / "figures")
    agg = summary.aggregate
    print(
        f"bench: {len(summary.reports)} datasets, mean etop acc {agg.etop_acc:.4f} "
        f"vs grid {agg.grid_acc:.4f}, wins {summary.etop_wins}/{summary.grid_wins}/"
        f"{summary.ties} (etop/grid/tie), mean time-gain {agg.time_gain_factor:.2f}x",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "search":
            return _cmd_single(args, MODE_ETOP)
        if args.command == "grid":
            return _cmd_single(args, MODE_GRID)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_bench(args)
    except (ConfigError, StepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NoWinnerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_WINNER
    except EtopError as exc:  # safety net for new error kinds
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
