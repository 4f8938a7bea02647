"""
Shared driver for the experiment subcommands: resolve the spec, run it, write
the result files and print a summary.
"""

from pathlib import Path
from typing import List, NoReturn, Optional

import pandas as pd
import typer

from privcon.core.harness import ResultTable, run_experiment
from privcon.core.spec import ExperimentKind, ExperimentSpec, default_spec, load_spec
from privcon.exceptions import ModelViolationError, PrivconError, SpecError
from privcon.utils import (
    console,
    create_directory,
    err_console,
    create_table,
    format_bits,
    print_error,
    print_header,
    print_info,
    print_success,
    resolve_output_dir,
)

PLOTTED_EXPERIMENTS = {ExperimentKind.CONVERGENCE, ExperimentKind.TRADEOFF, ExperimentKind.TOPOLOGY}

SUMMARY_METRICS = {
    ExperimentKind.CONVERGENCE: ["final_error", "output_error_std"],
    ExperimentKind.TRADEOFF: ["utility_nmi", "privacy_nmi", "lower_bound_nmi"],
    ExperimentKind.TOPOLOGY: ["utility_nmi", "privacy_nmi", "lower_bound_nmi"],
}

FIX_HINTS = {
    SpecError: "Check the spec file keys and values against the experiment's defaults.",
    ModelViolationError: "Check the graph connectivity and the corrupted set (every honest node needs a corrupted neighbour).",
}


def resolve_spec(
    kind: ExperimentKind,
    spec_path: Optional[Path],
    trials: Optional[int],
    seed: Optional[int],
    sigma: Optional[List[float]],
    graph_files: Optional[List[str]] = None,
) -> ExperimentSpec:
    """Defaults, then the spec file, then command-line flags."""
    spec = load_spec(spec_path, kind) if spec_path else default_spec(kind)
    return spec.with_overrides(trials=trials, seed=seed, sigma_sq=sigma, graph_files=graph_files)


def _print_spec(spec: ExperimentSpec) -> None:
    table = create_table(f"Resolved spec ({spec.spec_hash})", ["Key", "Value"])
    for key, value in spec.to_dict().items():
        table.add_row(key, str(value))
    console.print(table)


def _print_summary(kind: ExperimentKind, table: ResultTable) -> None:
    frame = table.to_frame()
    metrics = SUMMARY_METRICS.get(kind)
    if metrics is None:
        frame = frame[~frame["metric"].str.endswith("_repeat_std")]
    else:
        frame = frame[frame["metric"].isin(metrics)]
    if frame.empty:
        return
    keys = ["experiment", "mechanism", "sigma_sq", "metric"]
    wide = frame.fillna({"sigma_sq": -1.0}).pivot_table(
        index=keys, columns="method", values="value", aggfunc="first", sort=True,
    )
    summary = create_table("Summary", keys + [str(c) for c in wide.columns])
    for index, row in wide.iterrows():
        experiment, mechanism, sigma_sq, metric = index
        cells = [experiment, mechanism, "-" if sigma_sq < 0 else f"{sigma_sq:g}", metric]
        cells += ["" if pd.isna(v) else format_bits(v) for v in row.to_numpy()]
        summary.add_row(*cells)
    console.print()
    console.print(summary)


def experiment_command(
    kind: ExperimentKind,
    spec_path: Optional[Path] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    sigma: Optional[List[float]] = None,
    workers: Optional[int] = None,
    output_dir: Optional[str] = None,
    graph_files: Optional[List[str]] = None,
) -> None:
    """
    Run one experiment end to end.

    Writes `<experiment>.csv` into the output directory, plus `<experiment>.dat`
    (gnuplot columns) for the plotted experiments.
    """
    try:
        spec = resolve_spec(kind, spec_path, trials, seed, sigma, graph_files)
    except PrivconError as e:
        _fail(e)

    out_dir = resolve_output_dir(output_dir)
    try:
        create_directory(out_dir)
    except OSError as e:
        print_error(f"Output directory {out_dir} is not writable: {e}")
        raise typer.Exit(1)

    print_header(f"Experiment: {kind.value}")
    _print_spec(spec)

    try:
        with console.status(f"[bold cyan]Running {spec.trials} trials...", spinner="dots"):
            table = run_experiment(spec, workers=workers)
    except PrivconError as e:
        _fail(e)
    except ValueError as e:
        print_error(str(e))
        raise typer.Exit(1)

    csv_path = out_dir / f"{kind.value}.csv"
    table.to_csv(csv_path)
    print_success(f"Wrote {csv_path}")
    if kind in PLOTTED_EXPERIMENTS:
        dat_path = out_dir / f"{kind.value}.dat"
        table.to_gnuplot(dat_path)
        print_success(f"Wrote {dat_path}")

    _print_summary(kind, table)
    print_info(f"{len(table.rows)} rows, spec hash {spec.spec_hash}")


def _fail(e: PrivconError) -> NoReturn:
    print_error(str(e))
    for cls, hint in FIX_HINTS.items():
        if isinstance(e, cls):
            err_console.print(f"ℹ [info]{hint}[/info]")
            break
    raise typer.Exit(e.exit_code)
