"""
Main entry point for privcon CLI.
"""

import sys
from pathlib import Path
from typing import List, Optional

import click
import typer

from privcon.commands import (
    calibrate_command,
    check_graph_command,
    convergence_command,
    compare_command,
    topology_command,
    tradeoff_command,
)
from privcon.utils import console, setup_logging
from privcon.utils.helpers import OUTPUT_DIR_ENV

app = typer.Typer(
    name="privcon",
    help="Privacy-preserving distributed average consensus simulator",
    add_completion=False,
    rich_markup_mode="rich",
)

SpecOption = typer.Option(None, "--spec", "-s", help="YAML experiment spec file")
TrialsOption = typer.Option(None, "--trials", "-n", min=1, help="Monte-Carlo trials (overrides the spec)")
SeedOption = typer.Option(None, "--seed", help="Master seed (overrides the spec)")
SigmaOption = typer.Option(None, "--sigma", help="Noise variance σ²; repeat for a grid (overrides the spec)")
WorkersOption = typer.Option(None, "--workers", "-j", min=1, help="Worker threads [default: physical cores]")
OutputOption = typer.Option(None, "--output-dir", "-o", envvar=OUTPUT_DIR_ENV,
                            help="Directory for CSV and gnuplot files [default: ./results]")
GraphFileOption = typer.Option(None, "--graph-file", "-g",
                               help="Edge-list file or bundled graph name (overrides the spec); repeat for topology")


@app.command("convergence")
def convergence(
    spec: Optional[Path] = SpecOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    sigma: Optional[List[float]] = SigmaOption,
    workers: Optional[int] = WorkersOption,
    output_dir: Optional[str] = OutputOption,
    graph_file: Optional[List[str]] = GraphFileOption,
) -> None:
    """
    📉 Consensus error against iterations for no noise, DP, SMPC and DOSP.

    Examples:

        $ privcon convergence --trials 1000

        $ privcon convergence --sigma 0 --sigma 1 --sigma 100
    """
    convergence_command(spec, trials, seed, sigma, workers, output_dir, graph_file)


@app.command("tradeoff")
def tradeoff(
    spec: Optional[Path] = SpecOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    sigma: Optional[List[float]] = SigmaOption,
    workers: Optional[int] = WorkersOption,
    output_dir: Optional[str] = OutputOption,
    graph_file: Optional[List[str]] = GraphFileOption,
) -> None:
    """
    ⚖️  Utility, privacy and lower bound of DP over a noise-variance grid.

    Every node except the target is corrupted.

    Example:

        $ privcon tradeoff --trials 1000 --seed 3
    """
    tradeoff_command(spec, trials, seed, sigma, workers, output_dir, graph_file)


@app.command("topology")
def topology(
    spec: Optional[Path] = SpecOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    sigma: Optional[List[float]] = SigmaOption,
    workers: Optional[int] = WorkersOption,
    output_dir: Optional[str] = OutputOption,
    graph_file: Optional[List[str]] = GraphFileOption,
) -> None:
    """
    🕸️  SMPC and DOSP privacy of node 1 on two graphs differing in one edge.

    Example:

        $ privcon topology --spec topology.yaml
    """
    topology_command(spec, trials, seed, sigma, workers, output_dir, graph_file)


@app.command("calibrate")
def calibrate(
    spec: Optional[Path] = SpecOption,
    trials: Optional[int] = TrialsOption,
    seed: Optional[int] = SeedOption,
    sigma: Optional[List[float]] = SigmaOption,
    workers: Optional[int] = WorkersOption,
    output_dir: Optional[str] = OutputOption,
) -> None:
    """
    🎯 Check the kNN estimator against closed-form Gaussian MI.

    Example:

        $ privcon calibrate --trials 1000 --seed 1
    """
    calibrate_command(spec, trials, seed, sigma, workers, output_dir)


@app.command("check-graph")
def check_graph(
    graph: Optional[str] = typer.Option(None, "--graph", "-g", help="Bundled graph name or edge-list file"),
    n: int = typer.Option(10, "--nodes", min=2, help="Nodes of the generated geometric graph"),
    radius_sq: Optional[float] = typer.Option(None, "--radius-sq", help="Squared radius [default: 2 ln n / n]"),
    seed: int = typer.Option(7, "--seed", help="Geometric graph seed"),
    corrupted: Optional[List[int]] = typer.Option(None, "--corrupted", "-c", help="Corrupted node (1-based); repeat"),
    target: Optional[int] = typer.Option(None, "--target", "-t", help="Target node (1-based)"),
) -> None:
    """
    🏥 Check connectivity, weights, dual subspace and the adversary model.

    Examples:

        $ privcon check-graph --graph topology_g --corrupted 5 --corrupted 8 --target 1

        $ privcon check-graph --nodes 20 --seed 3
    """
    check_graph_command(graph, n, radius_sq, seed, corrupted, target)


@app.command("table1")
def table1(
    graph: str = typer.Option("topology_g_prime", "--graph", "-g", help="Graph for h and n_h"),
    corrupted: Optional[List[int]] = typer.Option(None, "--corrupted", "-c",
                                                  help="Corrupted node (1-based); repeat [default: 5 8]"),
    target: int = typer.Option(1, "--target", "-t", min=1, help="Target node (1-based)"),
    sigma: float = typer.Option(1.0, "--sigma", min=0.0, help="Noise variance σ²"),
    sigma_s: float = typer.Option(1.0, "--sigma-s", min=0.0, help="Private data variance σ_S²"),
) -> None:
    """
    📋 Mechanism comparison table with the analytic formulas evaluated.

    Example:

        $ privcon table1 --sigma 10
    """
    compare_command(graph, corrupted, target, sigma, sigma_s)


app.command("compare", help="📋 Same table as table1.")(table1)


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        help="Show version and exit",
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", help="Debug logging on stderr"),
) -> None:
    """
    privcon - Privacy-preserving distributed average consensus simulator

    Runs consensus experiments under DP, SMPC and subspace perturbation and
    reports output utility and individual privacy.
    """
    if version:
        from privcon import __version__
        console.print(f"privcon version {__version__}")
        raise typer.Exit()

    setup_logging(verbose)

    # If no subcommand is provided, show help
    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())
        raise typer.Exit()


def run() -> None:
    """Console-script entry; usage errors exit with code 1."""
    try:
        code = app(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        code = 1
    except click.Abort:
        code = 1
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    run()
