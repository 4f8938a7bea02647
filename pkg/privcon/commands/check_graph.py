"""
privcon check-graph command - Check a graph and corrupted set before running experiments.
"""

from typing import List, Optional

import typer
from rich.table import Table

from privcon.core.diagnostics import run_diagnostics
from privcon.core.graph import Graph, connected_geometric_graph, default_radius_sq
from privcon.core.harness import load_graph_source
from privcon.exceptions import PrivconError
from privcon.utils import console, print_error, print_header, print_info, print_success, print_warning


def _load(graph: Optional[str], n: int, radius_sq: Optional[float], seed: int) -> Graph:
    if graph:
        return load_graph_source(graph)
    g, used_seed = connected_geometric_graph(n, radius_sq or default_radius_sq(n), seed)
    if used_seed != seed:
        print_info(f"Seed {seed} gave a disconnected graph; using seed {used_seed}")
    return g


def check_graph_command(
    graph: Optional[str] = None,
    n: int = 10,
    radius_sq: Optional[float] = None,
    seed: int = 7,
    corrupted: Optional[List[int]] = None,
    target: Optional[int] = None,
) -> None:
    """
    Run graph diagnostics.

    `corrupted` and `target` are 1-based. Exits with code 3 when a check fails.
    """
    try:
        g = _load(graph, n, radius_sq, seed)
        cm_nodes = [c - 1 for c in corrupted] if corrupted else None
        target_index = target - 1 if target is not None else None
        if target_index is not None and not 0 <= target_index < g.n:
            raise ValueError(f"Target node {target} outside 1..{g.n}")
        with console.status("[bold cyan]Running diagnostics...", spinner="dots"):
            results = run_diagnostics(g, cm_nodes, target_index)
    except PrivconError as e:
        print_error(str(e))
        raise typer.Exit(e.exit_code)
    except ValueError as e:
        print_error(str(e))
        raise typer.Exit(1)

    print_header(f"Graph Check: n={g.n}, m={g.m}")

    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Check", style="cyan", width=20)
    table.add_column("Status", width=10)
    table.add_column("Details", width=50)

    counts = {"ok": 0, "warning": 0, "error": 0}
    for result in results:
        counts[result.status] += 1
        if result.status == "ok":
            status = "[green]✓ OK[/green]"
        elif result.status == "warning":
            status = "[yellow]⚠ WARNING[/yellow]"
        else:
            status = "[red]✗ ERROR[/red]"
        details = result.message
        if result.details:
            details += f"\n{result.details}"
        table.add_row(result.name, status, details)

    console.print(table)
    console.print()
    console.print("[bold cyan]Summary:[/bold cyan]")
    console.print(f"  ✓ OK: [green]{counts['ok']}[/green]")
    console.print(f"  ⚠ Warnings: [yellow]{counts['warning']}[/yellow]")
    console.print(f"  ✗ Errors: [red]{counts['error']}[/red]")

    issues_with_fixes = [r for r in results if r.status != "ok" and r.fix_suggestion]
    if issues_with_fixes:
        console.print("\n[bold yellow]Suggested Fixes:[/bold yellow]")
        for result in issues_with_fixes:
            console.print(f"  [bold]{result.name}:[/bold] {result.fix_suggestion}")
    console.print()

    if counts["error"]:
        print_error("Graph fails required checks")
        raise typer.Exit(3)
    if counts["warning"]:
        print_warning("Graph is usable; review the warnings above")
        return
    print_success("Graph is ready for consensus experiments")
