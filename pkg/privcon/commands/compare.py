"""
privcon compare command - Compare the mechanisms' analytic utility, privacy and robustness.
"""

from typing import List, Optional

import typer

from privcon.core.adversary import analytic_privacy, robustness
from privcon.core.graph import CorruptionModel, honest_component
from privcon.core.harness import load_graph_source
from privcon.core.perturbation import MechanismKind
from privcon.exceptions import PrivconError
from privcon.utils import console, create_table, format_bits, print_error, print_header, print_info

FORMULAS = {
    MechanismKind.DP: (
        "½log₂(1 + σ_S²/σ²)",
        "½log₂(1 + σ_S²/σ²)",
        "½log₂(1 + σ_S²/(nσ²))",
        "n − 1",
    ),
    MechanismKind.SMPC: (
        "I(Y; Y) (full)",
        "½log₂(h/(h − 1)), σ² → ∞",
        "½log₂(n_h/(n_h − 1))",
        "d_i − 1",
    ),
    MechanismKind.DOSP: (
        "I(Y; Y) (full)",
        "½log₂(h/(h − 1)), σ² → ∞",
        "½log₂(n_h/(n_h − 1))",
        "d_i − 1",
    ),
}

EAVESDROPPER_ROW = (
    "Eavesdropper",
    "-",
    "needs channel encryption",
    "-",
    "not modelled",
)


def _cell(formula: str, value_bits: float, nmi: float) -> str:
    return f"{formula}\n= {format_bits(value_bits)} bits (NMI {nmi:.3f})"


def compare_command(
    graph: str = "topology_g_prime",
    corrupted: Optional[List[int]] = None,
    target: int = 1,
    sigma: float = 1.0,
    sigma_s: float = 1.0,
) -> None:
    """
    Print the mechanism comparison with every analytic row evaluated.

    h and n_h come from the graph, corrupted set (1-based) and target node;
    DP is evaluated with all other nodes corrupted.
    """
    corrupted = corrupted or [5, 8]
    try:
        g = load_graph_source(graph)
        i = target - 1
        if not 0 <= i < g.n:
            raise ValueError(f"Target node {target} outside 1..{g.n}")
        cm = CorruptionModel.from_corrupted(g, [c - 1 for c in corrupted])
        h = len(honest_component(g, cm, i))
        n_h = len(cm.honest)
        reports = {
            kind: analytic_privacy(kind, g.n, sigma, sigma_s, h=h, n_h=n_h, k_i=robustness(kind, g, i))
            for kind in FORMULAS
        }
    except PrivconError as e:
        print_error(str(e))
        raise typer.Exit(e.exit_code)
    except ValueError as e:
        print_error(str(e))
        raise typer.Exit(1)

    print_header("Mechanism Comparison")
    print_info(f"graph={graph}, n={g.n}, target={target}, corrupted={corrupted}, h={h}, n_h={n_h}, "
               f"σ²={sigma:g}, σ_S²={sigma_s:g}")

    table = create_table("Utility, privacy and robustness", [
        "Mechanism", "Utility u_i", "Privacy ρ_i", "Lower bound ρ_i,min", "Robustness k_i",
    ])
    for kind, (u, rho, rho_min, k) in FORMULAS.items():
        report = reports[kind]
        table.add_row(
            kind.value.upper(),
            _cell(u, report.utility.value_bits, report.utility.nmi),
            _cell(rho, report.privacy.value_bits, report.privacy.nmi),
            _cell(rho_min, report.lower_bound.value_bits, report.lower_bound.nmi),
            f"{k}\n= {report.robustness}",
        )
    table.add_row(*EAVESDROPPER_ROW)
    console.print(table)
