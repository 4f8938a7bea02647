"""
Graph health checks for consensus experiments.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

from privcon.core.graph import (
    CorruptionModel,
    Graph,
    honest_component,
    is_connected,
    nodes_without_corrupted_neighbor,
    pdmm_edge_matrices,
)
from privcon.core.linear import check_consensus_conditions, metropolis_weights
from privcon.core.pdmm import subspace_projector


@dataclass
class DiagnosticResult:
    """Result of a diagnostic check."""
    name: str
    status: str  # 'ok', 'warning', 'error'
    message: str
    details: Optional[str] = None
    fix_suggestion: Optional[str] = None


class GraphDiagnostics:
    """
    Check a graph (and optionally a corrupted set) against what the solvers
    and privacy analyses require.

    Node ids in messages are 1-based.
    """

    def __init__(self, g: Graph, corrupted: Optional[Sequence[int]] = None, target: Optional[int] = None):
        self.g = g
        self.cm = CorruptionModel.from_corrupted(g, corrupted) if corrupted else None
        self.target = target
        self.results: List[DiagnosticResult] = []

    def run_all_checks(self) -> List[DiagnosticResult]:
        """Run all diagnostic checks."""
        self.check_connectivity()
        self.check_degree_sum()
        if self.results[0].status == "ok":
            self.check_weights()
            self.check_subspace()
        if self.cm is not None:
            self.check_corrupted_neighbors()
            if self.target is not None:
                self.check_honest_component()
        return self.results

    @property
    def has_errors(self) -> bool:
        return any(r.status == "error" for r in self.results)

    def check_connectivity(self) -> None:
        if is_connected(self.g):
            self.results.append(DiagnosticResult(
                name="Connectivity",
                status="ok",
                message=f"Connected, n={self.g.n}, m={self.g.m}",
            ))
        else:
            self.results.append(DiagnosticResult(
                name="Connectivity",
                status="error",
                message="Graph is not connected",
                details="Consensus cannot reach the global average",
                fix_suggestion="Increase the radius or pick another graph seed",
            ))

    def check_degree_sum(self) -> None:
        total = int(self.g.degrees.sum())
        status = "ok" if total == 2 * self.g.m else "error"
        self.results.append(DiagnosticResult(
            name="Degree sum",
            status=status,
            message=f"Σ d_i = {total}, 2m = {2 * self.g.m}",
        ))

    def check_weights(self) -> None:
        report = check_consensus_conditions(metropolis_weights(self.g))
        if report.ok:
            self.results.append(DiagnosticResult(
                name="Metropolis weights",
                status="ok",
                message=f"Doubly stochastic and contracting, ρ = {report.rho:.4f}",
            ))
        else:
            failed = [name for name, ok in (("column sums", report.column_sums), ("row sums", report.row_sums),
                                            ("contraction", report.contracting)) if not ok]
            self.results.append(DiagnosticResult(
                name="Metropolis weights",
                status="error",
                message=f"Violated: {', '.join(failed)}, ρ = {report.rho:.4f}",
            ))

    def check_subspace(self) -> None:
        g = self.g
        proj = subspace_projector(pdmm_edge_matrices(g))
        details = f"dim H̄ = {proj.rank}, dim H̄⊥ = {proj.complement_dim}"
        if g.m >= g.n:
            self.results.append(DiagnosticResult(
                name="Dual subspace",
                status="ok",
                message=f"m = {g.m} ≥ n = {g.n}",
                details=details,
            ))
        else:
            self.results.append(DiagnosticResult(
                name="Dual subspace",
                status="warning",
                message=f"m = {g.m} < n = {g.n}",
                details=details,
                fix_suggestion="Subspace noise may not protect the data; use a denser graph for DOSP",
            ))

    def check_corrupted_neighbors(self) -> None:
        missing = nodes_without_corrupted_neighbor(self.g, self.cm)
        if not missing:
            self.results.append(DiagnosticResult(
                name="Corrupted neighbours",
                status="ok",
                message="Every honest node has a corrupted neighbour",
            ))
        else:
            nodes = ", ".join(str(j + 1) for j in missing)
            self.results.append(DiagnosticResult(
                name="Corrupted neighbours",
                status="error",
                message=f"Honest node(s) {nodes} have no corrupted neighbour",
                fix_suggestion="Add a corrupted neighbour or change the corrupted set",
            ))

    def check_honest_component(self) -> None:
        i = self.target
        if i in self.cm.corrupted:
            self.results.append(DiagnosticResult(
                name="Honest component",
                status="error",
                message=f"Target node {i + 1} is corrupted",
            ))
            return
        component = honest_component(self.g, self.cm, i)
        h, n_h = len(component), len(self.cm.honest)
        members = " ".join(str(j + 1) for j in sorted(component))
        if h == n_h:
            self.results.append(DiagnosticResult(
                name="Honest component",
                status="ok",
                message=f"Node {i + 1} reaches all {n_h} honest nodes",
                details=members,
            ))
        else:
            self.results.append(DiagnosticResult(
                name="Honest component",
                status="warning",
                message=f"Node {i + 1} reaches {h} of {n_h} honest nodes",
                details=members,
                fix_suggestion="Privacy is limited by the partial sum over this component",
            ))


def run_diagnostics(
    g: Graph,
    corrupted: Optional[Sequence[int]] = None,
    target: Optional[int] = None,
) -> List[DiagnosticResult]:
    """Run all graph diagnostics and return results."""
    return GraphDiagnostics(g, corrupted, target).run_all_checks()
