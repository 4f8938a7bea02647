"""Tests for graph diagnostics."""

from privcon.core.diagnostics import GraphDiagnostics, run_diagnostics
from privcon.core.graph import Graph, load_bundled_graph


def _by_name(results):
    return {r.name: r for r in results}


def test_topology_graph_passes_all_checks():
    """Test that the dense topology graph is fully healthy for node 1."""
    results = run_diagnostics(load_bundled_graph("topology_g"), corrupted=[4, 7], target=0)

    assert all(r.status in ['ok', 'warning', 'error'] for r in results)
    assert all(r.status == "ok" for r in results)
    names = [r.name for r in results]
    assert names == [
        "Connectivity",
        "Degree sum",
        "Metropolis weights",
        "Dual subspace",
        "Corrupted neighbours",
        "Honest component",
    ]


def test_split_honest_component_warns():
    """Test the warning when the target reaches only part of the honest nodes."""
    results = _by_name(run_diagnostics(load_bundled_graph("topology_g_prime"), corrupted=[4, 7], target=0))
    component = results["Honest component"]
    assert component.status == "warning"
    assert "4 of 8" in component.message
    assert component.details == "1 2 3 4"
    assert component.fix_suggestion


def test_disconnected_graph_is_an_error():
    """Test that solver checks are skipped on a disconnected graph."""
    diagnostics = GraphDiagnostics(Graph.from_edges(4, [(0, 1), (2, 3)]))
    results = diagnostics.run_all_checks()
    assert [r.name for r in results] == ["Connectivity", "Degree sum"]
    assert results[0].status == "error"
    assert diagnostics.has_errors


def test_missing_corrupted_neighbour_is_an_error():
    """Test that every honest node without a corrupted neighbour is listed 1-based."""
    results = _by_name(run_diagnostics(load_bundled_graph("topology_g"), corrupted=[4]))
    check = results["Corrupted neighbours"]
    assert check.status == "error"
    assert "6, 7, 9, 10" in check.message
    assert "Honest component" not in results


def test_corrupted_target_is_an_error():
    """Test the target check."""
    results = _by_name(run_diagnostics(load_bundled_graph("topology_g"), corrupted=[4, 7], target=4))
    assert results["Honest component"].status == "error"
    assert "5" in results["Honest component"].message


def test_tree_warns_about_dual_subspace():
    """Test the m < n warning on a single edge."""
    diagnostics = GraphDiagnostics(Graph.from_edges(2, [(0, 1)]))
    results = _by_name(diagnostics.run_all_checks())
    assert results["Dual subspace"].status == "warning"
    assert "dim H̄⊥ = 0" in results["Dual subspace"].details
    assert results["Metropolis weights"].status == "ok"
    assert not diagnostics.has_errors
