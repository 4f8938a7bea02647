"""Tests for the Monte-Carlo engine and the experiments."""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from privcon.core.harness import (
    RESULT_COLUMNS,
    ResultTable,
    TrialStreams,
    baseline_label,
    convergence_runs,
    derive_seed,
    derive_stream,
    load_graph_source,
    mechanism_config,
    montecarlo,
    run_calibration,
    run_convergence,
    run_dp_tradeoff,
    run_experiment,
    run_topology,
    run_trial,
)
from privcon.core.info_metrics import gaussian_pair_mi, normalize
from privcon.core.perturbation import MechanismContext, MechanismKind, SolverKind
from privcon.core.spec import default_spec
from privcon.exceptions import MechanismConfigError, SpecError


def _draw(streams: TrialStreams):
    return {"z": streams.rng("noise").standard_normal(3), "trial": np.array([float(streams.trial)])}


def test_derive_stream_is_deterministic():
    """Test that streams depend on master seed, trial and tag only."""
    a = derive_stream(1, 5, "noise").standard_normal(4)
    b = derive_stream(1, 5, "noise").standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert derive_seed(1, 5, "noise") != derive_seed(1, 5, "data")
    assert derive_seed(1, 5, "noise") != derive_seed(1, 6, "noise")
    assert derive_seed(1, 5, "noise") != derive_seed(2, 5, "noise")
    assert 0 <= derive_seed(1, 5, "noise") < 2 ** 64


def test_montecarlo_order_and_workers():
    """Test trial order and that threading does not change the samples."""
    spec = default_spec("convergence").with_overrides(trials=40, seed=3)
    sequential = montecarlo(spec, _draw, workers=1)
    parallel = montecarlo(spec, _draw, workers=4)
    np.testing.assert_array_equal(sequential.block("trial")[:, 0], np.arange(40))
    np.testing.assert_array_equal(sequential.block("z"), parallel.block("z"))

    single = montecarlo(spec, _draw, trials=1, workers=4)
    assert single.trials == 1
    np.testing.assert_array_equal(single.block("z")[0], sequential.block("z")[0])

    with pytest.raises(ValueError):
        montecarlo(spec, _draw, trials=0)


def test_mechanism_config_solver_choice():
    """Test the default solver per mechanism and the explicit override."""
    spec = default_spec("convergence")
    assert mechanism_config(spec, MechanismKind.DOSP, 1.0).solver is SolverKind.PDMM
    assert mechanism_config(spec, MechanismKind.SMPC, 1.0).solver is SolverKind.LINEAR
    pdmm = replace(spec, solver=SolverKind.PDMM)
    assert mechanism_config(pdmm, MechanismKind.DP, 1.0).solver is SolverKind.PDMM


def test_run_experiment_rejects_dosp_on_linear():
    """Test that the pairing check runs before any trial."""
    spec = replace(default_spec("convergence"), solver=SolverKind.LINEAR, trials=2)
    with pytest.raises(MechanismConfigError):
        run_experiment(spec)


def test_load_graph_source_errors():
    """Test that missing bundled graphs and files are spec errors."""
    assert load_graph_source("topology_g").n == 10
    with pytest.raises(SpecError):
        load_graph_source("no_such_graph")
    with pytest.raises(SpecError):
        load_graph_source("/nonexistent/graph.edges")


def test_result_table_rows_and_csv():
    """Test row layout, the provenance header and byte-stable CSV output."""
    spec = default_spec("convergence").with_overrides(trials=5)
    table = ResultTable(spec)
    table.add("error", 0.5, mechanism="dp", sigma_sq=1.0, t=3)
    table.add("output_error_std", 0.25, mechanism="dp", sigma_sq=1.0, node=0)
    frame = table.to_frame()
    assert list(frame.columns) == RESULT_COLUMNS
    assert frame["node"].tolist()[1] == 1
    assert pd.isna(frame["node"].tolist()[0])

    with tempfile.TemporaryDirectory() as tmpdir:
        a, b = Path(tmpdir) / "a.csv", Path(tmpdir) / "b.csv"
        table.to_csv(a)
        table.to_csv(b)
        assert a.read_bytes() == b.read_bytes()
        first = a.read_text().splitlines()[0]
        assert first.startswith("# {")
        assert spec.spec_hash in first
        loaded = pd.read_csv(a, comment="#")
    assert loaded["value"].tolist() == [0.5, 0.25]


@pytest.fixture(scope="module")
def convergence_table():
    spec = replace(default_spec("convergence").with_overrides(trials=20, seed=2), T=400)
    return run_convergence(spec, workers=2).to_frame()


def test_convergence_rows(convergence_table):
    """Test one error row per t plus the summary rows, per mechanism and σ²."""
    frame = convergence_table
    configs = frame[["mechanism", "sigma_sq"]].drop_duplicates()
    # baselines on linear iterations and on PDMM
    assert len(configs) == 2 + 3 * 3
    assert len(frame) == len(configs) * (401 + 2)
    assert set(frame["method"]) == {"simulated"}


def test_convergence_without_noise_coincides(convergence_table):
    """Test that every σ² = 0 curve reproduces the noiseless curve on its solver."""
    frame = convergence_table
    errors = frame[frame["metric"] == "error"]
    curve = {
        mech: errors[(errors["mechanism"] == mech) & (errors["sigma_sq"] == 0.0)]["value"].to_numpy()
        for mech in ("none", "none_pdmm", "dp", "smpc", "dosp")
    }
    np.testing.assert_array_equal(curve["none"], curve["dp"])
    np.testing.assert_array_equal(curve["none"], curve["smpc"])
    np.testing.assert_allclose(curve["dosp"], curve["none_pdmm"], rtol=0, atol=1e-10)


def test_convergence_runs_baseline_per_solver():
    """Test one noiseless run per solver in use, labelled by solver."""
    spec = default_spec("convergence")
    runs = convergence_runs(spec)
    labels = [label for label, _ in runs]
    assert labels[:2] == ["none", "none_pdmm"]
    assert [cfg.solver for _, cfg in runs[:2]] == [SolverKind.LINEAR, SolverKind.PDMM]
    assert len(runs) == 2 + 3 * len(spec.sigma_sq)
    assert baseline_label(SolverKind.LINEAR) == "none"

    linear_only = replace(spec, mechanisms=[MechanismKind.NONE, MechanismKind.DP])
    assert [label for label, _ in convergence_runs(linear_only)][0] == "none"
    assert sum(label.startswith("none") for label, _ in convergence_runs(linear_only)) == 1

    pdmm_only = replace(spec, solver=SolverKind.PDMM, mechanisms=[MechanismKind.NONE, MechanismKind.DOSP])
    assert [label for label, _ in convergence_runs(pdmm_only)][0] == "none_pdmm"


def test_trial_run_records_noise_seed():
    """Test that a trial's run stores the seed of its noise stream."""
    spec = default_spec("convergence").with_overrides(seed=9)
    g = load_graph_source("topology_g")
    streams = TrialStreams(spec.seed, 4)
    run = run_trial(mechanism_config(spec, MechanismKind.DP, 1.0), g, spec, streams, MechanismContext(g))
    assert run.seed == derive_seed(9, 4, "noise")
    np.testing.assert_array_equal(
        run.noise.node_noise, np.random.default_rng(run.seed).normal(0.0, 1.0, size=g.n)
    )


def test_node_ids_outside_graph_are_spec_errors():
    """Test that target and corrupted ids are checked against the resolved graph."""
    topology = replace(default_spec("topology").with_overrides(trials=2), corrupted=[5, 11])
    with pytest.raises(SpecError):
        run_topology(topology, workers=1)
    tradeoff = replace(default_spec("tradeoff").with_overrides(trials=2), target=11)
    with pytest.raises(SpecError):
        run_dp_tradeoff(tradeoff, workers=1)
    convergence = replace(default_spec("convergence").with_overrides(trials=2), target=11)
    with pytest.raises(SpecError):
        run_convergence(convergence, workers=1)


def test_convergence_accuracy(convergence_table):
    """Test exact mechanisms reaching the average and DP error scaling with σ."""
    summary = convergence_table[convergence_table["t"].isna()]
    value = summary.set_index(["metric", "mechanism", "sigma_sq"])["value"]
    for mech in ("smpc", "dosp"):
        assert value[("final_error", mech, 100.0)] < 1e-6
    assert value[("final_error", "dp", 100.0)] > 1.0
    ratio = value[("output_error_std", "dp", 100.0)] / value[("output_error_std", "dp", 1.0)]
    assert ratio == pytest.approx(10.0, rel=1e-6)


def test_calibration_rows():
    """Test that analytic, kNN mean and spread rows are written per case."""
    spec = replace(default_spec("calibration").with_overrides(trials=500, seed=1), repeats=3)
    frame = run_calibration(spec, workers=1).to_frame()
    rows = frame[frame["metric"] == "pair_corr_0.6"].set_index("method")["value"]
    assert rows["analytic"] == pytest.approx(gaussian_pair_mi(0.6))
    assert rows["knn"] == pytest.approx(gaussian_pair_mi(0.6), abs=0.1)
    floor = frame[frame["metric"] == "noise_floor_eps_0.5"]
    assert floor["sigma_sq"].iloc[0] == pytest.approx(1.0)
    assert (frame["metric"] == "noise_floor_eps_1_repeat_std").sum() == 1


def _knn_rows(frame: pd.DataFrame, keys):
    return frame[frame["method"] == "knn"].set_index(keys)["value"]


def _increases(values) -> np.ndarray:
    diffs = np.diff(np.asarray(values, dtype=float))
    return diffs[diffs > 0]


@pytest.mark.slow
def test_tradeoff_shape():
    """Test monotone utility and privacy over the σ² grid, the endpoints and the bound ordering."""
    spec = replace(default_spec("tradeoff").with_overrides(trials=4000, seed=5), T=200)
    assert spec.sigma_sq[0] == pytest.approx(1e-3)
    assert spec.sigma_sq[-1] == pytest.approx(1e3)
    frame = run_dp_tradeoff(spec, workers=2).to_frame()
    knn = _knn_rows(frame, ["metric", "sigma_sq"])
    grid = spec.sigma_sq

    for metric in ("utility_nmi", "privacy_nmi"):
        curve = [knn[(metric, v)] for v in grid]
        rises = _increases(curve)
        assert np.all(rises <= 0.03)
        assert (rises > 0.01).sum() <= 1
        assert curve[0] > 0.95
        assert curve[-1] < 0.05

    for v in grid:
        slack = 3 * max(knn[("privacy_std", v)], knn[("lower_bound_std", v)])
        assert knn[("privacy_bits", v)] >= knn[("lower_bound_bits", v)] - slack

    gauss = frame[frame["method"] == "gaussian"].set_index(["metric", "sigma_sq"])["value"]
    assert gauss[("privacy_bits", 1.0)] == pytest.approx(0.5, abs=0.1)
    robust = frame[frame["metric"] == "robustness"]["value"]
    assert set(robust) == {9.0}


@pytest.mark.slow
def test_topology_contrast():
    """Test kNN privacy of node 1 against the closed form on both graphs at σ² = 1000."""
    spec = default_spec("topology").with_overrides(trials=4000, seed=4, sigma_sq=[1000.0])
    frame = run_topology(replace(spec, T=100), workers=2).to_frame()
    rows = frame[frame["sigma_sq"] == 1000.0].set_index(["experiment", "mechanism", "metric", "method"])["value"]
    dense, split = "topology:topology_g", "topology:topology_g_prime"

    for mech in ("smpc", "dosp"):
        for graph, h in ((dense, 8), (split, 4)):
            analytic = rows[(graph, mech, "privacy_nmi", "analytic")]
            # n_h = 8 honest nodes on both graphs
            assert rows[(graph, mech, "lower_bound_nmi", "analytic")] == pytest.approx(1 / 8, abs=1e-3)
            assert analytic == pytest.approx(normalize(0.5 * np.log2(h / (h - 1))), abs=1e-3)
            assert rows[(graph, mech, "privacy_nmi", "knn")] == pytest.approx(analytic, abs=0.05)
            assert rows[(graph, mech, "privacy_nmi", "gaussian")] == pytest.approx(analytic, abs=0.05)

            slack = 3 * max(rows[(graph, mech, "privacy_std", "knn")], rows[(graph, mech, "lower_bound_std", "knn")])
            assert rows[(graph, mech, "privacy_bits", "knn")] >= rows[(graph, mech, "lower_bound_bits", "knn")] - slack

        gap = rows[(split, mech, "privacy_nmi", "knn")] - rows[(dense, mech, "privacy_nmi", "knn")]
        assert gap == pytest.approx(1 / 4 - 1 / 8, abs=0.05)


@pytest.mark.slow
def test_topology_full_utility():
    """Test that node 1 reaches the exact average under SMPC and DOSP on both graphs."""
    spec = default_spec("topology").with_overrides(trials=100, seed=4, sigma_sq=[1000.0])
    frame = run_topology(replace(spec, T=3000), workers=2).to_frame()
    utility = frame[(frame["metric"] == "utility_nmi") & (frame["method"] != "analytic")]
    assert len(utility) == 2 * 2 * 2
    assert set(utility["value"]) == {1.0}


@pytest.mark.slow
def test_calibration_against_closed_forms():
    """Test kNN means over 20 repeats of 10⁴ samples: Gaussian pairs and the noise floor."""
    spec = default_spec("calibration").with_overrides(seed=6)
    assert spec.trials == 10_000 and spec.repeats == 20 and spec.k == 3
    frame = run_calibration(spec, workers=2).to_frame()
    rows = frame.set_index(["metric", "method"])["value"]
    for corr in (0.0, 0.3, 0.6, 0.9):
        metric = f"pair_corr_{corr:g}"
        assert rows[(metric, "analytic")] == pytest.approx(gaussian_pair_mi(corr))
        assert rows[(metric, "knn")] == pytest.approx(gaussian_pair_mi(corr), abs=0.05)
    for eps in (0.25, 0.5, 1.0):
        metric = f"noise_floor_eps_{eps:g}"
        assert rows[(metric, "analytic")] == pytest.approx(eps, abs=1e-12)
        assert rows[(metric, "knn")] == pytest.approx(eps, abs=0.03)
