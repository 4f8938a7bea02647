"""Tests for the noise-insertion mechanisms."""

import logging

import numpy as np
import pytest

from privcon.core.graph import Graph, connected_geometric_graph, default_radius_sq
from privcon.core.info_metrics import gaussian_mi_estimate, ksg_mi, linear_statistic
from privcon.core.perturbation import (
    MechanismConfig,
    MechanismContext,
    MechanismKind,
    SolverKind,
    apply_mechanism,
    dosp_init,
    dp_init,
    gaussian_noise_floor,
    smpc_noise,
)
from privcon.exceptions import MechanismConfigError

K2 = Graph.from_edges(2, [(0, 1)])
CYCLE3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture(scope="module")
def geometric():
    g, _ = connected_geometric_graph(10, default_radius_sq(10), seed=7)
    return g, MechanismContext(g)


def test_gaussian_noise_floor():
    """Test σ_S²/(2^{2ε} − 1) at a few points."""
    assert gaussian_noise_floor(1.0, 0.5) == pytest.approx(1.0)
    assert gaussian_noise_floor(3.0, 1.0) == pytest.approx(1.0)
    assert gaussian_noise_floor(1.0, 0.01) > 70.0
    with pytest.raises(ValueError):
        gaussian_noise_floor(1.0, 0.0)
    with pytest.raises(ValueError):
        gaussian_noise_floor(0.0, 1.0)


def test_dp_init_without_noise():
    """Test that σ² = 0 leaves the data untouched."""
    s = np.array([1.0, 2.0, 3.0])
    x0, record = dp_init(s, 0.0, np.random.default_rng(0))
    np.testing.assert_array_equal(x0, s)
    np.testing.assert_array_equal(record.node_noise, np.zeros(3))


def test_dp_init_variance():
    """Test the sample variance of the inserted noise."""
    x0, record = dp_init(np.zeros(10_000), 4.0, np.random.default_rng(1))
    np.testing.assert_array_equal(x0, record.node_noise)
    assert np.var(record.node_noise) == pytest.approx(4.0, rel=0.05)
    with pytest.raises(ValueError):
        dp_init(np.zeros(3), -1.0, np.random.default_rng(1))


def test_smpc_noise_sums_to_zero(geometric):
    """Test the zero-sum and antisymmetry of the exchanged noise over many draws."""
    g, _ = geometric
    for seed in range(100):
        record = smpc_noise(g, 100.0, np.random.default_rng(seed))
        assert abs(record.node_noise.sum()) < 1e-10
        np.testing.assert_allclose(record.pairwise[: g.m], -record.pairwise[g.m:], atol=0)
        assert np.any(np.abs(record.node_noise) > 1e-3)


def test_smpc_noise_node_sums(geometric):
    """Test that r_i is the sum of r_{i|j} over the neighbours of i."""
    g, _ = geometric
    record = smpc_noise(g, 1.0, np.random.default_rng(4))
    for i in range(g.n):
        expected = sum(record.pairwise[g.directed_index(i, j)] for j in g.neighbors(i))
        assert record.node_noise[i] == pytest.approx(expected, abs=1e-12)
        for j in g.neighbors(i):
            pair = record.sent[g.directed_index(j, i)] - record.sent[g.directed_index(i, j)]
            assert record.pairwise[g.directed_index(i, j)] == pytest.approx(pair, abs=1e-15)


def test_smpc_noise_single_edge():
    """Test the single-edge exchange: r_1 = −r_2."""
    record = smpc_noise(K2, 1.0, np.random.default_rng(2))
    assert record.node_noise[0] == pytest.approx(record.sent[1] - record.sent[0])
    assert record.node_noise[1] == pytest.approx(-record.node_noise[0])


def test_dosp_init_without_noise():
    """Test that σ² = 0 gives a zero dual start."""
    ctx = MechanismContext(CYCLE3)
    lambda0, record = dosp_init(CYCLE3, 0.0, np.random.default_rng(0), ctx.projector)
    np.testing.assert_array_equal(lambda0, np.zeros(6))
    np.testing.assert_array_equal(record.subspace_noise, np.zeros(6))
    assert not record.subspace_warning


def test_dosp_init_has_subspace_noise_on_cycle():
    """Test that the 3-cycle leaves a non-trivial H̄⊥ component."""
    ctx = MechanismContext(CYCLE3)
    for seed in range(100):
        _, record = dosp_init(CYCLE3, 1.0, np.random.default_rng(seed), ctx.projector)
        assert np.linalg.norm(record.subspace_noise) > 1e-8


def test_dosp_init_single_edge_warns(caplog):
    """Test the warning and the empty H̄⊥ on a tree with m < n."""
    ctx = MechanismContext(K2)
    with caplog.at_level(logging.WARNING, logger="privcon"):
        lambda0, record = dosp_init(K2, 1.0, np.random.default_rng(0), ctx.projector)
    assert record.subspace_warning
    np.testing.assert_allclose(record.subspace_noise, np.zeros(2), atol=1e-12)
    assert np.linalg.norm(lambda0) > 0
    assert "m=1 < n=2" in caplog.text


def test_dosp_needs_pdmm_solver():
    """Test that DOSP with linear iterations is a configuration error."""
    cfg = MechanismConfig(kind=MechanismKind.DOSP, sigma_sq=1.0, solver=SolverKind.LINEAR)
    with pytest.raises(MechanismConfigError):
        cfg.validate()
    with pytest.raises(MechanismConfigError):
        apply_mechanism(cfg, CYCLE3, np.zeros(3), np.random.default_rng(0))


def test_config_rejects_negative_variance():
    """Test the σ² ≥ 0 check."""
    with pytest.raises(ValueError):
        MechanismConfig(kind=MechanismKind.DP, sigma_sq=-1.0).validate()


@pytest.mark.parametrize("sigma_sq", [0.0, 100.0, 1e6])
@pytest.mark.parametrize(
    "kind,solver",
    [
        (MechanismKind.NONE, SolverKind.LINEAR),
        (MechanismKind.SMPC, SolverKind.LINEAR),
        (MechanismKind.SMPC, SolverKind.PDMM),
        (MechanismKind.DOSP, SolverKind.PDMM),
    ],
)
def test_exact_mechanisms_reach_the_average(geometric, kind, solver, sigma_sq):
    """Test that SMPC and DOSP keep full accuracy at any noise level."""
    g, ctx = geometric
    s = np.random.default_rng(12).standard_normal(g.n)
    cfg = MechanismConfig(kind=kind, sigma_sq=sigma_sq, solver=solver, T=1000)
    run = apply_mechanism(cfg, g, s, np.random.default_rng(13), ctx)
    assert run.mechanism == kind.value
    np.testing.assert_array_equal(run.s, s)
    assert np.max(np.abs(run.final - s.mean())) < 1e-6


def test_dp_output_error_shrinks_with_network_size(geometric):
    """Test that the DP output error has standard deviation σ/√n."""
    g, ctx = geometric
    s = np.zeros(g.n)
    cfg = MechanismConfig(kind=MechanismKind.DP, sigma_sq=4.0, solver=SolverKind.LINEAR, T=400)
    rng = np.random.default_rng(21)
    offsets = [apply_mechanism(cfg, g, s, rng, ctx).final[0] for _ in range(500)]
    assert np.std(offsets) == pytest.approx(2.0 / np.sqrt(g.n), rel=0.15)


def test_dp_run_records_noise(geometric):
    """Test that the transcript carries the inserted noise and the true data."""
    g, ctx = geometric
    s = np.arange(g.n, dtype=float)
    cfg = MechanismConfig(kind=MechanismKind.DP, sigma_sq=1.0, T=5)
    run = apply_mechanism(cfg, g, s, np.random.default_rng(3), ctx)
    np.testing.assert_allclose(run.x_traj[0], s + run.noise.node_noise)
    assert run.average == pytest.approx(s.mean())
    assert "r_0" in run.to_frame().columns
    assert run.seed is None

    seeded = apply_mechanism(cfg, g, s, np.random.default_rng(3), ctx, seed=3)
    assert seeded.seed == 3
    np.testing.assert_array_equal(seeded.x_traj, run.x_traj)


@pytest.mark.slow
def test_dp_linear_iterations_do_not_add_information(geometric):
    """Test that later states of a DP run reveal no more about s_i than x(0)."""
    g, ctx = geometric
    cfg = MechanismConfig(kind=MechanismKind.DP, sigma_sq=1.0, solver=SolverKind.LINEAR, T=20)
    data_rng, noise_rng = np.random.default_rng(31), np.random.default_rng(32)
    rounds = (0, 1, 5, 20)
    s_i, states = [], {t: [] for t in rounds}
    for _ in range(10_000):
        s = data_rng.standard_normal(g.n)
        run = apply_mechanism(cfg, g, s, noise_rng, ctx)
        s_i.append(s[0])
        for t in rounds:
            states[t].append(run.x_traj[t])
    s_i = np.array(s_i)
    states = {t: np.array(rows) for t, rows in states.items()}

    def knn(t):
        return ksg_mi(s_i, linear_statistic(s_i, states[t]), k=3, seed=0).value_bits

    initial = knn(0)
    assert initial == pytest.approx(0.5, abs=0.05)
    initial_gauss = gaussian_mi_estimate(s_i, states[0]).value_bits
    for t in rounds[1:]:
        assert knn(t) <= initial + 0.03
        assert gaussian_mi_estimate(s_i, states[t]).value_bits <= initial_gauss + 1e-6
