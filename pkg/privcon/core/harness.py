"""
Deterministic Monte-Carlo engine and the four experiments.

Trial τ draws from streams seeded by a 64-bit hash of (master seed, τ, purpose
tag). Data and noise use separate tags, so every (mechanism, σ²) grid point
sees the same private data and the same standard-normal noise draws.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
import psutil

from privcon import __version__
from privcon.core.adversary import (
    PrivacyReport,
    analytic_privacy,
    collect_view,
    lower_bound_view,
    reduce_view,
    robustness,
)
from privcon.core.graph import (
    CorruptionModel,
    Graph,
    check_corrupted_neighbors,
    connected_geometric_graph,
    default_radius_sq,
    honest_component,
    is_connected,
    load_bundled_graph,
    load_edge_list,
)
from privcon.core.linear import ConsensusRun
from privcon.core.info_metrics import (
    MIEstimate,
    MIMethod,
    SampleMatrix,
    bivariate_gaussian_samples,
    estimate_mi,
    gaussian_mi,
    gaussian_pair_mi,
    ksg_mi,
    linear_statistic,
    utility,
)
from privcon.core.perturbation import (
    MechanismConfig,
    MechanismContext,
    MechanismKind,
    SolverKind,
    apply_mechanism,
    gaussian_noise_floor,
)
from privcon.core.spec import ExperimentKind, ExperimentSpec
from privcon.exceptions import DisconnectedGraphError, SpecError
from privcon.utils.console import get_logger
from privcon.utils.helpers import canonical_json, write_file

logger = get_logger(__name__)

RESULT_COLUMNS = ["experiment", "mechanism", "sigma_sq", "metric", "node", "t", "value", "method", "seed"]
ESTIMATED_METHODS = (MIMethod.KNN, MIMethod.GAUSSIAN)


def derive_seed(master_seed: int, trial: int, tag: str) -> int:
    digest = hashlib.blake2b(f"{master_seed}:{trial}:{tag}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_stream(master_seed: int, trial: int, tag: str) -> np.random.Generator:
    """Independent generator for one trial and purpose; the same inputs give the same stream."""
    return np.random.default_rng(derive_seed(master_seed, trial, tag))


@dataclass(frozen=True)
class TrialStreams:
    """Stream factory handed to per-trial procedures."""
    master_seed: int
    trial: int

    def rng(self, tag: str) -> np.random.Generator:
        return derive_stream(self.master_seed, self.trial, tag)

    def seed(self, tag: str) -> int:
        return derive_seed(self.master_seed, self.trial, tag)


PerTrial = Callable[[TrialStreams], Mapping[str, Any]]


def default_workers() -> int:
    return psutil.cpu_count(logical=False) or 1


def montecarlo(
    spec: ExperimentSpec,
    per_trial: PerTrial,
    trials: Optional[int] = None,
    workers: Optional[int] = None,
) -> SampleMatrix:
    """
    Run `per_trial` once per trial index and stack the results in trial order.

    Thread count never changes the result.
    """
    count = spec.trials if trials is None else trials
    if count < 1:
        raise ValueError(f"Need at least one trial, got {count}")
    streams = [TrialStreams(spec.seed, trial) for trial in range(count)]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or count == 1:
        rows = [per_trial(s) for s in streams]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(per_trial, streams))
    return SampleMatrix.from_rows(rows)


@dataclass
class ResultTable:
    """Long-format results with the resolved spec as provenance."""
    spec: ExperimentSpec
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def add(
        self,
        metric: str,
        value: float,
        mechanism: str = "none",
        sigma_sq: Optional[float] = None,
        node: Optional[int] = None,
        t: Optional[int] = None,
        method: Union[MIMethod, str] = "simulated",
        experiment: Optional[str] = None,
    ) -> None:
        self.rows.append({
            "experiment": experiment or self.spec.experiment.value,
            "mechanism": mechanism,
            "sigma_sq": sigma_sq,
            "metric": metric,
            # 1-based in output
            "node": None if node is None else node + 1,
            "t": t,
            "value": float(value),
            "method": method.value if isinstance(method, MIMethod) else method,
            "seed": self.spec.seed,
        })

    def add_estimate(self, quantity: str, estimate: MIEstimate, **kwargs: Any) -> None:
        """One row in bits and one in NMI; kNN estimates also report their standard error."""
        self.add(f"{quantity}_bits", estimate.value_bits, method=estimate.method, **kwargs)
        self.add(f"{quantity}_nmi", estimate.nmi, method=estimate.method, **kwargs)
        if estimate.method is MIMethod.KNN:
            self.add(f"{quantity}_std", estimate.std, method=estimate.method, **kwargs)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=RESULT_COLUMNS)
        return frame.astype({"node": "Int64", "t": "Int64", "seed": "Int64"})

    @property
    def provenance(self) -> Dict[str, Any]:
        return {"privcon": __version__, "spec_hash": self.spec.spec_hash, "spec": self.spec.to_dict()}

    def to_csv(self, path: Union[str, Path]) -> None:
        header = f"# {canonical_json(self.provenance)}\n"
        body = self.to_frame().to_csv(index=False, float_format="%.12g", lineterminator="\n")
        write_file(Path(path), header + body)

    def to_gnuplot(self, path: Union[str, Path]) -> None:
        """Wide whitespace-separated table: one x column (t or σ²), one column per curve."""
        frame = self.to_frame()
        if self.spec.experiment is ExperimentKind.CONVERGENCE:
            frame = frame[frame["t"].notna() & (frame["metric"] == "error")]
            x = "t"
        else:
            frame = frame[frame["metric"].str.endswith("_nmi")]
            x = "sigma_sq"
        frame = frame.assign(curve=frame["experiment"] + ":" + frame["mechanism"] + ":"
                             + frame["metric"] + ":" + frame["method"]
                             + ((":s2=" + frame["sigma_sq"].map("{:g}".format)) if x == "t" else ""))
        wide = frame.pivot_table(index=x, columns="curve", values="value", aggfunc="first", sort=True)
        lines = ["# " + " ".join([x] + [str(c) for c in wide.columns])]
        for index, row in wide.iterrows():
            values = ["nan" if pd.isna(v) else f"{v:.12g}" for v in row.to_numpy()]
            lines.append(" ".join([f"{index:.12g}"] + values))
        write_file(Path(path), "\n".join(lines) + "\n")


def load_graph_source(source: str) -> Graph:
    """A bundled graph name or an edge-list path; unreadable sources are spec errors."""
    try:
        if Path(source).suffix:
            return load_edge_list(source)
        return load_bundled_graph(source)
    except (OSError, ValueError) as e:
        raise SpecError(f"Cannot load graph {source!r}: {e}") from e


def resolve_graph(spec: ExperimentSpec) -> Graph:
    """The spec's graph: an edge-list file, else a connected random geometric graph."""
    if spec.graph_file:
        g = load_graph_source(spec.graph_file)
        if not is_connected(g):
            raise DisconnectedGraphError(f"Graph in {spec.graph_file} is not connected")
        return g
    radius_sq = spec.radius_sq if spec.radius_sq is not None else default_radius_sq(spec.n)
    g, used_seed = connected_geometric_graph(spec.n, radius_sq, spec.graph_seed)
    logger.info("Geometric graph n=%d m=%d (seed %d)", g.n, g.m, used_seed)
    return g


def mechanism_config(spec: ExperimentSpec, kind: MechanismKind, sigma_sq: float) -> MechanismConfig:
    """The spec's solver, else PDMM for DOSP and linear iterations for the rest."""
    solver = spec.solver or (SolverKind.PDMM if kind is MechanismKind.DOSP else SolverKind.LINEAR)
    return MechanismConfig(kind=kind, sigma_sq=sigma_sq, solver=solver, c=spec.c, T=spec.T)


def baseline_label(solver: SolverKind) -> str:
    """Mechanism label of the noiseless run on `solver`; linear iterations keep the plain name."""
    if solver is SolverKind.LINEAR:
        return MechanismKind.NONE.value
    return f"{MechanismKind.NONE.value}_{solver.value}"


def convergence_runs(spec: ExperimentSpec) -> List[Tuple[str, MechanismConfig]]:
    """
    (label, config) per curve of the convergence experiment.

    The noiseless baseline is run once on every solver the other mechanisms
    use, so each σ² = 0 curve has a baseline on its own solver.
    """
    solvers: List[SolverKind] = []
    for kind in spec.mechanisms:
        solver = mechanism_config(spec, kind, 0.0).solver
        if solver not in solvers:
            solvers.append(solver)
    runs: List[Tuple[str, MechanismConfig]] = []
    for kind in spec.mechanisms:
        if kind is MechanismKind.NONE:
            base = mechanism_config(spec, kind, 0.0)
            runs.extend((baseline_label(solver), replace(base, solver=solver)) for solver in solvers)
            continue
        runs.extend((kind.value, mechanism_config(spec, kind, sigma_sq)) for sigma_sq in spec.sigma_sq)
    return runs


def check_node_ids(spec: ExperimentSpec, g: Graph, corrupted: bool = False) -> None:
    """Target (and corrupted) ids from the spec must name nodes of `g`."""
    if not 1 <= spec.target <= g.n:
        raise SpecError(f"target node {spec.target} outside 1..{g.n}")
    if corrupted:
        outside = [c for c in spec.corrupted or [] if not 1 <= c <= g.n]
        if outside:
            raise SpecError(f"corrupted nodes {outside} outside 1..{g.n}")


def private_data(spec: ExperimentSpec, streams: TrialStreams, n: int) -> np.ndarray:
    return streams.rng("data").normal(0.0, math.sqrt(spec.sigma_s_sq), size=n)


def run_trial(
    cfg: MechanismConfig,
    g: Graph,
    spec: ExperimentSpec,
    streams: TrialStreams,
    ctx: MechanismContext,
) -> ConsensusRun:
    """One trial's private data and mechanism run; the run records its noise seed."""
    s = private_data(spec, streams, g.n)
    return apply_mechanism(cfg, g, s, streams.rng("noise"), ctx, seed=streams.seed("noise"))


def view_iterations(cfg: MechanismConfig) -> Tuple[int, ...]:
    """Rounds the reduced statistics read: x(0) for linear runs, up to x(2) for PDMM."""
    if cfg.solver is SolverKind.LINEAR:
        return (0,)
    return (0, 1, 2)


def run_convergence(spec: ExperimentSpec, workers: Optional[int] = None) -> ResultTable:
    """Mean error ‖x(t) − s_ave·1‖ per mechanism, σ² and iteration."""
    g = resolve_graph(spec)
    check_node_ids(spec, g)
    ctx = MechanismContext(g)
    i = spec.target_index
    table = ResultTable(spec)
    for label, cfg in convergence_runs(spec):

        def per_trial(streams: TrialStreams, cfg: MechanismConfig = cfg) -> Dict[str, np.ndarray]:
            run = run_trial(cfg, g, spec, streams, ctx)
            return {"error": run.errors(), "bias": np.array([run.final[i] - run.average])}

        samples = montecarlo(spec, per_trial, workers=workers)
        mean_error = samples.block("error").mean(axis=0)
        for t, value in enumerate(mean_error):
            table.add("error", value, mechanism=label, sigma_sq=cfg.sigma_sq, t=t)
        table.add("final_error", mean_error[-1], mechanism=label, sigma_sq=cfg.sigma_sq)
        bias = samples.block("bias")[:, 0]
        table.add("output_error_std", float(np.std(bias, ddof=1)) if bias.size > 1 else 0.0,
                  mechanism=label, sigma_sq=cfg.sigma_sq, node=i)
    return table


def _privacy_samples(
    spec: ExperimentSpec,
    g: Graph,
    cm: CorruptionModel,
    cfg: MechanismConfig,
    workers: Optional[int],
) -> SampleMatrix:
    ctx = MechanismContext(g)
    i = spec.target_index
    steps = view_iterations(cfg)

    def per_trial(streams: TrialStreams) -> Dict[str, np.ndarray]:
        run = run_trial(cfg, g, spec, streams, ctx)
        view = reduce_view(collect_view(run, g, cm, i, iterations=steps))
        return {
            "s_i": np.array([run.s[i]]),
            "reduced": view.reduced,
            "lower": lower_bound_view(run, g, cm, i),
            "y": np.array([run.average]),
            "yhat": np.array([run.final[i]]),
        }

    return montecarlo(spec, per_trial, workers=workers)


def view_mi(s_i: np.ndarray, view: np.ndarray, method: MIMethod, k: int, seed: int) -> MIEstimate:
    """I(S_i; view); kNN sees the view through its linear sufficient statistic."""
    if method is MIMethod.KNN:
        view = linear_statistic(s_i, view)
    return estimate_mi(s_i, view, method, k=k, seed=seed)


def _add_estimates(
    table: ResultTable,
    spec: ExperimentSpec,
    samples: SampleMatrix,
    analytic: PrivacyReport,
    **labels: Any,
) -> None:
    table.add_estimate("utility", analytic.utility, **labels)
    table.add_estimate("privacy", analytic.privacy, **labels)
    table.add_estimate("lower_bound", analytic.lower_bound, **labels)
    s_i = samples.block("s_i")
    for method in ESTIMATED_METHODS:
        table.add_estimate("utility", utility(samples.block("y"), samples.block("yhat"), method,
                                              k=spec.k, seed=spec.seed), **labels)
        table.add_estimate("privacy", view_mi(s_i, samples.block("reduced"), method, spec.k, spec.seed),
                           **labels)
        table.add_estimate("lower_bound", view_mi(s_i, samples.block("lower"), method, spec.k, spec.seed),
                           **labels)


def run_dp_tradeoff(spec: ExperimentSpec, workers: Optional[int] = None) -> ResultTable:
    """Utility, privacy and lower bound of the DP mechanism against σ², every other node corrupted."""
    g = resolve_graph(spec)
    check_node_ids(spec, g)
    i = spec.target_index
    cm = CorruptionModel.from_corrupted(g, [j for j in range(g.n) if j != i])
    table = ResultTable(spec)
    for sigma_sq in spec.sigma_sq:
        cfg = mechanism_config(spec, MechanismKind.DP, sigma_sq)
        samples = _privacy_samples(spec, g, cm, cfg, workers)
        analytic = analytic_privacy(MechanismKind.DP, g.n, sigma_sq, spec.sigma_s_sq)
        _add_estimates(table, spec, samples, analytic, mechanism="dp", sigma_sq=sigma_sq, node=i)
        table.add("robustness", robustness(MechanismKind.DP, g, i), mechanism="dp",
                  sigma_sq=sigma_sq, node=i, method=MIMethod.ANALYTIC)
    return table


def run_topology(spec: ExperimentSpec, workers: Optional[int] = None) -> ResultTable:
    """SMPC and DOSP privacy of the target on each topology-experiment graph."""
    table = ResultTable(spec)
    i = spec.target_index
    for name in spec.graphs:
        g = load_graph_source(name)
        check_node_ids(spec, g, corrupted=True)
        cm = CorruptionModel.from_corrupted(g, spec.corrupted_indices)
        check_corrupted_neighbors(g, cm)
        h = len(honest_component(g, cm, i))
        n_h = len(cm.honest)
        label = f"topology:{Path(name).stem}"
        logger.info("%s: honest component of node %d has %d of %d honest nodes", label, i + 1, h, n_h)
        for kind in spec.mechanisms:
            k_i = robustness(kind, g, i)
            for sigma_sq in spec.sigma_sq:
                cfg = mechanism_config(spec, kind, sigma_sq)
                samples = _privacy_samples(spec, g, cm, cfg, workers)
                analytic = analytic_privacy(kind, g.n, sigma_sq, spec.sigma_s_sq, h=h, n_h=n_h, k_i=k_i)
                labels = dict(mechanism=kind.value, sigma_sq=sigma_sq, node=i, experiment=label)
                _add_estimates(table, spec, samples, analytic, **labels)
                table.add("robustness", k_i, method=MIMethod.ANALYTIC, **labels)
    return table


def run_calibration(spec: ExperimentSpec, workers: Optional[int] = None) -> ResultTable:
    """
    Estimator trust suite: kNN MI on correlated Gaussian pairs and at the Gaussian noise floor.

    Each estimate uses `trials` samples and is repeated `repeats` times with
    independent streams; rows report the mean and spread.
    """
    table = ResultTable(spec)
    sigma_s = math.sqrt(spec.sigma_s_sq)
    cases: List[Tuple[str, Optional[float], float, Callable[[np.random.Generator], np.ndarray]]] = []
    for corr in spec.correlations:
        cases.append((f"pair_corr_{corr:g}", None, gaussian_pair_mi(corr),
                      lambda rng, corr=corr: bivariate_gaussian_samples(corr, spec.trials, rng)))
    for eps in spec.epsilons:
        noise_var = gaussian_noise_floor(spec.sigma_s_sq, eps)

        def floor_samples(rng: np.random.Generator, noise_var: float = noise_var) -> np.ndarray:
            s = rng.normal(0.0, sigma_s, size=spec.trials)
            return np.column_stack([s, s + rng.normal(0.0, math.sqrt(noise_var), size=spec.trials)])

        cases.append((f"noise_floor_eps_{eps:g}", noise_var,
                      gaussian_mi(spec.sigma_s_sq / noise_var), floor_samples))

    for metric, noise_var, closed_form, draw in cases:
        def per_trial(streams: TrialStreams, draw=draw, metric=metric) -> Dict[str, np.ndarray]:
            pair = draw(streams.rng(metric))
            estimate = ksg_mi(pair[:, 0], pair[:, 1], k=spec.k, seed=spec.seed)
            return {"bits": np.array([estimate.value_bits])}

        estimates = montecarlo(spec, per_trial, trials=spec.repeats, workers=workers).block("bits")[:, 0]
        table.add(metric, closed_form, sigma_sq=noise_var, method=MIMethod.ANALYTIC)
        table.add(metric, float(np.mean(estimates)), sigma_sq=noise_var, method=MIMethod.KNN)
        table.add(f"{metric}_repeat_std", float(np.std(estimates, ddof=1)) if estimates.size > 1 else 0.0,
                  sigma_sq=noise_var, method=MIMethod.KNN)
    return table


EXPERIMENTS: Dict[ExperimentKind, Callable[..., ResultTable]] = {
    ExperimentKind.CONVERGENCE: run_convergence,
    ExperimentKind.TRADEOFF: run_dp_tradeoff,
    ExperimentKind.TOPOLOGY: run_topology,
    ExperimentKind.CALIBRATION: run_calibration,
}


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> ResultTable:
    """Validate every mechanism and solver pairing, then run the experiment."""
    for kind in spec.mechanisms:
        mechanism_config(spec, kind, 0.0).validate()
    return EXPERIMENTS[spec.experiment](spec, workers=workers)
