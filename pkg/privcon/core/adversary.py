"""
Passive-adversary views and privacy quantities.

collect_view gathers everything a coalition of corrupted nodes observes from a
transcript; reduce_view turns it into the low-dimensional statistic that carries
the same information about the target's private datum.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from privcon.core.graph import CorruptionModel, Graph, honest_component, nodes_without_corrupted_neighbor
from privcon.core.info_metrics import MIEstimate, gaussian_mi
from privcon.core.linear import ConsensusRun
from privcon.core.perturbation import MechanismKind
from privcon.exceptions import UncoveredHonestNodeError, CorruptedTargetError
from privcon.utils.console import get_logger

logger = get_logger(__name__)

DirectedEdge = Tuple[int, int]


@dataclass
class AdversaryView:
    """
    What the coalition sees about one honest target.

    raw holds named observation blocks; reduced is filled by reduce_view from raw
    plus public knowledge (graph, corrupted set, c, observed iterations).
    """
    target: int
    kind: MechanismKind
    solver: str
    g: Graph
    cm: CorruptionModel
    iterations: Tuple[int, ...]
    raw: Dict[str, np.ndarray]
    c: Optional[float] = None
    reduced: Optional[np.ndarray] = None
    neighbor_violations: List[int] = field(default_factory=list)

    @property
    def raw_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(block) for block in self.raw.values()])

    def state(self, t: int) -> np.ndarray:
        """Observed x(t); t must be one of the collected iterations."""
        if t not in self.iterations:
            raise ValueError(f"Iteration {t} not in the collected view {self.iterations}")
        return self.raw["X"][self.iterations.index(t)]


@dataclass(frozen=True)
class PrivacyReport:
    """Utility u_i, privacy ρ_i, lower bound ρ_i,min and robustness k_i of one node."""
    utility: MIEstimate
    privacy: MIEstimate
    lower_bound: MIEstimate
    robustness: Optional[int] = None
    neighbors_ok: bool = True

    def as_dict(self) -> Dict[str, float]:
        return {
            "utility_bits": self.utility.value_bits,
            "utility_nmi": self.utility.nmi,
            "privacy_bits": self.privacy.value_bits,
            "privacy_nmi": self.privacy.nmi,
            "lower_bound_bits": self.lower_bound.value_bits,
            "lower_bound_nmi": self.lower_bound.nmi,
            "robustness": self.robustness,
        }


def corrupted_directed_edges(g: Graph, cm: CorruptionModel) -> List[DirectedEdge]:
    """Both orientations of every corrupted edge, in edge order: (i|j), (j|i)."""
    out: List[DirectedEdge] = []
    for i, j in cm.corrupted_edges:
        out.extend([(i, j), (j, i)])
    return out


def _b(i: int, j: int) -> float:
    """B_{i|j}."""
    return 1.0 if i < j else -1.0


def _select_iterations(run: ConsensusRun, iterations: Optional[Sequence[int]]) -> Tuple[int, ...]:
    if iterations is None:
        return tuple(range(run.T + 1))
    chosen = tuple(sorted(set(int(t) for t in iterations)))
    if chosen and (chosen[0] < 0 or chosen[-1] > run.T):
        raise ValueError(f"Iterations {chosen} outside 0..{run.T}")
    return chosen


def collect_view(
    run: ConsensusRun,
    g: Graph,
    cm: CorruptionModel,
    i: int,
    iterations: Optional[Sequence[int]] = None,
    strict: bool = False,
) -> AdversaryView:
    """
    Assemble the raw adversary view of target i from a transcript.

    DP / none: {s_j, r_j, ŷ_j} of corrupted nodes and x(t).
    SMPC: {s_j} corrupted, Σ s_j, the random numbers on corrupted edges and x(t).
    DOSP: {s_j} corrupted, Σ s_j, λ(t) on corrupted edges and x(t).

    `iterations` restricts the observed rounds (all by default). With `strict`
    every honest node must have a corrupted neighbour.
    """
    if i in cm.corrupted:
        raise CorruptedTargetError(f"Target node {i + 1} is corrupted")
    kind = MechanismKind(run.mechanism)
    if kind in (MechanismKind.SMPC, MechanismKind.DOSP) and not cm.corrupted:
        raise UncoveredHonestNodeError("No corrupted nodes: the adversary observes nothing")
    violations = nodes_without_corrupted_neighbor(g, cm)
    if violations:
        if strict:
            raise UncoveredHonestNodeError(
                f"Honest node {violations[0] + 1} has no corrupted neighbour",
                node=violations[0],
            )
        logger.debug("View of node %d built with honest nodes lacking a corrupted neighbour: %s", i + 1, violations)

    steps = _select_iterations(run, iterations)
    corrupted = sorted(cm.corrupted)
    raw: Dict[str, np.ndarray] = {"s_c": run.s[corrupted]}

    if kind in (MechanismKind.DP, MechanismKind.NONE):
        if kind is MechanismKind.DP and run.noise is not None:
            raw["noise_c"] = run.noise.node_noise[corrupted]
        raw["yhat_c"] = run.final[corrupted]
    else:
        raw["sum_s"] = np.array([np.sum(run.s)])
        directed = corrupted_directed_edges(g, cm)
        if kind is MechanismKind.SMPC:
            raw["sent_c"] = np.array([run.noise.sent[g.directed_index(a, b)] for a, b in directed])
        else:
            cols = [g.directed_index(a, b) for a, b in directed]
            raw["lambda_c"] = run.lambda_traj[list(steps)][:, cols]
    raw["X"] = run.x_traj[list(steps)]

    return AdversaryView(
        target=i,
        kind=kind,
        solver=run.solver,
        g=g,
        cm=cm,
        iterations=steps,
        raw=raw,
        c=run.c,
        neighbor_violations=violations,
    )


def _perturbed_inputs(view: AdversaryView) -> np.ndarray:
    """s_j + r_j for every node, read off the first informative state."""
    if view.solver == "linear":
        return view.state(0)
    # PDMM from x(0) = 0, λ(0) = 0: x_j(1)(1 + c d_j) is the solver input
    return view.state(1) * (1.0 + view.c * view.g.degrees)


def _sent_lookup(view: AdversaryView) -> Dict[DirectedEdge, float]:
    directed = corrupted_directed_edges(view.g, view.cm)
    return dict(zip(directed, view.raw["sent_c"]))


def _lambda_lookup(view: AdversaryView, t: int) -> Dict[DirectedEdge, float]:
    directed = corrupted_directed_edges(view.g, view.cm)
    return dict(zip(directed, view.raw["lambda_c"][view.iterations.index(t)]))


def _dosp_masked_inputs(view: AdversaryView) -> np.ndarray:
    """
    s_j − Σ_{k∈N_j,h} B_{j|k} λ_{k|j}(t) for honest j (sorted) and t = 0, 1, shape (|N_h|, 2).

    Recovered from x(t), x(t+1) and the corrupted-edge duals via the primal update.
    """
    g, cm, c = view.g, view.cm, view.c
    honest = sorted(cm.honest)
    out = np.empty((len(honest), 2))
    for t in (0, 1):
        x_now, x_next = view.state(t), view.state(t + 1)
        lam = _lambda_lookup(view, t)
        for row, j in enumerate(honest):
            value = x_next[j] * (1.0 + c * g.degrees[j]) - c * sum(x_now[k] for k in g.neighbors(j))
            value += sum(_b(j, k) * lam[(k, j)] for k in cm.corrupted_neighbors(g, j))
            out[row, t] = value
    return out


def reduce_view(view: AdversaryView) -> AdversaryView:
    """
    Fill view.reduced with the sufficient statistic for the target's datum.

    DP / none: s_i + r_i.
    SMPC: s_j + Σ_{k∈N_j,h} r_{j|k} for j in the target's honest component.
    DOSP: the masked inputs of all honest nodes at t = 0, 1, followed by the
    conditioning variables {s_j} corrupted and λ(0) on corrupted edges.
    """
    g, cm = view.g, view.cm
    if view.kind in (MechanismKind.DP, MechanismKind.NONE):
        view.reduced = np.array([_perturbed_inputs(view)[view.target]])
    elif view.kind is MechanismKind.SMPC:
        inputs = _perturbed_inputs(view)
        sent = _sent_lookup(view)
        component = sorted(honest_component(g, cm, view.target))
        reduced = []
        for j in component:
            # r_{j|k} = r_k^j − r_j^k is known on every corrupted edge
            leaked = sum(sent[(k, j)] - sent[(j, k)] for k in cm.corrupted_neighbors(g, j))
            reduced.append(inputs[j] - leaked)
        view.reduced = np.array(reduced)
    else:
        masked = _dosp_masked_inputs(view)
        lam0 = view.raw["lambda_c"][view.iterations.index(0)]
        view.reduced = np.concatenate([masked.ravel(), view.raw["s_c"], lam0])
    return view


def reconstruct_partial_sum(view: AdversaryView) -> float:
    """
    Σ_{j∈N_h'} s_j computed from the adversary's observations alone.

    SMPC: the honest-edge noises cancel inside the component.
    DOSP: sum the masked inputs at t = 0, 1 and add back the honest-edge dual
    terms, which the λ update expresses through observed states as
    c·(x_j(0) + x_k(0) − x_j(1) − x_k(1)) per honest edge (j, k).
    """
    if view.reduced is None:
        reduce_view(view)
    g, cm = view.g, view.cm
    component = honest_component(g, cm, view.target)
    if view.kind is MechanismKind.SMPC:
        return float(np.sum(view.reduced))
    if view.kind is not MechanismKind.DOSP:
        raise ValueError(f"Partial sums are defined for SMPC and DOSP views, not {view.kind.value}")
    honest = sorted(cm.honest)
    masked = view.reduced[: 2 * len(honest)].reshape(len(honest), 2)
    rows = [honest.index(j) for j in sorted(component)]
    total = float(np.sum(masked[rows]))
    x0, x1 = view.state(0), view.state(1)
    for j, k in g.edges:
        if j in component and k in component:
            total += view.c * (x0[j] + x0[k] - x1[j] - x1[k])
    return 0.5 * total


def lower_bound_view(run: ConsensusRun, g: Graph, cm: CorruptionModel, i: int) -> np.ndarray:
    """
    Reduced minimum view {s_j, ŷ_j} of the corrupted nodes: n·ŷ − Σ_{j∈N_c} s_j.

    This is s_i + R for DP with n − 1 corrupted nodes and Σ_{j∈N_h} s_j for the
    zero-sum mechanisms.
    """
    if i in cm.corrupted:
        raise CorruptedTargetError(f"Target node {i + 1} is corrupted")
    corrupted = sorted(cm.corrupted)
    if not corrupted:
        raise ValueError("Lower-bound view needs at least one corrupted node")
    yhat = float(np.mean(run.final[corrupted]))
    return np.array([g.n * yhat - float(np.sum(run.s[corrupted]))])


def _partial_sum_mi(size: int) -> float:
    """I(S_i; Σ_{j∈A} S_j) for |A| = size i.i.d. Gaussians containing S_i."""
    if size < 1:
        raise ValueError("Partial sum over an empty set")
    if size == 1:
        return math.inf
    return 0.5 * math.log2(size / (size - 1))


def robustness(kind: MechanismKind, g: Graph, i: int) -> int:
    """Maximum number of corrupted nodes node i tolerates."""
    if not 0 <= i < g.n:
        raise ValueError(f"Node {i} outside 0..{g.n - 1}")
    if kind is MechanismKind.DP:
        return g.n - 1
    if kind in (MechanismKind.SMPC, MechanismKind.DOSP):
        return int(g.degrees[i]) - 1
    return 0


def analytic_privacy(
    kind: MechanismKind,
    n: int,
    sigma_sq: float,
    sigma_s_sq: float = 1.0,
    h: Optional[int] = None,
    n_h: Optional[int] = None,
    k_i: Optional[int] = None,
) -> PrivacyReport:
    """
    Closed-form u_i, ρ_i and ρ_i,min for Gaussian data N(0, σ_S²).

    DP assumes n − 1 corrupted nodes. SMPC and DOSP take the honest component
    size h and honest count n_h; their ρ_i is the large-noise limit.
    """
    if sigma_sq < 0 or sigma_s_sq <= 0:
        raise ValueError("Variances must satisfy σ² >= 0 and σ_S² > 0")
    if kind is MechanismKind.DP:
        snr = math.inf if sigma_sq == 0 else sigma_s_sq / sigma_sq
        snr_min = math.inf if sigma_sq == 0 else sigma_s_sq / (n * sigma_sq)
        return PrivacyReport(
            utility=MIEstimate.analytic(gaussian_mi(snr)),
            privacy=MIEstimate.analytic(gaussian_mi(snr)),
            lower_bound=MIEstimate.analytic(gaussian_mi(snr_min)),
            robustness=n - 1 if k_i is None else k_i,
        )
    if h is None or h < 1:
        raise ValueError(f"Honest component size must be at least 1, got {h}")
    n_h = h if n_h is None else n_h
    privacy = math.inf if kind is MechanismKind.NONE else _partial_sum_mi(h)
    return PrivacyReport(
        utility=MIEstimate.analytic(math.inf),
        privacy=MIEstimate.analytic(privacy),
        lower_bound=MIEstimate.analytic(_partial_sum_mi(n_h)),
        robustness=k_i,
    )
