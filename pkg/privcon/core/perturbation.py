"""
Noise-insertion mechanisms for private averaging.

- DP: every node adds i.i.d. zero-mean noise to its initial state.
- SMPC: neighbours exchange random numbers so the node noises sum exactly to zero.
- DOSP: PDMM with randomly initialized duals; the part of λ(0) outside H̄ masks the data.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np

from privcon.core.graph import Graph, PdmmEdgeMatrices, pdmm_edge_matrices
from privcon.core.linear import ConsensusRun, WeightMatrix, metropolis_weights, run_linear
from privcon.core.pdmm import (
    DEFAULT_C,
    DEFAULT_T,
    SubspaceProjector,
    run_pdmm,
    subspace_projector,
)
from privcon.exceptions import MechanismConfigError
from privcon.utils.console import get_logger

logger = get_logger(__name__)


class MechanismKind(str, Enum):
    NONE = "none"
    DP = "dp"
    SMPC = "smpc"
    DOSP = "dosp"


class SolverKind(str, Enum):
    LINEAR = "linear"
    PDMM = "pdmm"


@dataclass(frozen=True)
class MechanismConfig:
    """Which mechanism runs, with how much noise, on which solver."""
    kind: MechanismKind = MechanismKind.NONE
    sigma_sq: float = 0.0
    solver: SolverKind = SolverKind.LINEAR
    c: float = DEFAULT_C
    T: int = DEFAULT_T

    def validate(self) -> None:
        if self.sigma_sq < 0:
            raise ValueError(f"Noise variance must be non-negative, got {self.sigma_sq}")
        if self.kind is MechanismKind.DOSP and self.solver is not SolverKind.PDMM:
            raise MechanismConfigError("DOSP perturbs PDMM dual variables and needs the PDMM solver")
        if self.solver is SolverKind.PDMM and self.c <= 0:
            raise ValueError(f"PDMM penalty c must be positive, got {self.c}")
        if self.T < 0 or (self.solver is SolverKind.PDMM and self.T < 1):
            raise ValueError(f"Invalid iteration count T={self.T} for solver {self.solver.value}")


@dataclass
class NoiseRecord:
    """
    Noise drawn by a mechanism.

    node_noise: r_i per node (DP, SMPC).
    sent: r_i^j at directed index i|j, the number node i sends to j (SMPC).
    pairwise: r_{i|j} = r_j^i − r_i^j at directed index i|j (SMPC).
    lambda0, subspace_noise: λ(0) and (I − Π_H̄)λ(0) (DOSP).
    """
    node_noise: Optional[np.ndarray] = None
    sent: Optional[np.ndarray] = None
    pairwise: Optional[np.ndarray] = None
    lambda0: Optional[np.ndarray] = None
    subspace_noise: Optional[np.ndarray] = None
    subspace_warning: bool = False

    def columns(self) -> Dict[str, float]:
        """Flat name → value mapping appended to transcript CSVs."""
        out: Dict[str, float] = {}
        for prefix, values in (
            ("r", self.node_noise),
            ("r_sent", self.sent),
            ("r_pair", self.pairwise),
            ("subspace_noise", self.subspace_noise),
        ):
            if values is not None:
                out.update({f"{prefix}_{k}": float(v) for k, v in enumerate(values)})
        return out


class MechanismContext:
    """Per-graph solver inputs, built on first use and shared read-only across trials."""

    def __init__(self, g: Graph):
        self.g = g

    @cached_property
    def weights(self) -> WeightMatrix:
        return metropolis_weights(self.g)

    @cached_property
    def mats(self) -> PdmmEdgeMatrices:
        return pdmm_edge_matrices(self.g)

    @cached_property
    def projector(self) -> SubspaceProjector:
        return subspace_projector(self.mats)


def gaussian_noise_floor(sigma_s_sq: float, epsilon: float) -> float:
    """Smallest Gaussian noise variance keeping I(S; S + R) ≤ ε bits: σ_S² / (2^{2ε} − 1)."""
    if sigma_s_sq <= 0:
        raise ValueError(f"Data variance must be positive, got {sigma_s_sq}")
    if epsilon <= 0:
        raise ValueError(f"ε must be positive, got {epsilon}")
    return sigma_s_sq / (2.0 ** (2.0 * epsilon) - 1.0)


def dp_init(s: np.ndarray, sigma_sq: float, stream: np.random.Generator) -> Tuple[np.ndarray, NoiseRecord]:
    """x(0) = s + r with r_i ~ N(0, σ²) i.i.d."""
    if sigma_sq < 0:
        raise ValueError(f"Noise variance must be non-negative, got {sigma_sq}")
    s = np.asarray(s, dtype=float)
    r = stream.normal(0.0, np.sqrt(sigma_sq), size=s.shape[0])
    return s + r, NoiseRecord(node_noise=r)


def smpc_noise(g: Graph, sigma_sq: float, stream: np.random.Generator) -> NoiseRecord:
    """
    Pairwise-exchange noise with exact zero sum.

    For each edge (i, j), i < j, in edge order, draw r_i^j then r_j^i from N(0, σ²).
    """
    if sigma_sq < 0:
        raise ValueError(f"Noise variance must be non-negative, got {sigma_sq}")
    m = g.m
    draws = stream.normal(0.0, np.sqrt(sigma_sq), size=(m, 2))
    sent = np.concatenate([draws[:, 0], draws[:, 1]])
    forward = sent[m:] - sent[:m]
    pairwise = np.concatenate([forward, -forward])

    owners = np.array([i for i, _ in g.edges] + [j for _, j in g.edges], dtype=int)
    node_noise = np.zeros(g.n)
    np.add.at(node_noise, owners, pairwise)
    return NoiseRecord(node_noise=node_noise, sent=sent, pairwise=pairwise)


def dosp_init(
    g: Graph,
    sigma_sq: float,
    stream: np.random.Generator,
    proj: SubspaceProjector,
) -> Tuple[np.ndarray, NoiseRecord]:
    """λ(0) with i.i.d. N(0, σ²) entries; the record keeps its H̄⊥ component."""
    if sigma_sq < 0:
        raise ValueError(f"Noise variance must be non-negative, got {sigma_sq}")
    lambda0 = stream.normal(0.0, np.sqrt(sigma_sq), size=2 * g.m)
    warning = g.m < g.n
    if warning:
        logger.warning(
            "DOSP on a graph with m=%d < n=%d edges: H̄⊥ may be empty and subspace noise gives no privacy",
            g.m, g.n,
        )
    return lambda0, NoiseRecord(
        lambda0=lambda0,
        subspace_noise=proj.complement(lambda0),
        subspace_warning=warning,
    )


def apply_mechanism(
    cfg: MechanismConfig,
    g: Graph,
    s: np.ndarray,
    stream: np.random.Generator,
    ctx: Optional[MechanismContext] = None,
    seed: Optional[int] = None,
) -> ConsensusRun:
    """
    Draw the mechanism's noise from `stream` and run the configured solver on it.

    `seed` is the seed `stream` was built from; it is stored on the run.
    """
    cfg.validate()
    ctx = ctx or MechanismContext(g)
    s = np.asarray(s, dtype=float)
    record: Optional[NoiseRecord] = None

    if cfg.kind is MechanismKind.DOSP:
        lambda0, record = dosp_init(g, cfg.sigma_sq, stream, ctx.projector)
        run = run_pdmm(s, cfg.c, lambda0, cfg.T, ctx.mats)
    else:
        data = s
        if cfg.kind is MechanismKind.DP:
            data, record = dp_init(s, cfg.sigma_sq, stream)
        elif cfg.kind is MechanismKind.SMPC:
            record = smpc_noise(g, cfg.sigma_sq, stream)
            data = s + record.node_noise
        if cfg.solver is SolverKind.LINEAR:
            run = run_linear(ctx.weights, data, cfg.T, s=s)
        else:
            run = run_pdmm(data, cfg.c, None, cfg.T, ctx.mats, true_s=s)

    run.mechanism = cfg.kind.value
    run.noise = record
    run.seed = seed
    return run
