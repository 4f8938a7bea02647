"""
Synchronous linear-iteration consensus x(t+1) = W x(t) and the shared run transcript.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
import pandas as pd

from privcon.core.graph import Graph, is_connected
from privcon.exceptions import DisconnectedGraphError

if TYPE_CHECKING:
    from privcon.core.perturbation import NoiseRecord

STOCHASTIC_TOL = 1e-10


@dataclass(frozen=True)
class WeightMatrix:
    """Weight matrix W of sparsity class 𝒲 over a graph."""
    W: np.ndarray

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def respects(self, g: Graph) -> bool:
        """True if W_ij = 0 whenever i != j and (i, j) is not an edge."""
        allowed = np.eye(g.n, dtype=bool)
        for i, j in g.edges:
            allowed[i, j] = allowed[j, i] = True
        return bool(np.all(self.W[~allowed] == 0.0))


@dataclass(frozen=True)
class ConsensusReport:
    """Averaging conditions: 1ᵀW = 1ᵀ, W1 = 1 and spectral radius of W − 11ᵀ/n below 1."""
    column_sums: bool
    row_sums: bool
    contracting: bool
    rho: float

    @property
    def ok(self) -> bool:
        return self.column_sums and self.row_sums and self.contracting


@dataclass
class ConsensusRun:
    """
    Transcript of one algorithm execution.

    x_traj holds x(0)..x(T) row-wise. lambda_traj is filled by PDMM runs only.
    `s` is the true private data; with a mechanism the solver may have run on
    perturbed data, recorded in `noise`.
    """
    x_traj: np.ndarray
    s: np.ndarray
    solver: str
    mechanism: str = "none"
    lambda_traj: Optional[np.ndarray] = None
    noise: Optional["NoiseRecord"] = None
    c: Optional[float] = None
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.x_traj.shape[0] - 1

    @property
    def n(self) -> int:
        return self.x_traj.shape[1]

    @property
    def final(self) -> np.ndarray:
        """ŷ, the estimated outputs x(T)."""
        return self.x_traj[-1]

    @property
    def average(self) -> float:
        """s_ave, the desired output of every node."""
        return float(np.mean(self.s))

    def errors(self) -> np.ndarray:
        """‖x(t) − s_ave·1‖₂ for t = 0..T."""
        return np.linalg.norm(self.x_traj - self.average, axis=1)

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns t, x_0..x_{n-1}, then λ and noise columns when present."""
        frame = pd.DataFrame(self.x_traj, columns=[f"x_{i}" for i in range(self.n)])
        if self.lambda_traj is not None:
            lam = pd.DataFrame(
                self.lambda_traj, columns=[f"lambda_{k}" for k in range(self.lambda_traj.shape[1])]
            )
            frame = pd.concat([frame, lam], axis=1)
        if self.noise is not None:
            for name, values in self.noise.columns().items():
                frame[name] = values
        frame.insert(0, "t", np.arange(self.T + 1))
        return frame

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def metropolis_weights(g: Graph) -> WeightMatrix:
    """Metropolis–Hastings weights W_ij = 1/(1 + max(d_i, d_j)), diagonal filling rows to one."""
    if not is_connected(g):
        raise DisconnectedGraphError("Metropolis weights need a connected graph")
    d = g.degrees
    W = np.zeros((g.n, g.n))
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    W[np.diag_indices(g.n)] = 1.0 - W.sum(axis=1)
    return WeightMatrix(W=W)


def check_consensus_conditions(w: WeightMatrix) -> ConsensusReport:
    W = np.asarray(w.W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"Weight matrix must be square, got shape {W.shape}")
    n = W.shape[0]
    ones = np.ones(n)
    column_sums = bool(np.allclose(ones @ W, ones, rtol=0.0, atol=STOCHASTIC_TOL))
    row_sums = bool(np.allclose(W @ ones, ones, rtol=0.0, atol=STOCHASTIC_TOL))
    rho = float(np.max(np.abs(np.linalg.eigvals(W - np.full((n, n), 1.0 / n)))))
    return ConsensusReport(column_sums=column_sums, row_sums=row_sums, contracting=rho < 1.0 - 1e-12, rho=rho)


def run_linear(w: WeightMatrix, x0: np.ndarray, T: int, s: Optional[np.ndarray] = None) -> ConsensusRun:
    """
    Iterate x(t+1) = W x(t) for T steps.

    `s` is the true private data used to measure errors; defaults to x0 (no mechanism).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (w.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({w.n},)")
    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    traj = np.empty((T + 1, w.n))
    traj[0] = x0
    for t in range(T):
        traj[t + 1] = w.W @ traj[t]
    return ConsensusRun(
        x_traj=traj,
        s=x0.copy() if s is None else np.asarray(s, dtype=float),
        solver="linear",
    )
