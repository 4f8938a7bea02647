"""
PDMM solver for the averaging problem min ½‖x − s‖² s.t. x_i = x_j on every edge.

Dual vectors have length 2m: entry l is λ_{i|j} and entry l + m is λ_{j|i}
for edge e_l = (i, j), i < j (see Graph.directed_index).
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from privcon.core.graph import Graph, PdmmEdgeMatrices
from privcon.core.linear import ConsensusRun

DEFAULT_C = 0.4
DEFAULT_T = 400
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class PdmmState:
    """Primal x (n), dual λ (2m), iteration counter and penalty c > 0."""
    x: np.ndarray
    lam: np.ndarray
    t: int = 0
    c: float = DEFAULT_C

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValueError(f"PDMM penalty c must be positive, got {self.c}")


@dataclass(frozen=True)
class SubspaceProjector:
    """Orthogonal projector onto H̄ = span(C) + span(PC)."""
    Pi_H: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.Pi_H.shape[0]

    @property
    def complement_dim(self) -> int:
        """dim(H̄⊥); zero means DOSP has no room for subspace noise."""
        return self.dim - self.rank

    def complement(self, lam: np.ndarray) -> np.ndarray:
        """(I − Π_H̄)λ."""
        return lam - self.Pi_H @ lam


def _check_dims(x: np.ndarray, lam: np.ndarray, s: np.ndarray, mats: PdmmEdgeMatrices) -> None:
    if s.shape != (mats.n,) or x.shape != (mats.n,):
        raise ValueError(f"x and s must have shape ({mats.n},), got {x.shape} and {s.shape}")
    if lam.shape != (2 * mats.m,):
        raise ValueError(f"λ must have shape ({2 * mats.m},), got {lam.shape}")


def _pinv(A: np.ndarray) -> np.ndarray:
    """Moore–Penrose pseudo-inverse, singular values below 1e-12·σ_max dropped."""
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    if S.size == 0 or S[0] == 0.0:
        return np.zeros(A.T.shape)
    keep = S > RANK_RTOL * S[0]
    return (Vt[keep].T / S[keep]) @ U[:, keep].T


def pdmm_step(state: PdmmState, s: np.ndarray, mats: PdmmEdgeMatrices) -> PdmmState:
    """
    One synchronous PDMM iteration in matrix form.

        x(t+1) = (I + cCᵀC)⁻¹ (s − cCᵀPC x(t) − CᵀPλ(t))
        λ(t+1) = Pλ(t) + c(C x(t+1) + PC x(t))
    """
    s = np.asarray(s, dtype=float)
    _check_dims(state.x, state.lam, s, mats)
    c, C, P, PC = state.c, mats.C, mats.P, mats.PC
    A = np.eye(mats.n) + c * (C.T @ C)
    rhs = s - c * (C.T @ (PC @ state.x)) - C.T @ (P @ state.lam)
    x_next = np.linalg.solve(A, rhs)
    lam_next = P @ state.lam + c * (C @ x_next + PC @ state.x)
    return replace(state, x=x_next, lam=lam_next, t=state.t + 1)


def pdmm_step_local(state: PdmmState, s: np.ndarray, g: Graph) -> PdmmState:
    """The same iteration written per node, as each node would compute it."""
    s = np.asarray(s, dtype=float)
    c, x, lam = state.c, state.x, state.lam
    d = g.degrees
    x_next = np.empty(g.n)
    for i in range(g.n):
        acc = s[i]
        for j in g.neighbors(i):
            b_ij = 1.0 if i < j else -1.0
            acc += c * x[j] - b_ij * lam[g.directed_index(j, i)]
        x_next[i] = acc / (1.0 + c * d[i])
    lam_next = np.empty_like(lam)
    for i in range(g.n):
        for j in g.neighbors(i):
            b_ij = 1.0 if i < j else -1.0
            lam_next[g.directed_index(i, j)] = (
                lam[g.directed_index(j, i)] + c * (b_ij * x_next[i] - b_ij * x[j])
            )
    return replace(state, x=x_next, lam=lam_next, t=state.t + 1)


def run_pdmm(
    s: np.ndarray,
    c: float,
    lambda0: Optional[np.ndarray],
    T: int,
    mats: PdmmEdgeMatrices,
    true_s: Optional[np.ndarray] = None,
) -> ConsensusRun:
    """
    Run T PDMM iterations from x(0) = 0 and the given λ(0) (zeros when None).

    `s` is the data the solver optimizes over; `true_s` (defaults to `s`) is the
    private data errors are measured against.
    """
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    s = np.asarray(s, dtype=float)
    lam0 = np.zeros(2 * mats.m) if lambda0 is None else np.asarray(lambda0, dtype=float)
    state = PdmmState(x=np.zeros(mats.n), lam=lam0, c=c)
    _check_dims(state.x, state.lam, s, mats)

    x_traj = np.empty((T + 1, mats.n))
    lam_traj = np.empty((T + 1, 2 * mats.m))
    x_traj[0], lam_traj[0] = state.x, state.lam
    for t in range(1, T + 1):
        state = pdmm_step(state, s, mats)
        x_traj[t], lam_traj[t] = state.x, state.lam
    return ConsensusRun(
        x_traj=x_traj,
        lambda_traj=lam_traj,
        s=s.copy() if true_s is None else np.asarray(true_s, dtype=float),
        solver="pdmm",
        c=c,
    )


def subspace_projector(mats: PdmmEdgeMatrices) -> SubspaceProjector:
    """Projector from an orthonormal basis of the column space of [C  PC]."""
    stacked = np.hstack([mats.C, mats.PC])
    U, S, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(S > RANK_RTOL * S[0])) if S.size else 0
    Q = U[:, :rank]
    return SubspaceProjector(Pi_H=Q @ Q.T, rank=rank)


def dual_optimum(s: np.ndarray, c: float, mats: PdmmEdgeMatrices) -> np.ndarray:
    """
    λ* = −[Cᵀ; (PC)ᵀ]† [x* − s + cCᵀC x*; x* − s + cCᵀPC x*] + cC x*,  x* = s_ave·1.
    """
    s = np.asarray(s, dtype=float)
    x_star = np.full(mats.n, np.mean(s))
    C, PC = mats.C, mats.PC
    stacked = np.vstack([C.T, PC.T])
    rhs = np.concatenate([
        x_star - s + c * (C.T @ (C @ x_star)),
        x_star - s + c * (C.T @ (PC @ x_star)),
    ])
    return -_pinv(stacked) @ rhs + c * (C @ x_star)


def fixed_point_residual(lam_star: np.ndarray, s: np.ndarray, c: float, mats: PdmmEdgeMatrices) -> float:
    """max |x_next − x*| after one primal update from (x*, λ*)."""
    s = np.asarray(s, dtype=float)
    x_star = np.full(mats.n, np.mean(s))
    state = pdmm_step(PdmmState(x=x_star, lam=lam_star, c=c), s, mats)
    return float(np.max(np.abs(state.x - x_star)))


def decompose_dual(lam: np.ndarray, proj: SubspaceProjector) -> Tuple[np.ndarray, np.ndarray]:
    """Split λ into the convergent part Π_H̄λ and the non-convergent part (I − Π_H̄)λ."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (proj.dim,):
        raise ValueError(f"λ must have shape ({proj.dim},), got {lam.shape}")
    conv = proj.Pi_H @ lam
    return conv, lam - conv


def convergence_fit(errors: np.ndarray, burn_in: int = 20, floor: float = 1e-13) -> Tuple[float, float]:
    """
    Least-squares line through log10(error) against t after the burn-in.

    Points at or below `floor` (round-off level) are left out. Returns (slope, R²).
    """
    errors = np.asarray(errors, dtype=float)
    t = np.arange(errors.size)
    mask = (t >= burn_in) & (errors > floor)
    if np.count_nonzero(mask) < 3:
        raise ValueError("Not enough points above the floor to fit a rate")
    t_fit, y = t[mask], np.log10(errors[mask])
    slope, intercept = np.polyfit(t_fit, y, 1)
    residual = y - (slope * t_fit + intercept)
    total = y - y.mean()
    r2 = 1.0 - float(residual @ residual) / float(total @ total) if total @ total > 0 else 1.0
    return float(slope), r2
