"""
Mutual-information metrics: closed-form Gaussian MI, the KSG k-nearest-neighbour
estimator, a Gaussian plug-in estimator, NMI normalization and output utility.

All values are in bits. Divergent MI (a variable that is a deterministic function
of the other) is represented by math.inf.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import digamma
from sklearn.neighbors import KDTree

DEFAULT_K = 3
JITTER = 1e-10
MIN_TRIALS_PER_K = 10
# relative conditional variance under which the Gaussian estimator reports divergence
DETERMINISM_TOL = 1e-12
FULL_UTILITY_TOL = 1e-6


class MIMethod(str, Enum):
    ANALYTIC = "analytic"
    KNN = "knn"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class MIEstimate:
    """A mutual-information value with the estimator that produced it."""
    value_bits: float
    method: MIMethod
    k: Optional[int] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    std: float = 0.0

    @property
    def nmi(self) -> float:
        return normalize(self.value_bits)

    @property
    def is_full(self) -> bool:
        return math.isinf(self.value_bits)

    @classmethod
    def analytic(cls, value_bits: float) -> "MIEstimate":
        return cls(value_bits=value_bits, method=MIMethod.ANALYTIC)


@dataclass
class SampleMatrix:
    """
    Monte-Carlo samples: one row per trial, named column blocks.

    Every block is a 2-D array with the same number of rows.
    """
    blocks: Dict[str, np.ndarray]

    def __post_init__(self) -> None:
        rows = None
        for name, block in list(self.blocks.items()):
            block = np.asarray(block, dtype=float)
            if block.ndim == 1:
                block = block[:, None]
            if not np.all(np.isfinite(block)):
                raise ValueError(f"Sample block {name!r} has non-finite entries")
            if rows is None:
                rows = block.shape[0]
            elif block.shape[0] != rows:
                raise ValueError(f"Sample block {name!r} has {block.shape[0]} rows, expected {rows}")
            self.blocks[name] = block

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping[str, np.ndarray]]) -> "SampleMatrix":
        """Stack per-trial dicts of vectors into blocks, keeping trial order."""
        if not rows:
            raise ValueError("No trials to stack")
        names = list(rows[0].keys())
        return cls({name: np.vstack([np.atleast_1d(row[name]) for row in rows]) for name in names})

    @property
    def trials(self) -> int:
        return next(iter(self.blocks.values())).shape[0]

    @property
    def names(self) -> List[str]:
        return list(self.blocks)

    def block(self, names: Sequence[str]) -> np.ndarray:
        if isinstance(names, str):
            names = [names]
        return np.hstack([self.blocks[name] for name in names])

    def to_frame(self) -> pd.DataFrame:
        columns = {}
        for name, block in self.blocks.items():
            if block.shape[1] == 1:
                columns[name] = block[:, 0]
            else:
                for k in range(block.shape[1]):
                    columns[f"{name}_{k}"] = block[:, k]
        return pd.DataFrame(columns)


def gaussian_mi(snr: float) -> float:
    """½·log2(1 + SNR), the MI of S and S + R for independent Gaussians."""
    if snr < 0:
        raise ValueError(f"SNR must be non-negative, got {snr}")
    if math.isinf(snr):
        return math.inf
    return 0.5 * math.log2(1.0 + snr)


def gaussian_pair_mi(correlation: float) -> float:
    """MI of a bivariate Gaussian with the given correlation coefficient."""
    if abs(correlation) >= 1.0:
        return math.inf
    return -0.5 * math.log2(1.0 - correlation ** 2)


def normalize(value_bits: float) -> float:
    """NMI = 1 − 2^(−2I), in [0, 1]; equals the squared correlation for Gaussian pairs."""
    if math.isinf(value_bits):
        return 1.0
    return 1.0 - 2.0 ** (-2.0 * max(value_bits, 0.0))


def _as_2d(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[:, None] if values.ndim == 1 else values


def _standardize(values: np.ndarray) -> np.ndarray:
    scale = values.std(axis=0)
    scale[scale == 0.0] = 1.0
    return (values - values.mean(axis=0)) / scale


def ksg_mi(x: np.ndarray, y: np.ndarray, k: int = DEFAULT_K, seed: int = 0) -> MIEstimate:
    """
    Kraskov–Stögbauer–Grassberger estimate of I(X; Y), max-norm neighbourhoods.

    Columns are standardized, then jittered by uniform noise of amplitude 1e-10
    drawn from `seed` to break ties. Negative estimates are clamped to zero.
    """
    x, y = _as_2d(x), _as_2d(y)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"X has {n} samples, Y has {y.shape[0]}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k >= n or n <= MIN_TRIALS_PER_K * k:
        raise ValueError(f"kNN estimation with k={k} needs more than {MIN_TRIALS_PER_K * k} trials, got {n}")

    rng = np.random.default_rng(seed)
    x = _standardize(x) + JITTER * rng.random(x.shape)
    y = _standardize(y) + JITTER * rng.random(y.shape)
    joint = np.hstack([x, y])

    dist, _ = KDTree(joint, metric="chebyshev").query(joint, k=k + 1)
    radius = np.nextafter(dist[:, k], 0.0)
    # counts include the query point itself, so digamma(count) = ψ(n_x + 1)
    n_x = KDTree(x, metric="chebyshev").query_radius(x, radius, count_only=True)
    n_y = KDTree(y, metric="chebyshev").query_radius(y, radius, count_only=True)

    terms = (digamma(k) + digamma(n) - digamma(n_x) - digamma(n_y)) / math.log(2.0)
    value = float(np.mean(terms))
    std = float(np.std(terms, ddof=1) / math.sqrt(n))
    return MIEstimate(value_bits=max(value, 0.0), method=MIMethod.KNN, k=k, trials=n, seed=seed, std=std)


def gaussian_mi_estimate(x: np.ndarray, y: np.ndarray) -> MIEstimate:
    """
    Plug-in estimate of I(X; Y) assuming joint Gaussianity.

    I = ½·log2(det Σ_xx / det Σ_x|y) with Σ_x|y = Σ_xx − Σ_xy Σ_yy⁺ Σ_yx;
    linearly dependent view columns are handled by the pseudo-inverse.
    """
    x, y = _standardize(_as_2d(x)), _standardize(_as_2d(y))
    n = x.shape[0]
    if y.shape[0] != n or n < 3:
        raise ValueError("Gaussian estimate needs matching sample counts of at least 3")
    cov = np.cov(np.hstack([x, y]), rowvar=False)
    dx = x.shape[1]
    s_xx, s_xy, s_yy = cov[:dx, :dx], cov[:dx, dx:], cov[dx:, dx:]

    w, V = np.linalg.eigh(s_yy)
    top = float(w.max()) if w.size else 0.0
    keep = w > 1e-10 * top if top > 0 else np.zeros(w.shape, dtype=bool)
    proj = s_xy @ V[:, keep]
    s_cond = s_xx - (proj / w[keep]) @ proj.T

    _, logdet_xx = np.linalg.slogdet(s_xx)
    sign, logdet_cond = np.linalg.slogdet(s_cond)
    if sign <= 0 or logdet_cond - logdet_xx < dx * math.log(DETERMINISM_TOL):
        return MIEstimate(value_bits=math.inf, method=MIMethod.GAUSSIAN, trials=n)
    value = 0.5 * (logdet_xx - logdet_cond) / math.log(2.0)
    return MIEstimate(value_bits=max(value, 0.0), method=MIMethod.GAUSSIAN, trials=n)


def linear_statistic(target: np.ndarray, view: np.ndarray, folds: int = 2) -> np.ndarray:
    """
    Cross-fitted least-squares predictor of a scalar `target` from `view`, as one column.

    For jointly Gaussian samples the predictor is a sufficient statistic, so
    I(target; view) = I(target; predictor) while kNN works in one dimension.
    Trials are split into folds by index modulo `folds`; each fold is predicted
    with coefficients fitted on the others. Single-column views are returned as is.
    """
    t, v = _as_2d(target), _as_2d(view)
    if t.shape[1] != 1:
        raise ValueError(f"Target must be a single column, got {t.shape[1]}")
    n = v.shape[0]
    if t.shape[0] != n:
        raise ValueError(f"Target has {t.shape[0]} samples, view has {n}")
    if v.shape[1] == 1:
        return v
    if folds < 2 or n < 2 * folds:
        raise ValueError(f"Cross-fitting with {folds} folds needs at least {2 * folds} trials, got {n}")

    design = np.hstack([np.ones((n, 1)), v])
    fold_of = np.arange(n) % folds
    predicted = np.empty(n)
    for fold in range(folds):
        held_out = fold_of == fold
        coef, *_ = np.linalg.lstsq(design[~held_out], t[~held_out, 0], rcond=None)
        predicted[held_out] = design[held_out] @ coef
    return predicted[:, None]


def knn_mi(
    samples: SampleMatrix,
    target_cols: Sequence[str],
    view_cols: Sequence[str],
    k: int = DEFAULT_K,
    seed: int = 0,
) -> MIEstimate:
    """KSG estimate of I(target; view) over named blocks of a SampleMatrix."""
    return ksg_mi(samples.block(target_cols), samples.block(view_cols), k=k, seed=seed)


def estimate_mi(
    x: np.ndarray,
    y: np.ndarray,
    method: MIMethod = MIMethod.KNN,
    k: int = DEFAULT_K,
    seed: int = 0,
) -> MIEstimate:
    """Dispatch to the kNN or Gaussian estimator."""
    if method is MIMethod.KNN:
        return ksg_mi(x, y, k=k, seed=seed)
    if method is MIMethod.GAUSSIAN:
        return gaussian_mi_estimate(x, y)
    raise ValueError(f"{method.value} is not a sample-based method")


def utility(
    y_samples: np.ndarray,
    yhat_samples: np.ndarray,
    method: MIMethod = MIMethod.KNN,
    k: int = DEFAULT_K,
    seed: int = 0,
) -> MIEstimate:
    """
    Output utility I(Y_i; Ŷ_i).

    When every trial reproduces the desired output (to 1e-6 relative), the
    full-utility sentinel I(Y; Y) = ∞ is returned.
    """
    y = np.asarray(y_samples, dtype=float)
    yhat = np.asarray(yhat_samples, dtype=float)
    if y.shape[0] != yhat.shape[0]:
        raise ValueError(f"Mismatched trial counts: {y.shape[0]} vs {yhat.shape[0]}")
    scale = 1.0 + float(np.max(np.abs(y))) if y.size else 1.0
    if y.shape == yhat.shape and float(np.max(np.abs(y - yhat))) <= FULL_UTILITY_TOL * scale:
        return MIEstimate(value_bits=math.inf, method=method, k=k if method is MIMethod.KNN else None,
                          trials=y.shape[0], seed=seed)
    return estimate_mi(y, yhat, method=method, k=k, seed=seed)


def bivariate_gaussian_samples(correlation: float, trials: int, stream: np.random.Generator) -> np.ndarray:
    """(trials, 2) samples of a unit-variance Gaussian pair with the given correlation."""
    z = stream.standard_normal((trials, 2))
    x = z[:, 0]
    y = correlation * x + math.sqrt(max(1.0 - correlation ** 2, 0.0)) * z[:, 1]
    return np.column_stack([x, y])
