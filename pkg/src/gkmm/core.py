"""Domain types shared across the package.

Samples are stored row-major: each block is an ``(n_i, d)`` float array whose
rows are samples.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyBlock, NonPositiveSigma, WeightSumError

WEIGHT_SUM_TOL = 1e-9


def _as_block(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D sample block, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PartitionedData:
    """Non-overlapping sample blocks with one mixture weight per block.

    Used for both sides of the problem: on the train side the weights are the
    mixture coefficients of the denominator density, on the test side those
    of the numerator density. 1-D blocks are read as single-feature columns.
    """

    blocks: tuple
    weights: np.ndarray

    def __post_init__(self):
        blocks = tuple(_as_block(b) for b in self.blocks)
        weights = np.array(self.weights, dtype=float).ravel()
        weights.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "weights", weights)
        validate_partitions(self)

    @classmethod
    def from_blocks(cls, blocks, weights=None) -> "PartitionedData":
        """Build from blocks; ``weights=None`` means size-proportional."""
        blocks = [_as_block(b) for b in blocks]
        if weights is None:
            weights = size_proportional_weights(blocks)
        return cls(tuple(blocks), weights)

    @property
    def sizes(self) -> list:
        return [b.shape[0] for b in self.blocks]

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def dim(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def stacked(self) -> np.ndarray:
        """All samples in block order, then sample order."""
        return np.vstack(self.blocks)


def validate_partitions(data) -> None:
    """Raise if ``data`` violates the PartitionedData invariants.

    Checks, in order: at least one block, every block non-empty, a shared
    feature count, one weight per block, weights in [0, 1] summing to 1.
    Weights that miss the sum are rejected rather than renormalised.
    """
    blocks, weights = data.blocks, np.asarray(data.weights, dtype=float)
    if len(blocks) == 0:
        raise EmptyBlock("no blocks given")
    for i, b in enumerate(blocks):
        if b.shape[0] < 1:
            raise EmptyBlock(f"block {i} has no rows")
    dims = {b.shape[1] for b in blocks}
    if len(dims) != 1 or 0 in dims:
        raise DimensionMismatch(f"blocks have differing or zero column counts: {sorted(dims)}")
    if weights.shape != (len(blocks),):
        raise DimensionMismatch(f"{len(blocks)} blocks but {weights.size} weights")
    if np.any(~np.isfinite(weights)) or np.any(weights < 0) or np.any(weights > 1):
        raise WeightSumError(f"weights must lie in [0, 1], got {weights.tolist()}")
    total = weights.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumError(f"weights sum to {total!r}, expected 1")


def size_proportional_weights(blocks) -> np.ndarray:
    """Mixture weights ``n_i / sum(n_j)`` from the block sizes."""
    if len(blocks) == 0:
        raise EmptyBlock("no blocks given")
    sizes = np.array([np.shape(b)[0] for b in blocks], dtype=float)
    if np.any(sizes < 1):
        raise EmptyBlock("every block needs at least one row")
    return sizes / sizes.sum()


def alpha_relative_config(train_blocks: Sequence, gamma, test_pool, alpha: float) -> PartitionedData:
    """Train-side partitions for the alpha-relative density ratio.

    The pooled test samples are appended as a final train block with weight
    ``alpha``, so the denominator becomes ``sum_j gamma_j p'_j + alpha p``.
    ``gamma`` must sum to ``1 - alpha``. Overlap between the appended pool and
    the numerator samples is intentional.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    gamma = np.asarray(gamma, dtype=float).ravel()
    if abs(gamma.sum() + alpha - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumError(f"sum(gamma) + alpha = {gamma.sum() + alpha!r}, expected 1")
    blocks = [_as_block(b) for b in train_blocks]
    if alpha == 0.0:
        return PartitionedData(tuple(blocks), gamma)
    return PartitionedData(tuple(blocks) + (_as_block(test_pool),), np.append(gamma, alpha))


class KernelFamily(str, enum.Enum):
    RBF = "rbf"
    LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and bandwidth.

    ``sigma`` multiplies the squared (RBF) or L1 (Laplacian) distance inside
    the exponential, i.e. it is an inverse squared length scale. ``None``
    stands for the default ``1/d``, resolved once the feature count is known.
    """

    family: KernelFamily = KernelFamily.RBF
    sigma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.sigma is not None:
            s = float(self.sigma)
            if not (np.isfinite(s) and s > 0):
                raise NonPositiveSigma(f"sigma must be positive, got {self.sigma!r}")
            object.__setattr__(self, "sigma", s)

    def resolved(self, d: int) -> "KernelConfig":
        from .kernels import resolve_sigma

        return KernelConfig(self.family, resolve_sigma(self, d))


@dataclass(frozen=True)
class GkmmProblem:
    """Empirical quadratic program ``min theta'P theta - q'theta``.

    Subject to ``0 <= theta <= bound_B`` and ``|xi'theta - 1| <= eps``. ``P``
    is stored without the numerical ridge the solver adds.
    """

    P: np.ndarray
    q: np.ndarray
    xi: np.ndarray
    bound_B: float
    eps: float
    basis: np.ndarray
    kernel: KernelConfig

    @property
    def size(self) -> int:
        return self.q.shape[0]


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass
class Solution:
    theta: np.ndarray
    objective: float
    status: Status
    iterations: int
    primal_residual: float
    dual_residual: float
    trace: list = field(default_factory=list, repr=False)

    def stats(self) -> dict:
        return {
            "status": self.status.value,
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "primal_residual": float(self.primal_residual),
            "dual_residual": float(self.dual_residual),
        }


@dataclass(frozen=True)
class DensityRatioModel:
    """Linear kernel model ``r(x) = sum_m theta_m K(x, basis_m)``."""

    theta: np.ndarray
    basis: np.ndarray
    kernel: KernelConfig

    def __call__(self, X) -> np.ndarray:
        from .estimators import evaluate_ratio

        return evaluate_ratio(self, X)
