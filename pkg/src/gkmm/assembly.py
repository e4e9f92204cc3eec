"""Assembly of the empirical generalized KMM quadratic program.

The density ratio is modelled as ``r(x) = sum_m theta_m K(x, z_m)`` where the
basis points ``z_m`` are the pooled test samples. Plugging this model into the
kernel mean matching loss between the gamma-weighted train mixture and the
omega-weighted test mixture, scaled by ``n'_max**2``, gives

    f(theta) = theta' P theta - q' theta

with

    P = sum_{j,k} A_j' H_jk A_k,    q = sum_{j,i} A_j' h_ij,

where ``A_j = K(train block j, basis)``,
``H_jk = n'_max^2 / (n'_j n'_k) * gamma_j gamma_k / 2 * K(train_j, train_k)`` and
``h_ij[t] = n'_max^2 / (n_i n'_j) * gamma_j omega_i * sum_l K(x'_t, x_l)``.
The unit-mean constraint on the train mixture becomes ``xi' theta ~= 1`` with
``xi = sum_j gamma_j / n'_j * sum_t K(x'_t, basis)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GkmmProblem, KernelConfig, PartitionedData
from .errors import DimensionMismatch, InfeasibleProblem
from .kernels import gram


def build_basis(test: PartitionedData) -> np.ndarray:
    return test.stacked()


def default_eps(n_train: int) -> float:
    """``(sqrt(n') - 1) / sqrt(n')``, the usual KMM slack for ``n'`` train samples."""
    root = np.sqrt(n_train)
    return float((root - 1.0) / root)


def _per_sample(data: PartitionedData, scale=1.0) -> np.ndarray:
    # weight_i / n_i repeated over the samples of block i
    return np.concatenate([np.full(n, scale * w / n) for w, n in zip(data.weights, data.sizes)])


def assemble(train: PartitionedData, test: PartitionedData, kernel: KernelConfig,
             B: float = 1000.0, eps: float | None = None) -> GkmmProblem:
    """Build ``(P, q, xi)`` for the given train and test partitions.

    ``eps=None`` uses :func:`default_eps` on the total train size. Raises
    :class:`InfeasibleProblem` when even ``theta = B`` everywhere cannot reach
    ``xi' theta >= 1 - eps``.
    """
    if train.dim != test.dim:
        raise DimensionMismatch(f"train has {train.dim} features, test has {test.dim}")
    if not B > 0:
        raise ValueError(f"B must be positive, got {B}")
    if eps is None:
        eps = default_eps(train.total)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    kernel = kernel.resolved(train.dim)

    basis = build_basis(test)
    X_train = train.stacked()
    n_max = max(train.sizes)

    A = gram(X_train, basis, kernel)
    # s[t] = n'_max gamma_j / n'_j for a sample t of train block j
    s = _per_sample(train, scale=n_max)
    SA = s[:, None] * A
    P = 0.5 * (SA.T @ (gram(X_train, X_train, kernel) @ SA))
    P = 0.5 * (P + P.T)
    u = _per_sample(test)
    q = n_max * (SA.T @ (A @ u))
    xi = A.T @ _per_sample(train)

    if B * xi.sum() < 1.0 - eps:
        raise InfeasibleProblem(
            f"B * sum(xi) = {B * xi.sum():.6g} < 1 - eps = {1.0 - eps:.6g}; the mean constraint is unreachable")
    basis = basis.copy()
    for arr in (P, q, xi, basis):
        arr.setflags(write=False)
    return GkmmProblem(P=P, q=q, xi=xi, bound_B=float(B), eps=float(eps), basis=basis, kernel=kernel)


def empirical_loss(problem: GkmmProblem, theta) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != problem.q.shape:
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected {problem.q.shape}")
    return float(theta @ (problem.P @ theta) - problem.q @ theta)


@dataclass
class BlockCoefficients:
    """Per-block pieces of the quadratic program, keyed by block indices.

    ``h_blocks[(i, j)]`` pairs test block ``i`` with train block ``j``;
    ``H_blocks[(j, k)]`` pairs train blocks; ``A_blocks[j]`` is the basis
    evaluated on train block ``j``.
    """

    n_prime_max: int
    h_blocks: dict
    H_blocks: dict
    A_blocks: dict

    def reduce(self):
        """``(P, q)`` summed block by block in index order."""
        b = next(iter(self.A_blocks.values())).shape[1]
        P = np.zeros((b, b))
        q = np.zeros(b)
        for (j, k), H in sorted(self.H_blocks.items()):
            P += self.A_blocks[j].T @ H @ self.A_blocks[k]
        for (i, j), h in sorted(self.h_blocks.items()):
            q += self.A_blocks[j].T @ h
        return 0.5 * (P + P.T), q


def block_coefficients(train: PartitionedData, test: PartitionedData,
                       kernel: KernelConfig) -> BlockCoefficients:
    """Block-by-block form of the same program, for inspection and cross-checks."""
    if train.dim != test.dim:
        raise DimensionMismatch(f"train has {train.dim} features, test has {test.dim}")
    kernel = kernel.resolved(train.dim)
    basis = build_basis(test)
    n_max = max(train.sizes)
    A = {j: gram(Xj, basis, kernel) for j, Xj in enumerate(train.blocks)}
    H = {}
    for j, (Xj, gj, nj) in enumerate(zip(train.blocks, train.weights, train.sizes)):
        for k, (Xk, gk, nk) in enumerate(zip(train.blocks, train.weights, train.sizes)):
            H[(j, k)] = n_max ** 2 / (nj * nk) * (gj * gk / 2.0) * gram(Xj, Xk, kernel)
    h = {}
    for i, (Xi, wi, ni) in enumerate(zip(test.blocks, test.weights, test.sizes)):
        for j, (Xj, gj, nj) in enumerate(zip(train.blocks, train.weights, train.sizes)):
            h[(i, j)] = n_max ** 2 / (ni * nj) * gj * wi * gram(Xj, Xi, kernel).sum(axis=1)
    return BlockCoefficients(n_prime_max=n_max, h_blocks=h, H_blocks=H, A_blocks=A)
