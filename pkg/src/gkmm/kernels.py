"""Kernel functions and Gram matrices.

Both kernels are ``exp(-sigma * dist(x, y))`` with the squared Euclidean
distance (RBF) or the L1 distance (Laplacian). Values lie in (0, 1], up to
underflow to 0 for very distant points.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .core import KernelConfig, KernelFamily
from .errors import DimensionMismatch, NonPositiveSigma

_METRIC = {KernelFamily.RBF: "sqeuclidean", KernelFamily.LAPLACIAN: "cityblock"}


def resolve_sigma(cfg: KernelConfig, d: int) -> float:
    """Explicit sigma unchanged, default sigma becomes ``1/d``."""
    if d < 1:
        raise DimensionMismatch(f"feature count must be >= 1, got {d}")
    if cfg.sigma is None:
        return 1.0 / d
    if not cfg.sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {cfg.sigma!r}")
    return float(cfg.sigma)


def kernel_eval(x, y, cfg: KernelConfig) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionMismatch(f"cannot compare points of shapes {x.shape} and {y.shape}")
    sigma = resolve_sigma(cfg, x.shape[0])
    diff = x - y
    if cfg.family is KernelFamily.RBF:
        dist = float(np.sum(diff * diff))
    else:
        dist = float(np.sum(np.abs(diff)))
    return float(np.exp(-sigma * dist))


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D sample matrix, got shape {X.shape}")
    return X


def gram(X, Y, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix ``G[i, j] = K(X[i], Y[j])``.

    Distances are accumulated directly from coordinate differences, so
    identical rows give exactly 1 and ``gram(X, Y) == gram(Y, X).T`` holds
    bitwise.
    """
    X, Y = _as_matrix(X), _as_matrix(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"column counts differ: {X.shape[1]} vs {Y.shape[1]}")
    sigma = resolve_sigma(cfg, X.shape[1])
    D = cdist(X, Y, metric=_METRIC[cfg.family])
    return np.exp(-sigma * D)
