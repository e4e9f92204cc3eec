"""Density ratio estimators: generalized KMM plus the KMM and RuLSIF baselines."""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import assemble, default_eps, empirical_loss
from .core import DensityRatioModel, GkmmProblem, KernelConfig, KernelFamily, PartitionedData, Solution
from .errors import DimensionMismatch, GkmmError, SingularSystem
from .kernels import _as_matrix, gram
from .solver import FeasibleSet, SolverSettings, solve, solve_qp

logger = logging.getLogger(__name__)

MODEL_SCHEMA = "gkmm-model/1"


@dataclass
class FitReport:
    model: DensityRatioModel
    train_weights: list
    solution: Solution
    loss_uniform: float
    loss_fitted: float
    problem: GkmmProblem


def evaluate_ratio(model: DensityRatioModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.basis.shape[1]:
        raise DimensionMismatch(f"model expects {model.basis.shape[1]} features, got {X.shape[1]}")
    return gram(X, model.basis, model.kernel) @ model.theta


def uniform_reference(problem: GkmmProblem) -> np.ndarray:
    """Constant theta meeting the mean constraint, clamped to the box.

    Falls back to the projection of that constant vector when clamping breaks
    the slab.
    """
    feasible = FeasibleSet(problem.xi, problem.bound_B, problem.eps)
    c = 1.0 / problem.xi.sum()
    theta = np.clip(np.full(problem.size, c), 0.0, problem.bound_B)
    if not feasible.contains(theta):
        theta = feasible.project(np.full(problem.size, c))
    return theta


def fit_gkmm(train: PartitionedData, test: PartitionedData, kernel: KernelConfig | None = None,
             B: float = 1000.0, eps: float | None = None,
             settings: SolverSettings | None = None) -> FitReport:
    """Fit the generalized KMM ratio between the test and train mixtures.

    With a single train block this is the multi-test loss; with a single
    test block the multi-train mixture loss. The returned ``train_weights``
    hold the fitted ratio at every train sample, one array per train block.
    """
    kernel = kernel or KernelConfig()
    problem = assemble(train, test, kernel, B=B, eps=eps)
    sol = solve(problem, settings)
    model = DensityRatioModel(theta=sol.theta, basis=problem.basis, kernel=problem.kernel)
    weights = [evaluate_ratio(model, block) for block in train.blocks]
    loss_uniform = empirical_loss(problem, uniform_reference(problem))
    return FitReport(model=model, train_weights=weights, solution=sol,
                     loss_uniform=loss_uniform, loss_fitted=sol.objective, problem=problem)


def fit_classical_kmm(train, test, kernel: KernelConfig | None = None, B: float = 1000.0,
                      eps: float | None = None, settings: SolverSettings | None = None) -> np.ndarray:
    """Classical KMM weights at the train samples.

    Solves ``min 1/2 r'Hr - h'r`` with ``H = K(train, train)`` and
    ``h_j = n'/n sum_i K(x'_j, x_i)``, ``0 <= r <= B`` and
    ``|mean(r) - 1| <= eps``.
    """
    Xtr, Xte = _as_matrix(train), _as_matrix(test)
    if Xtr.shape[1] != Xte.shape[1]:
        raise DimensionMismatch(f"train has {Xtr.shape[1]} features, test has {Xte.shape[1]}")
    kernel = (kernel or KernelConfig()).resolved(Xtr.shape[1])
    n_tr, n_te = Xtr.shape[0], Xte.shape[0]
    if eps is None:
        eps = default_eps(n_tr)
    H = gram(Xtr, Xtr, kernel)
    h = (n_tr / n_te) * gram(Xtr, Xte, kernel).sum(axis=1)
    sol = solve_qp(0.5 * H, h, np.full(n_tr, 1.0 / n_tr), B, eps, settings)
    logger.info("classical KMM: %s after %d iterations", sol.status.value, sol.iterations)
    return sol.theta


@dataclass(frozen=True)
class RulsifModel:
    w: np.ndarray
    lam: float
    alpha: float
    basis: np.ndarray
    kernel: KernelConfig

    def __call__(self, X) -> np.ndarray:
        return gram(_as_matrix(X), self.basis, self.kernel) @ self.w


def rulsif_system(train, test, kernel: KernelConfig | None, alpha: float):
    """``(H, h)`` of the RuLSIF quadratic with kernels centred on the test samples."""
    Xtr, Xte = _as_matrix(train), _as_matrix(test)
    if Xtr.shape[1] != Xte.shape[1]:
        raise DimensionMismatch(f"train has {Xtr.shape[1]} features, test has {Xte.shape[1]}")
    kernel = (kernel or KernelConfig()).resolved(Xtr.shape[1])
    K_te = gram(Xte, Xte, kernel)
    K_tr = gram(Xtr, Xte, kernel)
    H_te = K_te.T @ K_te / Xte.shape[0]
    H_tr = K_tr.T @ K_tr / Xtr.shape[0]
    H = alpha * H_te + (1.0 - alpha) * H_tr
    h = K_te.mean(axis=0)
    return H, h


def fit_rulsif(train, test, kernel: KernelConfig | None = None, alpha: float = 0.0,
               lam: float = 1e-3) -> RulsifModel:
    """Closed-form RuLSIF: solve ``(H + lam I) w = h``."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    Xte = _as_matrix(test)
    kernel = (kernel or KernelConfig()).resolved(Xte.shape[1])
    H, h = rulsif_system(train, Xte, kernel, alpha)
    M = H + lam * np.eye(H.shape[0])
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            w = scipy.linalg.solve(M, h, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularSystem(f"RuLSIF system is singular or ill-conditioned at lambda={lam}: {exc}") from exc
    resid = np.linalg.norm(M @ w - h) / max(np.linalg.norm(h), np.finfo(float).tiny)
    if resid > 1e-8:
        raise SingularSystem(f"RuLSIF solve residual {resid:.3g} exceeds 1e-8")
    return RulsifModel(w=w, lam=float(lam), alpha=float(alpha), basis=Xte.copy(), kernel=kernel)


def model_to_dict(model: DensityRatioModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "kernel": {"family": model.kernel.family.value, "sigma": model.kernel.sigma},
        "theta": [float(v) for v in model.theta],
        "basis": [[float(v) for v in row] for row in model.basis],
    }


def model_from_dict(doc: dict) -> DensityRatioModel:
    if doc.get("schema") != MODEL_SCHEMA:
        raise GkmmError(f"unsupported model schema {doc.get('schema')!r}")
    kernel = KernelConfig(KernelFamily(doc["kernel"]["family"]), doc["kernel"]["sigma"])
    theta = np.array(doc["theta"], dtype=float)
    basis = np.array(doc["basis"], dtype=float).reshape(len(theta), -1)
    return DensityRatioModel(theta=theta, basis=basis, kernel=kernel)


def save_model(model: DensityRatioModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> DensityRatioModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
