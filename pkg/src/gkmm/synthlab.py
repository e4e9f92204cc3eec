"""Synthetic covariate-shift experiments.

Gaussian train/test blocks, a noisy sinc regression target, and a harness that
fits generalized KMM weights and compares weighted against unweighted linear
regression on the test set.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Union

import numpy as np

from .core import KernelConfig, PartitionedData, alpha_relative_config, size_proportional_weights
from .errors import AllZeroWeights, ConfigError, DegenerateDesign, DimensionMismatch
from .estimators import FitReport, fit_classical_kmm, fit_gkmm
from .solver import SolverSettings

logger = logging.getLogger(__name__)

SCENARIOS = ("clusters", "multi-train", "multi-test", "multi-both")


class RngStream:
    """Seeded random stream.

    Integers come from numpy's PCG64 bit generator (128-bit LCG state with an
    XSL-RR output permutation). Uniforms are ``k * 2**-53`` from the top 53
    bits of each draw and Gaussians use Box-Muller on pairs of uniforms, so
    a seed fixes every value independently of numpy's own samplers.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` uniforms on [0, 1)."""
        raw = self._bits.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, n: int) -> np.ndarray:
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[:m]))  # 1 - u lies in (0, 1]
        angle = 2.0 * np.pi * u[m:]
        return np.concatenate([r * np.cos(angle), r * np.sin(angle)])[:n]


def gen_gaussian_block(mean, stdev: float, n: int, rng: RngStream) -> np.ndarray:
    """``n`` isotropic Gaussian rows centred at ``mean``."""
    if not stdev > 0:
        raise ValueError(f"stdev must be positive, got {stdev}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    d = mean.shape[0]
    return mean + stdev * rng.normal(n * d).reshape(n, d)


def sinc_target(X, noise_stdev: float, rng: Optional[RngStream] = None) -> np.ndarray:
    """Normalized sinc ``sin(pi x) / (pi x)`` plus Gaussian noise."""
    x = np.asarray(X, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise DimensionMismatch(f"sinc target needs 1-D inputs, got {x.shape[1]} features")
        x = x[:, 0]
    y = np.sinc(x)
    if noise_stdev > 0:
        y = y + noise_stdev * rng.normal(y.shape[0])
    return y


def weighted_regression_mae(train_X, train_y, test_X, test_y, weights=None) -> float:
    """Test MAE of a weighted least-squares line fitted on the train data.

    Weights are rescaled by their maximum first; the fit is invariant to that
    and equal weights then reproduce the unweighted fit exactly.
    """
    Xtr = np.asarray(train_X, dtype=float).reshape(len(train_y), -1)
    Xte = np.asarray(test_X, dtype=float).reshape(len(test_y), -1)
    ytr = np.asarray(train_y, dtype=float)
    if weights is None:
        w = np.ones(len(ytr))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != ytr.shape:
            raise DimensionMismatch(f"{w.size} weights for {ytr.size} train samples")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if not np.any(w > 0):
            raise AllZeroWeights("all sample weights are zero")
        w = w / w.max()
    design = np.column_stack([Xtr, np.ones(len(ytr))])
    root = np.sqrt(w)
    coef, _, rank, _ = np.linalg.lstsq(design * root[:, None], ytr * root, rcond=None)
    if rank < design.shape[1]:
        raise DegenerateDesign("the weighted train inputs do not determine a line")
    pred = np.column_stack([Xte, np.ones(len(Xte))]) @ coef
    return float(np.mean(np.abs(np.asarray(test_y, dtype=float) - pred)))


@dataclass
class ExperimentConfig:
    """One synthetic experiment.

    ``alpha`` selects the relative-ratio variant: ``None`` for the plain
    ratio, a number for a fixed alpha (``gamma`` then sums to ``1 - alpha``),
    or ``"auto"`` to weight train blocks and the appended test pool by their
    sizes. ``gamma``/``omega`` default to size-proportional weights.
    """

    scenario: str
    train_means: list
    train_stdevs: list
    train_sizes: list
    test_means: list
    test_stdevs: list
    test_sizes: list
    gamma: Optional[list] = None
    omega: Optional[list] = None
    alpha: Union[None, float, str] = None
    kernel: str = "rbf"
    sigma: Optional[float] = None
    B: float = 1000.0
    eps: Optional[float] = None
    seed: int = 0
    noise_stdev: float = 0.1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        for side in ("train", "test"):
            lens = {len(getattr(self, f"{side}_{k}")) for k in ("means", "stdevs", "sizes")}
            if len(lens) != 1:
                raise ConfigError(f"{side} means, stdevs and sizes differ in length")
        if isinstance(self.alpha, str) and self.alpha != "auto":
            raise ConfigError(f"alpha must be a number, null or 'auto', got {self.alpha!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def default_config(scenario: str, seed: int = 0) -> ExperimentConfig:
    """Default settings for each synthetic scenario.

    For the clusters scenario the defaults place the train clusters
    left and right of the origin and the test clusters above and below it.
    """
    multi_train = dict(train_means=[-0.5, 0.5, 1.5], train_stdevs=[0.1, 0.1, 0.1],
                       train_sizes=[200, 150, 100])
    multi_test = dict(test_means=[-0.5, 1.5], test_stdevs=[0.15, 0.15], test_sizes=[100, 100])
    if scenario == "clusters":
        return ExperimentConfig(
            scenario, train_means=[[-2.0, 0.0], [2.0, 0.0]], train_stdevs=[0.6, 0.6],
            train_sizes=[200, 1000], test_means=[[0.0, 2.0], [0.0, -2.0]],
            test_stdevs=[0.9, 0.6], test_sizes=[1000, 300], sigma=1.0, seed=seed)
    if scenario == "multi-train":
        return ExperimentConfig(scenario, **multi_train, test_means=[1.0], test_stdevs=[0.4],
                                test_sizes=[30], sigma=0.1, seed=seed)
    if scenario == "multi-test":
        return ExperimentConfig(scenario, train_means=[1.0], train_stdevs=[0.25], train_sizes=[300],
                                **multi_test, sigma=100.0, seed=seed)
    if scenario == "multi-both":
        return ExperimentConfig(scenario, **multi_train, **multi_test, sigma=10.0, seed=seed)
    raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def _blocks(means, stdevs, sizes, rng):
    return [gen_gaussian_block(m, s, int(n), rng) for m, s, n in zip(means, stdevs, sizes)]


def gen_clusters(config: ExperimentConfig, rng: RngStream):
    """2-D blob clusters: train blocks first, then test blocks, from one stream."""
    train = _blocks(config.train_means, config.train_stdevs, config.train_sizes, rng)
    test = _blocks(config.test_means, config.test_stdevs, config.test_sizes, rng)
    return (PartitionedData.from_blocks(train, config.gamma),
            PartitionedData.from_blocks(test, config.omega))


def train_side(config: ExperimentConfig, train_blocks, test: PartitionedData) -> PartitionedData:
    """Train-side partitions, with the test pool appended in the alpha-relative variants."""
    if config.alpha is None:
        return PartitionedData.from_blocks(train_blocks, config.gamma)
    pool = test.stacked()
    if config.alpha == "auto":
        w = size_proportional_weights(list(train_blocks) + [pool])
        return alpha_relative_config(train_blocks, w[:-1], pool, float(w[-1]))
    alpha = float(config.alpha)
    gamma = config.gamma
    if gamma is None:
        gamma = (1.0 - alpha) * size_proportional_weights(train_blocks)
    return alpha_relative_config(train_blocks, gamma, pool, alpha)


@dataclass
class ScenarioResult:
    config: ExperimentConfig
    train_blocks: list
    test: PartitionedData
    weights: list
    fit: FitReport
    mae_weighted: Optional[float] = None
    mae_unweighted: Optional[float] = None
    kmm_weights: Optional[list] = None
    targets: dict = field(default_factory=dict, repr=False)

    def partition_summaries(self) -> list:
        total = float(sum(w.sum() for w in self.weights))
        out = []
        for i, (X, w) in enumerate(zip(self.train_blocks, self.weights)):
            out.append({
                "partition": i,
                "size": int(X.shape[0]),
                "weight_mean": float(w.mean()),
                "weight_median": float(np.median(w)),
                "weight_max": float(w.max()),
                "weight_share": float(w.sum() / total) if total > 0 else 0.0,
                "weighted_mean_x": [float(v) for v in (w @ X) / w.sum()] if w.sum() > 0 else None,
            })
        return out

    def summary(self, echo: Optional[dict] = None) -> dict:
        return {
            "schema": "gkmm-summary/1",
            "scenario": self.config.scenario,
            "config": echo if echo is not None else self.config.to_dict(),
            "mae_weighted": self.mae_weighted,
            "mae_unweighted": self.mae_unweighted,
            "loss_uniform": self.fit.loss_uniform,
            "loss_fitted": self.fit.loss_fitted,
            "eps": self.fit.problem.eps,
            "sigma": self.fit.problem.kernel.sigma,
            "solver": self.fit.solution.stats(),
            "partitions": self.partition_summaries(),
        }

    def write(self, outdir, plot: bool = False, echo: Optional[dict] = None) -> list:
        """Write ``weights.csv`` and ``summary.json`` (plus SVG plots) into ``outdir``."""
        os.makedirs(outdir, exist_ok=True)
        paths = [os.path.join(outdir, "weights.csv"), os.path.join(outdir, "summary.json")]
        extra = {"kmm_weight": self.kmm_weights} if self.kmm_weights is not None else None
        write_weights_csv(paths[0], self.train_blocks, self.weights, extra)
        with open(paths[1], "w") as fh:
            json.dump(self.summary(echo), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if plot:
            from .plotting import plot_scenario

            paths += plot_scenario(self, outdir)
        return paths


def write_weights_csv(path, blocks, weights, extra: Optional[dict] = None) -> None:
    """One row per train sample: partition, index, coordinates, weight(s)."""
    d = blocks[0].shape[1]
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["partition", "index"] + [f"x{k}" for k in range(d)] + ["weight"] + list(extra))
        for p, (X, wts) in enumerate(zip(blocks, weights)):
            for i in range(X.shape[0]):
                row = [p, i] + [f"{v:.17g}" for v in X[i]] + [f"{wts[i]:.9g}"]
                row += [f"{col[p][i]:.9g}" for col in extra.values()]
                w.writerow(row)


def run_scenario(config: ExperimentConfig, settings: Optional[SolverSettings] = None) -> ScenarioResult:
    """Generate data, fit the ratio and, for 1-D scenarios, compare regressions.

    The clusters scenario has no regression target; it adds classical KMM
    weights on the pooled data for comparison instead.
    """
    rng = RngStream(config.seed)
    train_blocks = _blocks(config.train_means, config.train_stdevs, config.train_sizes, rng)
    test_blocks = _blocks(config.test_means, config.test_stdevs, config.test_sizes, rng)
    test = PartitionedData.from_blocks(test_blocks, config.omega)
    train = train_side(config, train_blocks, test)
    kernel = KernelConfig(config.kernel, config.sigma)
    fit = fit_gkmm(train, test, kernel, B=config.B, eps=config.eps, settings=settings)
    weights = fit.train_weights[:len(train_blocks)]
    result = ScenarioResult(config=config, train_blocks=[train.blocks[i] for i in range(len(train_blocks))],
                            test=test, weights=weights, fit=fit)

    if config.scenario == "clusters":
        pooled = np.vstack(train_blocks)
        kmm = fit_classical_kmm(pooled, test.stacked(), kernel, B=config.B, eps=config.eps,
                                settings=settings)
        result.kmm_weights = np.split(kmm, np.cumsum(config.train_sizes)[:-1])
        return result

    Xtr, Xte = np.vstack(train_blocks), test.stacked()
    ytr = sinc_target(Xtr, config.noise_stdev, rng)
    yte = sinc_target(Xte, config.noise_stdev, rng)
    result.targets = {"train": ytr, "test": yte}
    result.mae_unweighted = weighted_regression_mae(Xtr, ytr, Xte, yte)
    result.mae_weighted = weighted_regression_mae(Xtr, ytr, Xte, yte, np.concatenate(weights))
    logger.info("%s: MAE weighted %.4f, unweighted %.4f", config.scenario,
                result.mae_weighted, result.mae_unweighted)
    return result
