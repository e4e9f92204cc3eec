"""Generalized kernel mean matching for partitioned train and test data."""
from .assembly import assemble, block_coefficients, default_eps, empirical_loss
from .core import (DensityRatioModel, GkmmProblem, KernelConfig, KernelFamily, PartitionedData,
                   Solution, Status, alpha_relative_config, size_proportional_weights,
                   validate_partitions)
from .errors import (AllZeroWeights, ConfigError, DegenerateDesign, DimensionMismatch, EmptyBlock,
                     GkmmError, InfeasibleProblem, NonPositiveSigma, SingularSystem, WeightSumError)
from .estimators import (evaluate_ratio, fit_classical_kmm, fit_gkmm, fit_rulsif, load_model,
                         save_model)
from .kernels import gram, kernel_eval
from .solver import FeasibleSet, SolverSettings, StepRule, project, solve, solve_qp
from .synthlab import ExperimentConfig, RngStream, default_config, run_scenario

__version__ = "0.1.0"
