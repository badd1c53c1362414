"""Online parameter estimation for simulated plants via GP surrogates
and expected-improvement search."""

from bopest.acquisition import (
    AcquisitionConfig,
    BoState,
    expected_improvement,
    expected_improvement_batch,
    minimize_posterior_mean,
    propose_next,
    update_incumbent,
)
from bopest.baselines import BaselineConfig, BaselineResult, solve_baseline
from bopest.estimator import (
    EpisodeSummary,
    EstimationTrace,
    EstimatorConfig,
    PendulumSystem,
    QuadrotorSystem,
    ResidualObjective,
    residual,
    supervise,
)
from bopest.gp import (
    Dataset,
    Domain,
    GpModel,
    KernelHyperparams,
    NumericalInstabilityError,
    build_gram,
    fit_hyperparams,
    kernel_eval,
    kernel_matrix,
    log_marginal_likelihood,
)
from bopest.harness import (
    ConfigError,
    ExperimentConfig,
    MetricsReport,
    compute_mse,
    load_config,
    run_demo_1d,
    run_scenario,
    table_one_report,
)

__all__ = [
    "AcquisitionConfig",
    "BaselineConfig",
    "BaselineResult",
    "BoState",
    "ConfigError",
    "Dataset",
    "Domain",
    "EpisodeSummary",
    "EstimationTrace",
    "EstimatorConfig",
    "ExperimentConfig",
    "GpModel",
    "KernelHyperparams",
    "MetricsReport",
    "NumericalInstabilityError",
    "PendulumSystem",
    "QuadrotorSystem",
    "ResidualObjective",
    "build_gram",
    "compute_mse",
    "expected_improvement",
    "expected_improvement_batch",
    "fit_hyperparams",
    "kernel_eval",
    "kernel_matrix",
    "load_config",
    "log_marginal_likelihood",
    "minimize_posterior_mean",
    "propose_next",
    "residual",
    "run_demo_1d",
    "run_scenario",
    "solve_baseline",
    "supervise",
    "table_one_report",
    "update_incumbent",
]

__version__ = "0.1.0"
