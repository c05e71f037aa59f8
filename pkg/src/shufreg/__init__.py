"""Linear regression when labels are shuffled by an unknown permutation.

The package estimates the weights of a noisy linear model from labels whose
order is unknown within each replication, using order-invariant losses
(sorted least squares, moment matching, distribution distances), closed-form
moment estimators in one and two dimensions, projection hybrids, and a
multi-start gradient descent driver. A benchmark harness reproduces the
characteristic behaviors (consistency curves, regime maps, replication
curves, noise adjustment, regularization, negative controls) at desk scale.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    EvalReport,
    Normalization,
    normalize_minmax,
    ols_fit,
    partition_replications,
    read_dataset_csv,
    relative_error,
    shuffle_within_replications,
    write_dataset_csv,
)
from .errors import (
    CsvFormatError,
    DegenerateMeanError,
    EstimationError,
    NoRealSolutionError,
    NumericalError,
    OptimizationFailedError,
    SingularSystemError,
)
from .estimators import (
    CandidateSet,
    EstimatorChoice,
    auto_kind,
    estimate,
    projection_estimate,
    sm_d1,
    sm_d2_analytic,
)
from .losses import (
    LossSpec,
    MomentSummary,
    build_objective,
    emd_loss,
    gaussian_noise_moments,
    ks_loss,
    ls_loss,
    moment_weight,
    sample_moment,
    sm_loss,
    small_d_loss,
)
from .optim import FitConfig, FitResult, multistart_descent, numerical_gradient
from .rng import derive_seed, spawn_rng
from .synth import (
    GaussianDesignSpec,
    NoiseSpec,
    Scenario,
    apply_model,
    generate_design,
    run_scenario,
    sample_permutation,
)
from .theory import PopulationSpec, ls_limit_d1, sm_d1_mse, sorted_cross_moment_limit

__all__ = [
    "__version__",
    "Dataset",
    "EvalReport",
    "Normalization",
    "normalize_minmax",
    "ols_fit",
    "partition_replications",
    "read_dataset_csv",
    "relative_error",
    "shuffle_within_replications",
    "write_dataset_csv",
    "CsvFormatError",
    "DegenerateMeanError",
    "EstimationError",
    "NoRealSolutionError",
    "NumericalError",
    "OptimizationFailedError",
    "SingularSystemError",
    "CandidateSet",
    "EstimatorChoice",
    "auto_kind",
    "estimate",
    "projection_estimate",
    "sm_d1",
    "sm_d2_analytic",
    "LossSpec",
    "MomentSummary",
    "build_objective",
    "emd_loss",
    "gaussian_noise_moments",
    "ks_loss",
    "ls_loss",
    "moment_weight",
    "sample_moment",
    "sm_loss",
    "small_d_loss",
    "FitConfig",
    "FitResult",
    "multistart_descent",
    "numerical_gradient",
    "derive_seed",
    "spawn_rng",
    "GaussianDesignSpec",
    "NoiseSpec",
    "Scenario",
    "apply_model",
    "generate_design",
    "run_scenario",
    "sample_permutation",
    "PopulationSpec",
    "ls_limit_d1",
    "sm_d1_mse",
    "sorted_cross_moment_limit",
]
