"""Objective-perturbation private ERM with single-run budget planning.

Train once at a measuring budget, differentiate the perturbed objective's
minimizer in the budget, and extrapolate the model's utility to any other
budget -- or invert the relationship to pick the budget matching a
utility requirement.
"""

from .chooser import MagnitudeGapWarning, PlanResult, choose_epsilon, plan
from .data import gen_synthetic, load_dataset, write_csv_dataset
from .errors import (
    DataError,
    EpsPlannerError,
    FlatSlopeError,
    NoiseMismatchError,
    NumericalError,
    UnreachableUtilityError,
    UsageError,
)
from .experiments import (
    ExperimentConfig,
    SyntheticSpec,
    experiment_estimate_vs_actual,
    experiment_measuring_sweep,
    experiment_sample_sweep,
    oracle_compare,
)
from .losses import (
    LossEval,
    aggregate,
    default_bounds,
    loss_eval,
    loss_value,
    make_loss_spec,
    smooth_hinge,
)
from .model import (
    Dataset,
    Example,
    ExtrapolationLine,
    LossSpec,
    NoiseDraw,
    PrivacyBudget,
    PrivateModel,
    SensitivityReport,
    validate_dataset,
)
from .perturbation import (
    PerturbationAtEps,
    delta_coeff,
    delta_coeff_prime,
    materialize,
    noise_sigma,
    noise_sigma_prime,
)
from .sensitivity import (
    ErrorScale,
    assemble_w,
    dtheta_deps,
    error_scale,
    extrapolate,
    utility_slope,
    worst_case_bound,
)
from .trainer import (
    TrainConfig,
    classification_error_rate,
    perturbed_objective,
    train,
    utility,
)

__version__ = "0.1.0"

__all__ = [
    "MagnitudeGapWarning",
    "PlanResult",
    "choose_epsilon",
    "plan",
    "gen_synthetic",
    "load_dataset",
    "write_csv_dataset",
    "DataError",
    "EpsPlannerError",
    "FlatSlopeError",
    "NoiseMismatchError",
    "NumericalError",
    "UnreachableUtilityError",
    "UsageError",
    "ExperimentConfig",
    "SyntheticSpec",
    "experiment_estimate_vs_actual",
    "experiment_measuring_sweep",
    "experiment_sample_sweep",
    "oracle_compare",
    "LossEval",
    "aggregate",
    "default_bounds",
    "loss_eval",
    "loss_value",
    "make_loss_spec",
    "smooth_hinge",
    "Dataset",
    "Example",
    "ExtrapolationLine",
    "LossSpec",
    "NoiseDraw",
    "PrivacyBudget",
    "PrivateModel",
    "SensitivityReport",
    "validate_dataset",
    "PerturbationAtEps",
    "delta_coeff",
    "delta_coeff_prime",
    "materialize",
    "noise_sigma",
    "noise_sigma_prime",
    "ErrorScale",
    "assemble_w",
    "dtheta_deps",
    "error_scale",
    "extrapolate",
    "utility_slope",
    "worst_case_bound",
    "TrainConfig",
    "classification_error_rate",
    "perturbed_objective",
    "train",
    "utility",
]
