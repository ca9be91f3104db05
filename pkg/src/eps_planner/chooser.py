"""Accuracy-first budget selection: one training run, then invert the line.

Train once at a measuring budget, measure the utility and its slope in
eps, and read the budget expected to reach a requested utility off the
resulting affine predictor.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

from .errors import FlatSlopeError, UnreachableUtilityError
from .model import (
    Dataset,
    ExtrapolationLine,
    LossSpec,
    NoiseDraw,
    PrivacyBudget,
    PrivateModel,
    SensitivityReport,
)
from .perturbation import materialize
from .sensitivity import ErrorScale, dtheta_deps, error_scale, utility_slope
from .trainer import TrainConfig, train, utility

SLOPE_TOL = 1e-12

# warn when the chosen budget leaves the measuring budget's order of magnitude
MAGNITUDE_GAP = 10.0


class MagnitudeGapWarning(UserWarning):
    """Chosen and measuring budgets differ by more than one order of magnitude."""


def choose_epsilon(line: ExtrapolationLine, expected_utility: float) -> float:
    """Invert the affine predictor: the budget whose predicted utility is
    `expected_utility`.

    Raises FlatSlopeError when the slope is numerically zero and
    UnreachableUtilityError when the inversion lands at a nonpositive
    budget.
    """
    if abs(line.slope) <= SLOPE_TOL:
        raise FlatSlopeError(
            f"utility locally insensitive to eps (slope {line.slope:.3e})"
        )
    eps_hat = (expected_utility - line.base_utility) / line.slope + line.measure_eps
    if not eps_hat > 0:
        raise UnreachableUtilityError(
            f"expected utility {expected_utility} unreachable: "
            f"inversion gives eps {eps_hat:.6g} <= 0"
        )
    return eps_hat


@dataclass(frozen=True)
class PlanResult:
    """Everything one planning run produces."""

    model: PrivateModel
    report: SensitivityReport
    line: ExtrapolationLine
    chosen_eps: float
    scale: ErrorScale
    magnitude_warning: bool


def plan(
    d: Dataset,
    spec: LossSpec,
    cfg: TrainConfig,
    measure_eps: float,
    delta: float,
    expected_utility: float,
    seed: int,
    damping: float = 0.0,
) -> PlanResult:
    """Run the selection procedure end to end with exactly one training.

    Train at the measuring budget, compute the utility slope there by the
    implicit-differentiation solve, invert the affine predictor at the
    requested utility, and attach the Taylor-remainder scale for the
    resulting budget pair. Deploying at the chosen budget should use a
    fresh noise draw (privacy calibration is per release); this function
    never trains a second time.
    """
    budget = PrivacyBudget(epsilon=measure_eps, delta=delta)
    noise = NoiseDraw.generate(d.p, seed)
    model = train(d, spec, cfg, budget, noise)

    pert = materialize(noise, spec.zeta, delta, measure_eps, spec.lambda_hess)
    report = dtheta_deps(
        model,
        d,
        spec,
        pert,
        damping=damping,
        allow_nonstationary=(cfg.solver_mode == "sgd_repro"),
    )
    slope = utility_slope(model, d, spec, report)
    report = replace(report, dF_deps=slope)

    line = ExtrapolationLine(
        measure_eps=measure_eps,
        base_utility=utility(model.theta, d, spec),
        slope=slope,
    )
    eps_hat = choose_epsilon(line, expected_utility)
    scale = error_scale(measure_eps, eps_hat, d.n)

    ratio = max(eps_hat, measure_eps) / min(eps_hat, measure_eps)
    gap = ratio > MAGNITUDE_GAP
    if gap:
        warnings.warn(
            f"chosen eps {eps_hat:.4g} and measuring eps {measure_eps:.4g} differ "
            f"by more than an order of magnitude; the first-order estimate may be "
            f"unreliable (remainder scale {scale.scale:.3g})",
            MagnitudeGapWarning,
            stacklevel=2,
        )
    return PlanResult(
        model=model,
        report=report,
        line=line,
        chosen_eps=eps_hat,
        scale=scale,
        magnitude_warning=gap,
    )
