"""Minimization of the perturbed objective.

The objective is L(theta, D) + (Lam/2n)||theta||^2 + (1/n) <b_eps, theta>
+ (Delta_eps/2n)||theta||^2. Two solver modes:

  exact     -- damped Newton with Armijo backtracking, run to a gradient
               norm tolerance. The objective is (Lam+Delta_eps)/n strongly
               convex, so the minimizer is unique and the downstream
               implicit-differentiation step is valid.
  sgd_repro -- exactly `sgd_iterations` full-gradient steps of fixed size
               from zero, mirroring the experimental protocol of the
               original evaluations. No convergence guarantee.

Training is deterministic given (dataset, spec, config, budget, seed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError
from .losses import aggregate, margin_values
from .model import Dataset, LossSpec, NoiseDraw, PrivacyBudget, PrivateModel
from .perturbation import PerturbationAtEps, materialize

# module-level counter used by callers to assert how many trainings ran
TRAIN_CALL_COUNT = 0


@dataclass(frozen=True)
class TrainConfig:
    """Solver settings; the sgd defaults reproduce the reference protocol."""

    reg_lambda: float = 0.01
    solver_mode: str = "exact"
    stationarity_tol: float = 1e-8
    sgd_iterations: int = 100
    sgd_learning_rate: float = 0.01
    max_exact_iterations: int = 200

    def __post_init__(self):
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be nonnegative")
        if self.solver_mode not in ("exact", "sgd_repro"):
            raise ValueError(f"unknown solver mode {self.solver_mode!r}")
        if not self.stationarity_tol > 0:
            raise ValueError("stationarity_tol must be positive")
        if not self.sgd_learning_rate > 0:
            raise ValueError("sgd_learning_rate must be positive")


def perturbed_objective(
    theta: np.ndarray,
    d: Dataset,
    spec: LossSpec,
    cfg: TrainConfig,
    pert: PerturbationAtEps,
) -> tuple[float, np.ndarray]:
    """Value and gradient of the perturbed training objective."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] != d.p or pert.b.shape[0] != d.p:
        raise ValueError("dimension mismatch between theta, dataset and perturbation")
    n = d.n
    L, gradL, _ = aggregate(spec, theta, d)
    ridge = cfg.reg_lambda + pert.delta_eps_coeff
    value = L + ridge / (2.0 * n) * float(theta @ theta) + float(pert.b @ theta) / n
    grad = gradL + (ridge * theta + pert.b) / n
    return value, grad


def _objective_parts(theta, d, spec, cfg, pert):
    n = d.n
    L, gradL, hessL = aggregate(spec, theta, d)
    ridge = cfg.reg_lambda + pert.delta_eps_coeff
    value = L + ridge / (2.0 * n) * float(theta @ theta) + float(pert.b @ theta) / n
    grad = gradL + (ridge * theta + pert.b) / n
    hess = hessL + (ridge / n) * np.eye(d.p)
    return value, grad, hess


def train(
    d: Dataset,
    spec: LossSpec,
    cfg: TrainConfig,
    budget: PrivacyBudget,
    noise: NoiseDraw,
    theta0: np.ndarray | None = None,
) -> PrivateModel:
    """Minimize the perturbed objective and return the trained model."""
    global TRAIN_CALL_COUNT
    TRAIN_CALL_COUNT += 1

    if noise.p != d.p:
        raise ValueError(f"noise draw has length {noise.p}, dataset has p={d.p}")
    pert = materialize(noise, spec.zeta, budget.delta, budget.epsilon, spec.lambda_hess)
    theta = np.zeros(d.p) if theta0 is None else np.array(theta0, dtype=np.float64)

    if cfg.solver_mode == "sgd_repro":
        theta, iters = _run_sgd(theta, d, spec, cfg, pert)
    else:
        theta, iters = _run_newton(theta, d, spec, cfg, pert)

    _, grad = perturbed_objective(theta, d, spec, cfg, pert)
    grad_norm = float(np.linalg.norm(grad))
    if not np.isfinite(grad_norm):
        raise NumericalError("non-finite gradient at solution")
    return PrivateModel(
        theta=theta,
        budget=budget,
        reg_lambda=cfg.reg_lambda,
        noise=noise,
        loss=spec,
        grad_norm_at_solution=grad_norm,
        solver_mode=cfg.solver_mode,
        iterations_used=iters,
    )


def _run_sgd(theta, d, spec, cfg, pert):
    n = d.n
    ridge = cfg.reg_lambda + pert.delta_eps_coeff
    lr = cfg.sgd_learning_rate
    for it in range(cfg.sgd_iterations):
        _, gradL, _ = aggregate(spec, theta, d)
        theta = theta - lr * (gradL + (ridge * theta + pert.b) / n)
        if not np.all(np.isfinite(theta)):
            raise NumericalError(f"non-finite iterate at sgd step {it + 1}")
    return theta, cfg.sgd_iterations


def _run_newton(theta, d, spec, cfg, pert):
    value, grad, hess = _objective_parts(theta, d, spec, cfg, pert)
    gnorm = float(np.linalg.norm(grad))
    steps_taken = 0
    for it in range(cfg.max_exact_iterations):
        if not np.isfinite(value) or not np.isfinite(gnorm):
            raise NumericalError(f"non-finite objective at exact-solver step {it}")
        if gnorm <= cfg.stationarity_tol:
            return theta, steps_taken
        step = _newton_step(hess, grad, d.p)
        slope = float(grad @ step)
        # Armijo backtracking on the objective value; once value differences
        # fall below float resolution, accept on gradient-norm progress with
        # an ulp-level value slack instead
        accepted = False
        t = 1.0
        slack = 8.0 * np.spacing(max(1.0, abs(value)))
        while t >= 1e-14:
            cand = theta + t * step
            cand_value, cand_grad, cand_hess = _objective_parts(cand, d, spec, cfg, pert)
            cand_gnorm = float(np.linalg.norm(cand_grad))
            armijo_ok = (
                cand_value <= value + 1e-4 * t * slope
                and (cand_value < value or cand_gnorm < gnorm)
            )
            flat_ok = cand_value <= value + slack and cand_gnorm < 0.9 * gnorm
            if np.isfinite(cand_value) and (armijo_ok or flat_ok):
                theta, value, grad, hess, gnorm = (
                    cand, cand_value, cand_grad, cand_hess, cand_gnorm,
                )
                accepted = True
                steps_taken += 1
                break
            t *= 0.5
        if not accepted:
            break  # no certifiable progress left at float resolution
    if gnorm <= cfg.stationarity_tol:
        return theta, steps_taken
    raise NumericalError(
        f"exact solver did not reach tolerance {cfg.stationarity_tol:.3e} "
        f"(gradient norm {gnorm:.3e})"
    )


def _newton_step(hess, grad, p):
    # ridge keeps hess positive definite; jitter covers borderline conditioning
    jitter = 0.0
    for _ in range(3):
        try:
            return cho_solve(cho_factor(hess + jitter * np.eye(p), lower=True), -grad)
        except np.linalg.LinAlgError:
            jitter = max(10.0 * jitter, 1e-12)
    return -grad  # fall back to a gradient step


def utility(theta: np.ndarray, d: Dataset, spec: LossSpec) -> float:
    """Mean unregularized empirical loss: the utility F(theta, D).

    Excludes the regularizer and both perturbation terms; this is the
    quantity the extrapolation machinery predicts across eps.
    """
    theta = np.asarray(theta, dtype=np.float64)
    m = d.labels * (d.features @ theta)
    return float(margin_values(spec, m).mean())


def classification_error_rate(theta: np.ndarray, d: Dataset) -> float:
    """Fraction of examples with nonpositive margin. Reporting only; not
    differentiable, never fed to the slope machinery."""
    theta = np.asarray(theta, dtype=np.float64)
    m = d.labels * (d.features @ theta)
    return float(np.mean(m <= 0.0))
