"""Budget sensitivity of the trained model, by implicit differentiation.

At the minimizer, the perturbed objective's gradient vanishes.
Differentiating that stationarity identity in eps gives a linear system

    W_eps * dtheta/deps = -(1/n) (b'_eps + Delta'_eps * theta_hat),

with W_eps = hess(L) + ((Lam + Delta_eps)/n) I, symmetric positive
definite. One Cholesky solve therefore prices the model's response to a
budget change, the chain rule turns it into a utility slope, and a
first-order Taylor step extrapolates the utility to any other budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NoiseMismatchError, NumericalError
from .losses import aggregate
from .model import Dataset, ExtrapolationLine, LossSpec, PrivateModel, SensitivityReport
from .perturbation import PerturbationAtEps, delta_coeff


def assemble_w(model: PrivateModel, d: Dataset, spec: LossSpec) -> np.ndarray:
    """The p x p system matrix hess(L) at theta_hat plus ((Lam+Delta_eps)/n) I.

    The scalar ridge terms enter as multiples of the identity: they are
    the Hessian of the quadratic perturbation terms. The result is
    symmetric positive definite whenever Lam + Delta_eps > 0.
    """
    _, _, hessL = aggregate(spec, model.theta, d)
    ridge = (model.reg_lambda + delta_coeff(spec.lambda_hess, model.budget.epsilon)) / d.n
    W = hessL + ridge * np.eye(d.p)
    try:
        cho_factor(W, lower=True)
    except np.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh(W).min())
        raise NumericalError(
            f"system matrix is not positive definite (min eigenvalue {min_eig:.3e})"
        ) from None
    return W


def dtheta_deps(
    model: PrivateModel,
    d: Dataset,
    spec: LossSpec,
    pert: PerturbationAtEps,
    damping: float = 0.0,
    allow_nonstationary: bool = False,
) -> SensitivityReport:
    """Solve for d(theta_hat)/d(eps) at the model's own budget.

    The perturbation must have been materialized from the model's own
    noise draw and budget (checked by identity). Models trained in
    sgd_repro mode are not stationary, so the implicit-differentiation
    identity does not hold exactly; pass allow_nonstationary=True to
    proceed anyway, ideally with damping >= (Lam + Delta_eps)/n, which
    amounts to solving against a convex quadratic approximation of the
    loss around the returned iterate.
    """
    if damping < 0:
        raise ValueError("damping must be nonnegative")
    if model.solver_mode == "sgd_repro" and not allow_nonstationary:
        raise NumericalError(
            "model was trained in sgd_repro mode and is not stationary; "
            "pass allow_nonstationary=True to accept the quadratic-approximation caveat"
        )
    if pert.eps != model.budget.epsilon:
        raise NoiseMismatchError(
            f"perturbation eps {pert.eps} differs from model eps {model.budget.epsilon}"
        )
    if not np.array_equal(pert.base_u, model.noise.base_u):
        raise NoiseMismatchError(
            "perturbation was materialized from a different noise draw than the model's"
        )

    n = d.n
    W = assemble_w(model, d, spec)
    if damping > 0:
        W = W + damping * np.eye(d.p)
    rhs = -(pert.b_prime + pert.delta_eps_prime * model.theta) / n
    try:
        v = cho_solve(cho_factor(W, lower=True), rhs)
    except np.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh(W).min())
        raise NumericalError(
            f"factorization failed (min eigenvalue {min_eig:.3e})"
        ) from None
    ridge_lower = (
        model.reg_lambda + delta_coeff(spec.lambda_hess, model.budget.epsilon)
    ) / n
    return SensitivityReport(
        dtheta_deps=v,
        w_min_eigen_lower=ridge_lower + damping,
        damping_added=damping,
    )


def utility_slope(
    model: PrivateModel, d: Dataset, spec: LossSpec, report: SensitivityReport
) -> float:
    """Chain rule: dF/deps = <grad of F at theta_hat, dtheta/deps>."""
    _, gradL, _ = aggregate(spec, model.theta, d)
    return float(gradL @ report.dtheta_deps)


def extrapolate(line: ExtrapolationLine, target_eps: float) -> float:
    """First-order utility prediction at target_eps; exactly affine."""
    if not target_eps > 0:
        raise ValueError(f"target_eps must be positive, got {target_eps}")
    return line.base_utility + line.slope * (target_eps - line.measure_eps)


@dataclass(frozen=True)
class ErrorScale:
    """Order-of-magnitude advisory for the Taylor remainder.

    scale = (measure_eps - target_eps)^2 / (n * min(measure_eps, target_eps)^3)
    with unit constant: the suppressed loss- and dimension-dependent
    factors make this an advisory, not a certified bound.
    """

    measure_eps: float
    target_eps: float
    n: int
    scale: float


def error_scale(measure_eps: float, target_eps: float, n: int) -> ErrorScale:
    """Remainder scale for extrapolating from measure_eps to target_eps.

    The intermediate budget in the remainder lies somewhere between the
    two endpoints; the scale takes the conservative endpoint min(.,.).
    """
    if not measure_eps > 0 or not target_eps > 0:
        raise ValueError("both budgets must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    tilde = min(measure_eps, target_eps)
    scale = (measure_eps - target_eps) ** 2 / (n * tilde**3)
    return ErrorScale(measure_eps=measure_eps, target_eps=target_eps, n=n, scale=scale)


def worst_case_bound(
    zeta: float, theta_norm: float, p: int, delta: float, eps: float, n: int
) -> float:
    """Conservative excess-risk order bound zeta ||theta|| sqrt(p ln(1/delta)) / (eps n).

    The classical worst-case utility guarantee for objective-perturbed
    learners, with unit constant. Kept for contrast with the empirical
    extrapolation, which it typically overshoots by orders of magnitude.
    """
    if not zeta > 0 or not theta_norm > 0 or p < 1 or n < 1:
        raise ValueError("zeta, theta_norm must be positive and p, n >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    return zeta * theta_norm * math.sqrt(p * math.log(1.0 / delta)) / (eps * n)
