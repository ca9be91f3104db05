"""Shared domain types and their invariants.

Everything here is immutable after construction (arrays are marked
read-only) and safe to share across threads. No numerics beyond
validation live in this module.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

NORM_SLACK = 1e-9

LOSS_KINDS = ("logistic", "huber_svm", "quadratic", "smooth_hinge")
SOLVER_MODES = ("exact", "sgd_repro")


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Example:
    """One labelled record: a normalized feature vector and a +/-1 label."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(np.atleast_1d(self.features)))
        object.__setattr__(self, "label", int(self.label))

    @property
    def p(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Example):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.features, other.features)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of examples, stored as dense arrays.

    `features` is the n x p matrix of stacked feature rows and `labels`
    the matching +/-1 vector; `examples` views the same storage row by
    row. Construction does not validate the content invariants; call
    validate_dataset for that.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.atleast_1d(np.asarray(self.labels, dtype=np.float64))
        if X.shape[0] != y.shape[0]:
            raise DataError(
                f"feature rows ({X.shape[0]}) and labels ({y.shape[0]}) disagree"
            )
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y))

    @classmethod
    def from_examples(cls, examples) -> "Dataset":
        examples = list(examples)
        if not examples:
            raise DataError("empty dataset")
        ps = {ex.p for ex in examples}
        if len(ps) != 1:
            raise DataError(f"dimension mismatch across examples: {sorted(ps)}")
        X = np.stack([ex.features for ex in examples])
        y = np.array([ex.label for ex in examples], dtype=np.float64)
        return cls(X, y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def examples(self) -> list[Example]:
        return [Example(self.features[i], int(self.labels[i])) for i in range(self.n)]

    def example(self, i: int) -> Example:
        return Example(self.features[i], int(self.labels[i]))

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.features, other.features) and np.array_equal(
            self.labels, other.labels
        )


def validate_dataset(d: Dataset) -> Dataset:
    """Check all dataset invariants; return `d` unchanged if they hold.

    Raises DataError on: empty data, mixed dimensionality, labels outside
    {-1, +1}, or a feature row with L2 norm above 1 + 1e-9.
    """
    if d.n < 1:
        raise DataError("empty dataset")
    if d.features.ndim != 2:
        raise DataError("features must be a 2-d matrix")
    bad = np.flatnonzero(~np.isin(d.labels, (-1.0, 1.0)))
    if bad.size:
        raise DataError(f"invalid label {d.labels[bad[0]]!r} at row {bad[0]}")
    norms = np.linalg.norm(d.features, axis=1)
    over = np.flatnonzero(norms > 1.0 + NORM_SLACK)
    if over.size:
        raise DataError(
            f"feature norm {norms[over[0]]:.12g} exceeds 1 at row {over[0]}"
        )
    if not np.all(np.isfinite(d.features)):
        raise DataError("non-finite feature value")
    return d


@dataclass(frozen=True)
class PrivacyBudget:
    """(epsilon, delta) pair with epsilon > 0 and 0 < delta < 1."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class LossSpec:
    """Which loss to use, its shape parameters and its bound constants.

    zeta bounds the per-example gradient norm, lambda_hess the
    per-example Hessian spectral norm, s_third the third-derivative
    norm used by the error-scale advisory.
    """

    kind: str
    zeta: float
    lambda_hess: float
    s_third: float
    huber_h: float = 0.1
    smooth_t: float = 0.1

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        if not self.lambda_hess > 0:
            raise ValueError("lambda_hess must be positive")
        if self.s_third < 0:
            raise ValueError("s_third must be nonnegative")
        if self.kind == "huber_svm" and not self.huber_h > 0:
            raise ValueError("huber_h must be positive for huber_svm")
        if self.kind == "smooth_hinge" and not self.smooth_t > 0:
            raise ValueError("smooth_t must be positive for smooth_hinge")


@dataclass(frozen=True, eq=False)
class NoiseDraw:
    """The fixed standard-normal base vector u behind the linear noise term.

    Generated once per training run; scaling by sigma(eps) later makes the
    noise a differentiable function of eps while u stays constant. Two
    draws with the same seed and length are bit-identical: generation uses
    the Box-Muller transform over a PCG64 stream seeded with `seed`.
    """

    base_u: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "base_u", _readonly(np.atleast_1d(self.base_u)))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def generate(cls, p: int, seed: int) -> "NoiseDraw":
        if p < 1:
            raise ValueError("p must be >= 1")
        return cls(_box_muller(p, seed), seed)

    @property
    def p(self) -> int:
        return self.base_u.shape[0]

    def __eq__(self, other):
        if not isinstance(other, NoiseDraw):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.base_u, other.base_u)


def _box_muller(p: int, seed: int) -> np.ndarray:
    """Standard normals via Box-Muller over numpy's PCG64 bit generator.

    Pinning the transform (rather than relying on the generator's own
    normal method) keeps draws bit-reproducible even if numpy changes
    its internal normal algorithm.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    pairs = (p + 1) // 2
    # random() yields [0, 1); shift to (0, 1] so the log is finite
    u1 = 1.0 - rng.random(pairs)
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:p]


@dataclass(frozen=True, eq=False)
class PrivateModel:
    """A trained parameter vector together with everything that produced it."""

    theta: np.ndarray
    budget: PrivacyBudget
    reg_lambda: float
    noise: NoiseDraw
    loss: LossSpec
    grad_norm_at_solution: float
    solver_mode: str
    iterations_used: int

    def __post_init__(self):
        object.__setattr__(self, "theta", _readonly(np.atleast_1d(self.theta)))
        if self.solver_mode not in SOLVER_MODES:
            raise ValueError(f"unknown solver mode {self.solver_mode!r}")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be nonnegative")
        if self.theta.shape != self.noise.base_u.shape:
            raise ValueError("theta and noise draw dimensionality disagree")

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @property
    def theta_norm(self) -> float:
        return float(np.linalg.norm(self.theta))

    def __eq__(self, other):
        if not isinstance(other, PrivateModel):
            return NotImplemented
        return (
            np.array_equal(self.theta, other.theta)
            and self.budget == other.budget
            and self.reg_lambda == other.reg_lambda
            and self.noise == other.noise
            and self.loss == other.loss
            and self.grad_norm_at_solution == other.grad_norm_at_solution
            and self.solver_mode == other.solver_mode
            and self.iterations_used == other.iterations_used
        )


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    """Result of the implicit-differentiation solve at one budget.

    dtheta_deps is d(theta-hat)/d(eps); dF_deps the utility slope once
    attached (None until computed). w_min_eigen_lower is the certified
    lower bound on the solved system's spectrum.
    """

    dtheta_deps: np.ndarray
    w_min_eigen_lower: float
    damping_added: float = 0.0
    dF_deps: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "dtheta_deps", _readonly(np.atleast_1d(self.dtheta_deps)))
        if not self.w_min_eigen_lower > 0:
            raise ValueError("w_min_eigen_lower must be positive")
        if self.damping_added < 0:
            raise ValueError("damping_added must be nonnegative")

    def __eq__(self, other):
        if not isinstance(other, SensitivityReport):
            return NotImplemented
        return (
            np.array_equal(self.dtheta_deps, other.dtheta_deps)
            and self.w_min_eigen_lower == other.w_min_eigen_lower
            and self.damping_added == other.damping_added
            and self.dF_deps == other.dF_deps
        )


@dataclass(frozen=True)
class ExtrapolationLine:
    """The affine utility predictor produced by one measuring run."""

    measure_eps: float
    base_utility: float
    slope: float

    def __post_init__(self):
        if not self.measure_eps > 0:
            raise ValueError("measure_eps must be positive")
