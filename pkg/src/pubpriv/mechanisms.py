"""Concrete estimators under audit, each carrying its claimed privacy budget.

Only ``GaussianMechMean`` is a genuine (eps, delta)-DP mechanism with respect
to the private rows: private rows are clipped to an l2 ball around the
origin, averaged (replace-one sensitivity ``2R/n``), and the Gaussian
mechanism's classic calibration ``sens * sqrt(2 ln(1.25/delta)) / eps`` is
applied before mixing with the public mean.

``GaussianMechReg`` perturbs a norm-clipped GLS posterior with a surrogate
sensitivity weight.  Its worst-case sensitivity is unbounded, so outputs are
tagged ``heuristic_dp=True``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .errors import BudgetError, ParameterError
from .models import MeanDataset, MeanModelParams, RegDataset, RegModelParams, _as_rng

__all__ = [
    "PrivacyBudget",
    "MechanismKind",
    "MechanismSpec",
    "MechanismOutput",
    "NON_PRIVATE",
    "clip_rows",
    "clip_and_average",
    "gaussian_noise_scale",
    "default_clip_radius",
    "estimate_mean",
    "estimate_reg",
]


@dataclass(frozen=True)
class PrivacyBudget:
    eps: float
    delta: float = 0.0

    def __post_init__(self):
        if math.isnan(self.eps) or self.eps < 0:
            raise BudgetError(f"eps must be >= 0, got {self.eps}")
        if not 0 <= self.delta < 1:
            raise BudgetError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def is_private(self) -> bool:
        return math.isfinite(self.eps)

    def validate_theorem_regime(self, d: int) -> None:
        """Raise unless ``delta < eps^2 / d``, the regime the lower bounds assume."""
        if not self.delta < self.eps**2 / d:
            raise BudgetError(f"delta={self.delta} is not below eps^2/d={self.eps**2 / d}")


NON_PRIVATE = PrivacyBudget(eps=math.inf, delta=0.0)


class MechanismKind(str, enum.Enum):
    BAYES_POSTERIOR = "BayesPosterior"
    PUBLIC_ONLY_MEAN = "PublicOnlyMean"
    GAUSSIAN_MECH_MEAN = "GaussianMechMean"
    PUBLIC_ONLY_OLS = "PublicOnlyOls"
    GLS_POSTERIOR = "GlsPosterior"
    GAUSSIAN_MECH_REG = "GaussianMechReg"

    @property
    def is_dp(self) -> bool:
        return self in (MechanismKind.GAUSSIAN_MECH_MEAN, MechanismKind.GAUSSIAN_MECH_REG)

    @property
    def problem(self) -> str:
        if self in (MechanismKind.BAYES_POSTERIOR, MechanismKind.PUBLIC_ONLY_MEAN, MechanismKind.GAUSSIAN_MECH_MEAN):
            return "mean"
        return "regression"


@dataclass(frozen=True)
class MechanismSpec:
    """Which estimator to run, plus its budget and tuning knobs.

    ``clip_radius=None`` selects the default radius for the problem;
    ``mix_weights=None`` selects the posterior weights of the model;
    ``sensitivity_weight`` is the surrogate ``w`` of GaussianMechReg
    (default ``1/n``).
    """

    kind: MechanismKind
    budget: PrivacyBudget = NON_PRIVATE
    clip_radius: float | None = None
    mix_weights: est.PosteriorWeights | None = None
    sensitivity_weight: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MechanismKind(self.kind))
        if self.kind.is_dp:
            if not self.budget.is_private or self.budget.delta <= 0:
                raise BudgetError(f"{self.kind.value} needs finite eps and delta > 0, got {self.budget}")
        if self.clip_radius is not None and not self.clip_radius > 0:
            raise ParameterError(f"clip_radius must be positive, got {self.clip_radius}")

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "eps": self.budget.eps if math.isfinite(self.budget.eps) else "inf",
            "delta": self.budget.delta,
        }
        if self.clip_radius is not None:
            out["clip_radius"] = self.clip_radius
        if self.mix_weights is not None:
            out["mix_weights"] = [self.mix_weights.w_priv, self.mix_weights.w_pub]
        if self.sensitivity_weight is not None:
            out["sensitivity_weight"] = self.sensitivity_weight
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> MechanismSpec:
        eps = raw.get("eps", "inf")
        budget = PrivacyBudget(eps=float(eps), delta=float(raw.get("delta", 0.0)))
        weights = raw.get("mix_weights")
        return cls(
            kind=MechanismKind(raw["kind"]),
            budget=budget,
            clip_radius=raw.get("clip_radius"),
            mix_weights=est.PosteriorWeights(*map(float, weights)) if weights is not None else None,
            sensitivity_weight=raw.get("sensitivity_weight"),
        )


@dataclass(frozen=True, eq=False)
class MechanismOutput:
    estimate: np.ndarray
    budget: PrivacyBudget
    heuristic_dp: bool = False


def clip_rows(rows: np.ndarray, radius: float) -> np.ndarray:
    """Project each row onto the l2 ball of ``radius`` around the origin."""
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    scale = np.minimum(1.0, radius / np.maximum(norms, np.finfo(float).tiny))
    return rows * scale


def clip_and_average(rows: np.ndarray, radius: float) -> np.ndarray:
    return est.empirical_mean(clip_rows(np.asarray(rows, dtype=float), radius))


def gaussian_noise_scale(sensitivity: float, eps: float, delta: float) -> float:
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / eps


def default_clip_radius(problem: str, d: int, prior_sigma2: float = 1.0) -> float:
    if problem == "mean":
        return 2.0 * math.sqrt(d) * math.sqrt(prior_sigma2)
    return 2.0


def _check_mean_inputs(spec: MechanismSpec, ds: MeanDataset, params: MeanModelParams):
    if spec.kind.problem != "mean":
        raise ParameterError(f"{spec.kind.value} is not a mean-estimation mechanism")
    if (ds.n, ds.m, ds.d) != (params.n, params.m, params.d):
        raise ParameterError("dataset does not match params")


def estimate_mean(spec: MechanismSpec, ds: MeanDataset, params: MeanModelParams, seed) -> MechanismOutput:
    _check_mean_inputs(spec, ds, params)
    kind = spec.kind
    if kind is MechanismKind.BAYES_POSTERIOR:
        w = spec.mix_weights or est.conjugate_mean_weights(params)
        out = np.zeros(params.d)
        if ds.n:
            out = out + w.w_priv * est.empirical_mean(ds.x_priv)
        if ds.m:
            out = out + w.w_pub * est.empirical_mean(ds.x_pub)
        return MechanismOutput(out, NON_PRIVATE)
    if kind is MechanismKind.PUBLIC_ONLY_MEAN:
        return MechanismOutput(est.empirical_mean(ds.x_pub), NON_PRIVATE)

    # GaussianMechMean
    if ds.n == 0:
        raise ParameterError("GaussianMechMean needs at least one private row")
    w = spec.mix_weights or est.conjugate_mean_weights(params)
    radius = spec.clip_radius or default_clip_radius("mean", params.d, params.prior_sigma2)
    budget = spec.budget
    s = w.w_priv * gaussian_noise_scale(2.0 * radius / ds.n, budget.eps, budget.delta)
    rng = _as_rng(seed)
    out = w.w_priv * clip_and_average(ds.x_priv, radius) + s * rng.standard_normal(params.d)
    if ds.m:
        out = out + w.w_pub * est.empirical_mean(ds.x_pub)
    return MechanismOutput(out, budget)


def estimate_reg(spec: MechanismSpec, ds: RegDataset, params: RegModelParams, seed) -> MechanismOutput:
    if spec.kind.problem != "regression":
        raise ParameterError(f"{spec.kind.value} is not a regression mechanism")
    if (ds.n, ds.m, ds.d) != (params.n, params.m, params.d):
        raise ParameterError("dataset does not match params")
    kind = spec.kind
    if kind is MechanismKind.PUBLIC_ONLY_OLS:
        return MechanismOutput(est.ols(ds.x_pub, ds.y_pub), NON_PRIVATE)

    sigma_inv = est.sigma_inverse(ds.x_pub, params.tau, params.noise_sigma2, ds.n)
    post = est.gls_posterior_mean(ds.x, ds.y, sigma_inv, params.prior_precision_b)
    if kind is MechanismKind.GLS_POSTERIOR:
        return MechanismOutput(post, NON_PRIVATE)

    # GaussianMechReg
    if ds.n == 0:
        raise ParameterError("GaussianMechReg needs at least one private row")
    radius = spec.clip_radius or default_clip_radius("regression", params.d)
    weight = spec.sensitivity_weight if spec.sensitivity_weight is not None else 1.0 / ds.n
    clipped = clip_rows(post[None, :], radius)[0]
    s = gaussian_noise_scale(2.0 * radius * weight, spec.budget.eps, spec.budget.delta)
    rng = _as_rng(seed)
    return MechanismOutput(clipped + s * rng.standard_normal(params.d), spec.budget, heuristic_dp=True)
