"""Closed-form bound values, thresholds and tail bounds.

Big-O constants are explicit arguments (``c``, default 1).  Nothing here
samples; compare these numbers with Monte Carlo output from the harness.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from .errors import ParameterError

__all__ = [
    "BoundPrediction",
    "RegimeClassification",
    "kappa",
    "gamma_tau",
    "classify_regime",
    "mean_upper_bound",
    "reg_upper_bound",
    "reg_public_radicand",
    "posterior_concentration_bound",
    "eigval_tail",
    "exp_tail_fact",
    "sample_thresholds",
    "dp_indistinguishability_bound",
    "predict",
]


def kappa(m: float, tau: float, d: float) -> float:
    """Public-sample discount ``m tau^2 / d + 1``."""
    return m * tau**2 / d + 1.0


def gamma_tau(tau: float, d: float, m: float, sigma2: float) -> float:
    """``d/tau^2 + m/sigma2``; returns ``math.inf`` at ``tau = 0``."""
    if tau == 0:
        return math.inf
    return d / tau**2 + m / sigma2


@dataclass(frozen=True)
class RegimeClassification:
    regime: str
    threshold_tau: float
    tau: float

    @property
    def public_helpful_iff(self) -> str:
        if self.regime == "small_shift":
            return "m >= d/alpha^2 suffices, else n + m >= d/(alpha eps) + d/alpha^2"
        return "public data can help only when alpha >~ tau; otherwise n >= d/(alpha eps) + d/alpha^2"

    def public_helpful(self, alpha: float) -> bool:
        """Whether public data can carry the estimate at accuracy ``alpha``."""
        return self.regime == "small_shift" or alpha >= self.tau


def classify_regime(params) -> RegimeClassification:
    """Large shift iff ``tau > sqrt(d/m)``; the boundary itself counts as small."""
    if params.m < 1:
        raise ParameterError("regime classification needs m >= 1")
    threshold = math.sqrt(params.d / params.m)
    regime = "large_shift" if params.tau > threshold else "small_shift"
    return RegimeClassification(regime=regime, threshold_tau=threshold, tau=params.tau)


def mean_upper_bound(n, m, d, tau, eps, alpha, c: float = 1.0) -> float:
    """``c (n eps alpha + (alpha sqrt(md) + alpha tau sqrt(md)) / kappa)``."""
    if min(n, m, d, tau, eps, alpha) < 0 or c <= 0:
        raise ParameterError("bound inputs must be nonnegative and c positive")
    pub = alpha * math.sqrt(m * d) * (1.0 + tau)
    return c * (n * eps * alpha + pub / kappa(m, tau, d))


def reg_public_radicand(m, d, tau, sigma2) -> float:
    """``m d / sigma2 - m^2 d / (sigma2^2 (d/tau^2 + m/sigma2))``, clamped at 0.

    Equals ``m d / sigma2`` at ``tau = 0`` and tends to 0 as ``tau`` grows.
    """
    g = gamma_tau(tau, d, m, sigma2)
    val = m * d / sigma2 - (0.0 if math.isinf(g) else m**2 * d / (sigma2**2 * g))
    return max(val, 0.0)


def reg_upper_bound(n, m, d, tau, eps, alpha, sigma2=1.0, c: float = 1.0) -> float:
    if min(n, m, d, tau, eps, alpha) < 0 or c <= 0 or sigma2 <= 0:
        raise ParameterError("bound inputs must be nonnegative, sigma2 and c positive")
    return c * (n * eps * alpha + alpha * math.sqrt(reg_public_radicand(m, d, tau, sigma2)))


def posterior_concentration_bound(n, m, d, tau) -> float:
    """``d / (n + m/kappa)^3``."""
    if n + m < 1:
        raise ParameterError("need n + m >= 1")
    return d / (n + m / kappa(m, tau, d)) ** 3


def eigval_tail(N: int, d: int, psi: float, which: str = "min") -> tuple[float, float]:
    """Gaussian-ensemble eigenvalue threshold of ``X'X`` and its tail probability.

    ``min``: ``P[lambda_min <= N (1 - sqrt(d/N) - psi)^2] <= exp(-N psi^2 / 2)``.
    ``max``: ``P[lambda_max >= N (1 + sqrt(d/N) + psi)^2] <= exp(-N psi^2 / 2)``.
    """
    if not N >= d >= 1:
        raise ParameterError(f"need N >= d >= 1, got N={N}, d={d}")
    if not psi > 0:
        raise ParameterError(f"psi must be positive, got {psi}")
    r = math.sqrt(d / N)
    if which == "min":
        if not psi < 1 - r:
            raise ParameterError(f"psi must be below 1 - sqrt(d/N) = {1 - r:.4g}")
        t = N * (1 - r - psi) ** 2
    elif which == "max":
        t = N * (1 + r + psi) ** 2
    else:
        raise ParameterError(f"which must be 'min' or 'max', got {which!r}")
    return t, math.exp(-N * psi**2 / 2)


def exp_tail_fact(N: float) -> bool:
    """Check ``exp(-N/8) <= N^-8`` in log space (holds for N >= 400)."""
    return -N / 8 <= -8 * math.log(N)


@dataclass(frozen=True)
class BoundPrediction:
    kappa: float
    gamma_tau: float
    upper_sum_z: float
    lower_sum_z_floor: float
    n_threshold_dp: float
    n_threshold_stat: float
    m_threshold_pub: float
    posterior_concentration: float

    def as_dict(self) -> dict:
        return asdict(self)


def sample_thresholds(d, alpha, eps) -> dict:
    """``d/(alpha eps)`` for the private count, ``d/alpha^2`` for the statistical and public ones."""
    if not (alpha > 0 and eps > 0):
        raise ParameterError("alpha and eps must be positive")
    stat = d / alpha**2
    return {"n_threshold_dp": d / (alpha * eps), "n_threshold_stat": stat, "m_threshold_pub": stat}


def dp_indistinguishability_bound(mean_abs_a, mean_sq_a, mean_sq_b, eps, delta) -> float:
    """Right-hand side of ``|E[A - B]| <= 2 eps E|A| + 2 sqrt(delta E[A^2 + B^2])``.

    Holds when A and B are (eps, delta)-indistinguishable with eps <= 1 and
    delta <= 1/2; outside that range a warning is issued and the value is
    still returned.
    """
    if min(mean_abs_a, mean_sq_a, mean_sq_b) < 0:
        raise ParameterError("moments must be nonnegative")
    if eps > 1 or delta > 0.5:
        warnings.warn("eps > 1 or delta > 1/2: outside the range where the bound is proven", stacklevel=2)
    return 2 * eps * mean_abs_a + 2 * math.sqrt(delta * (mean_sq_a + mean_sq_b))


def predict(params, eps: float, alpha: float, c: float = 1.0, sigma2: float = 1.0) -> BoundPrediction:
    """All bound quantities for a mean-estimation parameter set."""
    d, n, m, tau = params.d, params.n, params.m, params.tau
    thr = sample_thresholds(d, alpha, eps)
    return BoundPrediction(
        kappa=kappa(m, tau, d),
        gamma_tau=gamma_tau(tau, d, m, sigma2),
        upper_sum_z=mean_upper_bound(n, m, d, tau, eps, alpha, c),
        lower_sum_z_floor=c * d,
        posterior_concentration=posterior_concentration_bound(n, m, d, tau),
        **thr,
    )
