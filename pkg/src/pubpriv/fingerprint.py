"""Fingerprinting test statistics and their decompositions.

Every statistic here takes the *true* parameters (``mu_priv``,
``beta_priv``) as input.  These are analysis-side quantities used to
audit a mechanism against the lower-bound argument, not attacks an
adversary could run.

Sign conventions follow the formulas they implement: mean statistics
correlate with ``x_i - mu``, the per-row regression score uses
``(y_i - x_i . beta) x_i`` and the GLS statistic uses
``X' Sigma^{-1} (X beta - y)``.  At ``tau = 0`` the last equals
``-1/sigma2`` times the summed score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import estimators as est
from .bounds import kappa as kappa_of
from .errors import ParameterError, ShapeError
from .mechanisms import MechanismSpec, estimate_mean
from .models import MeanDataset, MeanInstance, MeanModelParams, RegDataset, RegInstance, _as_rng

__all__ = [
    "FingerprintTrace",
    "BayesDecomposition",
    "mean_statistics",
    "resampled_statistic",
    "paired_statistics",
    "reg_score_statistics",
    "reg_score_sum",
    "gls_score_statistic",
    "bayes_decomposition",
]


@dataclass(frozen=True, eq=False)
class FingerprintTrace:
    z_priv: np.ndarray
    z_pub: np.ndarray
    pub_weight: float
    sum_priv: float
    sum_pub_weighted: float
    sum_total: float

    @classmethod
    def from_rows(cls, z_priv, z_pub, pub_weight=1.0) -> FingerprintTrace:
        sum_priv = float(np.sum(z_priv))
        sum_pub = float(pub_weight * np.sum(z_pub))
        return cls(z_priv, z_pub, float(pub_weight), sum_priv, sum_pub, sum_priv + sum_pub)


@dataclass(frozen=True)
class BayesDecomposition:
    quad_term: float
    cross_term: float
    pool_size_effective: float

    @property
    def reconstructed_sum(self) -> float:
        return self.pool_size_effective * (self.quad_term + self.cross_term)


def _check_mean_shapes(estimate, ds: MeanDataset, instance: MeanInstance):
    estimate = np.asarray(estimate, dtype=float)
    d = instance.mu_priv.shape[0]
    if estimate.shape != (d,) or ds.d != d:
        raise ShapeError(f"estimate {estimate.shape}, data d={ds.d}, instance d={d} disagree")
    return estimate


def mean_statistics(estimate, ds: MeanDataset, instance: MeanInstance, kappa: float = 1.0) -> FingerprintTrace:
    """``Z_i = <estimate - mu_priv, x_i - mu_priv>`` for every row; public sum weighted by ``1/kappa``."""
    if not kappa >= 1:
        raise ParameterError(f"kappa must be >= 1, got {kappa}")
    estimate = _check_mean_shapes(estimate, ds, instance)
    mu = instance.mu_priv
    err = estimate - mu
    return FingerprintTrace.from_rows((ds.x_priv - mu) @ err, (ds.x_pub - mu) @ err, 1.0 / kappa)


def _redraw_row(ds: MeanDataset, instance: MeanInstance, i: int, rng) -> np.ndarray:
    centre = instance.mu_priv if i < ds.n else instance.mu_pub
    return centre + rng.standard_normal(ds.d)


def paired_statistics(
    spec: MechanismSpec, ds: MeanDataset, instance: MeanInstance, params: MeanModelParams, i: int, seed, estimate=None
) -> tuple[float, float]:
    """Return ``(Z_i, Z'_i)`` for row ``i`` (0-based, private rows first).

    ``Z'_i`` reruns the mechanism on the dataset with row ``i`` redrawn from
    its own source distribution and correlates the result with the
    *original* row ``i``.  ``seed`` must be unique per (trial, i): its child
    streams drive the redraw and the fresh mechanism run.  When
    ``estimate`` is omitted the mechanism is also run on the original data.
    """
    if not 0 <= i < ds.n + ds.m:
        raise ParameterError(f"index {i} outside 0..{ds.n + ds.m - 1}")
    if estimate is None:
        estimate = estimate_mean(spec, ds, params, seed.child(2)).estimate
    row = ds.x_priv[i] if i < ds.n else ds.x_pub[i - ds.n]
    mu = instance.mu_priv
    fresh = _redraw_row(ds, instance, i, _as_rng(seed.child(0)))
    est_prime = estimate_mean(spec, ds.replace_row(i, fresh), params, seed.child(1)).estimate
    dev = row - mu
    return float((np.asarray(estimate) - mu) @ dev), float((est_prime - mu) @ dev)


def resampled_statistic(spec: MechanismSpec, ds: MeanDataset, instance: MeanInstance, params: MeanModelParams, i: int, seed) -> float:
    """``Z'_i = <M(X'_i) - mu_priv, x_i - mu_priv>``; see :func:`paired_statistics`."""
    if not 0 <= i < ds.n + ds.m:
        raise ParameterError(f"index {i} outside 0..{ds.n + ds.m - 1}")
    row = ds.x_priv[i] if i < ds.n else ds.x_pub[i - ds.n]
    fresh = _redraw_row(ds, instance, i, _as_rng(seed.child(0)))
    est_prime = estimate_mean(spec, ds.replace_row(i, fresh), params, seed.child(1)).estimate
    mu = instance.mu_priv
    return float((est_prime - mu) @ (row - mu))


def reg_score_statistics(estimate, ds: RegDataset, instance: RegInstance) -> FingerprintTrace:
    """Per-row ``Z_i = <estimate - beta_priv, (y_i - x_i . beta_priv) x_i>``."""
    estimate = np.asarray(estimate, dtype=float)
    beta = instance.beta_priv
    if estimate.shape != beta.shape or ds.d != beta.shape[0]:
        raise ShapeError("estimate, dataset and instance dimensions disagree")
    resid = ds.y - ds.x @ beta
    z = resid * (ds.x @ (estimate - beta))
    return FingerprintTrace.from_rows(z[: ds.n], z[ds.n :], 1.0)


def reg_score_sum(estimate, ds: RegDataset, instance: RegInstance) -> float:
    """``<estimate - beta, X'y - X'X beta>``, the vectorized total of the scores."""
    beta = instance.beta_priv
    return float((np.asarray(estimate) - beta) @ (ds.x.T @ ds.y - ds.x.T @ (ds.x @ beta)))


def gls_score_statistic(estimate, ds: RegDataset, instance: RegInstance, sigma_inv) -> float:
    """``<estimate - beta_priv, X' Sigma^{-1} (X beta_priv - y)>``."""
    estimate = np.asarray(estimate, dtype=float)
    beta = instance.beta_priv
    if estimate.shape != beta.shape or ds.d != beta.shape[0]:
        raise ShapeError("estimate, dataset and instance dimensions disagree")
    if sigma_inv.N != ds.x.shape[0]:
        raise ShapeError("Sigma^-1 size does not match the dataset")
    return float((estimate - beta) @ (ds.x.T @ sigma_inv.apply(ds.x @ beta - ds.y)))


def bayes_decomposition(estimate, ds: MeanDataset, instance: MeanInstance, params: MeanModelParams, kappa: float | None = None) -> BayesDecomposition:
    """Split the kappa-weighted statistic sum around the pooled mean.

    With ``xbar`` the kappa-weighted pool and ``P = n + m/kappa``,
    ``sum_total = P * (||xbar - mu||^2 + <estimate - xbar, xbar - mu>)``.
    """
    estimate = _check_mean_shapes(estimate, ds, instance)
    k = kappa_of(params.m, params.tau, params.d) if kappa is None else kappa
    xbar = est.kappa_weighted_pooled_mean(ds, k)
    dev = xbar - instance.mu_priv
    return BayesDecomposition(
        quad_term=float(dev @ dev),
        cross_term=float((estimate - xbar) @ dev),
        pool_size_effective=ds.n + ds.m / k,
    )
