"""Monte Carlo experiment runner.

One trial draws an instance from the prior, a dataset, runs the mechanism
and evaluates the requested statistics.  Trial ``t`` of a config with root
seed ``s`` uses ``RngSeed(s, t)`` with fixed child streams:

    0 instance, 1 dataset, 2 mechanism, (3, i) resampling of row i,
    4 choice of resampled rows

so every record can be replayed from ``(config, trial_index)`` alone.
Trials may run on a thread pool; results are folded in trial-index order,
so aggregates are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds
from . import estimators as est
from . import fingerprint as fp
from .errors import ExperimentError, ParameterError
from .mechanisms import MechanismSpec, PrivacyBudget, estimate_mean, estimate_reg
from .models import (
    MeanModelParams,
    RegModelParams,
    RngSeed,
    sample_mean_dataset,
    sample_mean_instance,
    sample_reg_dataset,
    sample_reg_instance,
)

__all__ = [
    "MEAN_OUTPUTS",
    "REG_OUTPUTS",
    "ExperimentConfig",
    "RunningMoments",
    "SummaryStat",
    "TrialRecord",
    "run_trial",
    "run_trials",
    "summarize",
    "run_experiment",
    "run_sweep",
    "results_to_csv",
    "results_to_json",
    "write_results",
]

log = logging.getLogger(__name__)

MEAN_OUTPUTS = (
    "sum_total",
    "sum_priv",
    "sum_pub_weighted",
    "err_l2",
    "err_l2_sq",
    "quad_term",
    "cross_term",
    "posterior_gap",
    "zprime",
    "zprime_sq",
    "zprime_abs",
    "z_paired",
    "z_paired_sq",
)
REG_OUTPUTS = ("sum_total", "sum_priv", "sum_pub_weighted", "err_l2", "err_l2_sq", "gls_score", "whitened_risk")
SWEEP_AXES = ("n", "m", "d", "tau", "eps", "trials")
MAX_ERROR_FRACTION = 0.10


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    d: int
    n: int
    m: int
    mechanism: MechanismSpec
    tau: float = 0.0
    trials: int = 100
    root_seed: int = 0
    prior_sigma2: float = 1.0
    noise_sigma2: float = 1.0
    prior_precision_b: float | None = None
    kappa_override: float | None = None
    outputs: tuple[str, ...] = ("sum_total", "err_l2")
    zprime_indices: int = 8
    zprime_source: str = "private"

    def __post_init__(self):
        if self.problem == "reg":
            object.__setattr__(self, "problem", "regression")
        if self.problem not in ("mean", "regression"):
            raise ParameterError(f"problem must be 'mean' or 'regression', got {self.problem!r}")
        if isinstance(self.mechanism, dict):
            object.__setattr__(self, "mechanism", MechanismSpec.from_dict(self.mechanism))
        if self.mechanism.kind.problem != self.problem:
            raise ParameterError(f"{self.mechanism.kind.value} cannot run on the {self.problem} problem")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"trials must be a positive integer, got {self.trials}")
        object.__setattr__(self, "outputs", tuple(self.outputs))
        allowed = MEAN_OUTPUTS if self.problem == "mean" else REG_OUTPUTS
        unknown = [o for o in self.outputs if o not in allowed]
        if unknown:
            raise ParameterError(f"unknown outputs for {self.problem}: {unknown}; choose from {allowed}")
        if self.zprime_source not in ("private", "public", "all"):
            raise ParameterError(f"zprime_source must be private, public or all, got {self.zprime_source!r}")
        if self.zprime_indices < 1:
            raise ParameterError("zprime_indices must be >= 1")
        if self.kappa_override is not None and not self.kappa_override >= 1:
            raise ParameterError("kappa_override must be >= 1")
        self.model_params()

    def model_params(self):
        if self.problem == "mean":
            return MeanModelParams(d=self.d, n=self.n, m=self.m, tau=self.tau, prior_sigma2=self.prior_sigma2)
        return RegModelParams(
            d=self.d, n=self.n, m=self.m, tau=self.tau, noise_sigma2=self.noise_sigma2, prior_precision_b=self.prior_precision_b
        )

    @property
    def kappa(self) -> float:
        if self.kappa_override is not None:
            return self.kappa_override
        return bounds.kappa(self.m, self.tau, self.d)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["mechanism"] = self.mechanism.to_dict()
        out["outputs"] = list(self.outputs)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        raw = dict(raw)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        if isinstance(raw.get("mechanism"), dict):
            raw["mechanism"] = MechanismSpec.from_dict(raw["mechanism"])
        return cls(**raw)


class RunningMoments:
    """One-pass mean/variance (Welford), plus min and max."""

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0
        self.min = math.inf
        self.max = -math.inf

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)
        self.min = min(self.min, x)
        self.max = max(self.max, x)

    def merge(self, other: RunningMoments) -> RunningMoments:
        """Pairwise combination (Chan et al.); returns a new accumulator."""
        out = RunningMoments()
        out.count = self.count + other.count
        if out.count == 0:
            return out
        delta = other.mean - self.mean
        out.mean = self.mean + delta * other.count / out.count
        out._m2 = self._m2 + other._m2 + delta**2 * self.count * other.count / out.count
        out.min = min(self.min, other.min)
        out.max = max(self.max, other.max)
        return out

    @property
    def variance(self) -> float:
        return self._m2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def stderr(self) -> float:
        # nan marks "undefined" for a single observation
        if self.count < 2:
            return math.nan
        return math.sqrt(max(self.variance, 0.0) / self.count)


@dataclass(frozen=True)
class SummaryStat:
    name: str
    mean: float
    stderr: float
    count: int
    min: float
    max: float

    @classmethod
    def from_moments(cls, name: str, acc: RunningMoments) -> SummaryStat:
        return cls(name, acc.mean, acc.stderr, acc.count, acc.min, acc.max)


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: RngSeed
    alpha: float
    stats: dict
    elapsed: float = field(compare=False)
    error: str | None = None


def _choose_indices(config: ExperimentConfig, seed: RngSeed) -> np.ndarray:
    n, m = config.n, config.m
    pool = {"private": np.arange(n), "public": np.arange(n, n + m), "all": np.arange(n + m)}[config.zprime_source]
    if pool.size == 0:
        raise ParameterError(f"no {config.zprime_source} rows to resample")
    k = min(config.zprime_indices, pool.size)
    return np.sort(seed.child(4).generator().choice(pool, size=k, replace=False))


def _mean_trial(config: ExperimentConfig, seed: RngSeed) -> tuple[float, dict]:
    params = config.model_params()
    spec = config.mechanism
    inst = sample_mean_instance(params, seed.child(0))
    ds = sample_mean_dataset(params, inst, seed.child(1))
    estimate = estimate_mean(spec, ds, params, seed.child(2)).estimate
    err = estimate - inst.mu_priv
    alpha = float(np.linalg.norm(err))
    wanted = set(config.outputs)
    stats = {}
    if wanted & {"err_l2", "err_l2_sq"}:
        stats["err_l2"] = alpha
        stats["err_l2_sq"] = alpha**2
    k = config.kappa
    if wanted & {"sum_total", "sum_priv", "sum_pub_weighted"}:
        tr = fp.mean_statistics(estimate, ds, inst, k)
        stats.update(sum_total=tr.sum_total, sum_priv=tr.sum_priv, sum_pub_weighted=tr.sum_pub_weighted)
    if wanted & {"quad_term", "cross_term"}:
        dec = fp.bayes_decomposition(estimate, ds, inst, params, kappa=k)
        stats.update(quad_term=dec.quad_term, cross_term=dec.cross_term)
    if "posterior_gap" in wanted:
        w = est.conjugate_mean_weights(params)
        post = np.zeros(params.d)
        if ds.n:
            post = post + w.w_priv * est.empirical_mean(ds.x_priv)
        if ds.m:
            post = post + w.w_pub * est.empirical_mean(ds.x_pub)
        gap = post - est.kappa_weighted_pooled_mean(ds, k)
        stats["posterior_gap"] = float(gap @ gap)
    if wanted & {"zprime", "zprime_sq", "zprime_abs", "z_paired", "z_paired_sq"}:
        pairs = np.array(
            [fp.paired_statistics(spec, ds, inst, params, int(i), seed.child(3, int(i)), estimate=estimate) for i in _choose_indices(config, seed)]
        )
        z, zp = pairs[:, 0], pairs[:, 1]
        stats.update(
            zprime=float(zp.mean()),
            zprime_sq=float((zp**2).mean()),
            zprime_abs=float(np.abs(zp).mean()),
            z_paired=float(z.mean()),
            z_paired_sq=float((z**2).mean()),
        )
    return alpha, stats


def _reg_trial(config: ExperimentConfig, seed: RngSeed) -> tuple[float, dict]:
    params = config.model_params()
    inst = sample_reg_instance(params, seed.child(0))
    ds = sample_reg_dataset(params, inst, seed.child(1))
    estimate = estimate_reg(config.mechanism, ds, params, seed.child(2)).estimate
    err = estimate - inst.beta_priv
    alpha = float(np.linalg.norm(err))
    wanted = set(config.outputs)
    stats = {}
    if wanted & {"err_l2", "err_l2_sq"}:
        stats["err_l2"] = alpha
        stats["err_l2_sq"] = alpha**2
    if wanted & {"sum_total", "sum_priv", "sum_pub_weighted"}:
        tr = fp.reg_score_statistics(estimate, ds, inst)
        stats.update(sum_total=tr.sum_total, sum_priv=tr.sum_priv, sum_pub_weighted=tr.sum_pub_weighted)
    if wanted & {"gls_score", "whitened_risk"}:
        sigma_inv = est.sigma_inverse(ds.x_pub, params.tau, params.noise_sigma2, ds.n)
        if "gls_score" in wanted:
            stats["gls_score"] = fp.gls_score_statistic(estimate, ds, inst, sigma_inv)
        if "whitened_risk" in wanted:
            stats["whitened_risk"] = est.whitened_sq_norm(sigma_inv, ds.x @ err)
    return alpha, stats


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """One prior -> data -> mechanism -> statistics draw; errors become part of the record."""
    seed = RngSeed(config.root_seed, trial_index)
    start = time.perf_counter()
    try:
        body = _mean_trial if config.problem == "mean" else _reg_trial
        alpha, stats = body(config, seed)
        bad = [k for k, v in stats.items() if not math.isfinite(v)]
        if not math.isfinite(alpha):
            bad.append("alpha")
        if bad:
            raise FloatingPointError(f"non-finite statistics: {bad}")
    except Exception as exc:  # noqa: BLE001 - per-trial failures are data
        log.warning("trial %d failed: %s", trial_index, exc)
        return TrialRecord(trial_index, seed, math.nan, {}, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    return TrialRecord(trial_index, seed, alpha, stats, time.perf_counter() - start)


def run_trials(config: ExperimentConfig, workers: int = 1) -> list[TrialRecord]:
    indices = range(config.trials)
    if workers <= 1:
        return [run_trial(config, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_trial(config, i), indices))


def summarize(records: list[TrialRecord], outputs) -> list[SummaryStat]:
    accs = {name: RunningMoments() for name in outputs}
    for rec in sorted(records, key=lambda r: r.trial_index):
        if rec.error is None:
            for name, acc in accs.items():
                acc.push(rec.stats[name])
    return [SummaryStat.from_moments(name, acc) for name, acc in accs.items()]


def run_experiment(config: ExperimentConfig, workers: int = 1, return_records: bool = False):
    """Run every trial and aggregate each requested output.

    Raises :class:`ExperimentError` when more than 10% of trials fail.
    """
    records = run_trials(config, workers)
    n_err = sum(r.error is not None for r in records)
    if n_err > MAX_ERROR_FRACTION * config.trials:
        first = next(r.error for r in records if r.error is not None)
        raise ExperimentError(f"{n_err}/{config.trials} trials failed (first: {first})", records)
    stats = summarize(records, config.outputs)
    return (stats, records) if return_records else stats


def _with_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "eps":
        mech = config.mechanism
        budget = PrivacyBudget(eps=float(value), delta=mech.budget.delta)
        return config.replace(mechanism=dataclasses.replace(mech, budget=budget))
    if axis in ("n", "m", "d", "trials"):
        return config.replace(**{axis: int(value)})
    return config.replace(**{axis: float(value)})


def run_sweep(base_config: ExperimentConfig, axis: str, values, workers: int = 1) -> list[tuple[float, list[SummaryStat]]]:
    """One experiment per axis value; rows keyed by that value."""
    if axis not in SWEEP_AXES:
        raise ParameterError(f"cannot sweep {axis!r}; choose from {SWEEP_AXES}")
    return [(value, run_experiment(_with_axis(base_config, axis, value), workers)) for value in values]


# -- result files ----------------------------------------------------------

CSV_HEADER = ("axis_value", "stat_name", "mean", "stderr", "count", "min", "max")


def _rows(table):
    for axis_value, stats in table:
        for s in stats:
            yield {
                "axis_value": axis_value,
                "stat_name": s.name,
                "mean": s.mean,
                "stderr": s.stderr,
                "count": s.count,
                "min": s.min,
                "max": s.max,
            }


def results_to_csv(table) -> str:
    """``table`` is a list of ``(axis_value, [SummaryStat, ...])``; use ``None`` for a plain run."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in _rows(table):
        row["axis_value"] = "" if row["axis_value"] is None else row["axis_value"]
        writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return buf.getvalue()


def results_to_json(table) -> str:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v

    return json.dumps([{k: clean(v) for k, v in row.items()} for row in _rows(table)], indent=2)


def write_results(table, path: str | Path | None, fmt: str = "csv") -> str:
    text = results_to_csv(table) if fmt == "csv" else results_to_json(table)
    if path is not None:
        Path(path).write_text(text)
    return text
