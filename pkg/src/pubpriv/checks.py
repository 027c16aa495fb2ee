"""Named verification checks and the ``verify_suite`` runner.

Each check returns a :class:`CheckResult` carrying the measured values, so
a failure is data rather than an exception.  The ``fast`` level holds the
exact algebraic checks (identities, oracle equivalences, Woodbury, bound
collapses); ``full`` adds every Monte Carlo criterion.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from . import estimators as est
from . import fingerprint as fp
from .harness import ExperimentConfig, run_experiment
from .mechanisms import MechanismKind, MechanismSpec, PrivacyBudget, estimate_mean
from .models import (
    MeanModelParams,
    RegModelParams,
    RngSeed,
    sample_mean_dataset,
    sample_mean_instance,
    sample_reg_dataset,
    sample_reg_instance,
)

__all__ = ["CheckResult", "VerifyReport", "FAST_CHECKS", "FULL_CHECKS", "verify_suite"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""
    elapsed: float = 0.0

    def line(self) -> str:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.elapsed:.1f}s) {shown} {self.detail}".rstrip()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class VerifyReport:
    level: str
    results: list[CheckResult]
    elapsed: float

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def by_name(self) -> dict[str, CheckResult]:
        return {r.name: r for r in self.results}

    def text(self) -> str:
        lines = [r.line() for r in self.results]
        lines.append(f"{'OK' if self.ok else 'FAILED'} level={self.level} checks={len(self.results)} elapsed={self.elapsed:.1f}s")
        return "\n".join(lines)


def _within(mean, target, stderr, rel=0.05):
    return abs(mean - target) <= max(rel * abs(target), 3 * stderr)


def _rel_err(a, b, scale=None):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 0.0 if scale is None else scale, np.finfo(float).tiny)
    return float(np.max(np.abs(a - b)) / denom)


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


_BAYES = MechanismSpec(MechanismKind.BAYES_POSTERIOR)


# -- 1, 2: regression risk identities --------------------------------------


def check_gls_whitened_risk(trials: int = 2000, root_seed: int = 101) -> CheckResult:
    """Mean of ||Sigma^{-1/2} X (beta_gls - beta)||^2 equals d."""
    params = RegModelParams(d=8, n=400, m=400, tau=1.0, noise_sigma2=1.0)
    vals = np.empty(trials)
    for t in range(trials):
        seed = RngSeed(root_seed, t)
        inst = sample_reg_instance(params, seed.child(0))
        ds = sample_reg_dataset(params, inst, seed.child(1))
        sigma_inv = est.sigma_inverse(ds.x_pub, params.tau, params.noise_sigma2, ds.n)
        beta_hat = est.gls_estimate(ds.x, ds.y, sigma_inv)
        vals[t] = est.whitened_sq_norm(sigma_inv, ds.x @ (beta_hat - inst.beta_priv))
    mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(trials)
    return CheckResult("c01_gls_whitened_risk", _within(mean, 8.0, se), {"mean": mean, "stderr": se, "target": 8.0})


def check_ols_projected_risk(trials: int = 2000, root_seed: int = 102) -> CheckResult:
    """Mean of ||X (beta_ols - beta)||^2 equals sigma^2 d."""
    measured, ok = {}, True
    for s2 in (1.0, 4.0):
        params = RegModelParams(d=5, n=500, m=0, noise_sigma2=s2)
        vals = np.empty(trials)
        for t in range(trials):
            seed = RngSeed(root_seed, t)
            inst = sample_reg_instance(params, seed.child(0))
            ds = sample_reg_dataset(params, inst, seed.child(1))
            r = ds.x @ (est.ols(ds.x, ds.y) - inst.beta_priv)
            vals[t] = r @ r
        mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(trials)
        ok &= _within(mean, 5 * s2, se)
        measured[f"mean_s2={s2:g}"] = mean
        measured[f"stderr_s2={s2:g}"] = se
    return CheckResult("c02_ols_projected_risk", ok, measured)


# -- 3: resampled null -----------------------------------------------------


def check_resampled_null(trials: int = 10_000, root_seed: int = 103) -> CheckResult:
    """E[Z'_i] = 0 and E[Z'_i^2] <= 1.2 E||M - mu||^2 for the Bayes mechanism.

    At tau > 0 only private rows are resampled: a public row is centred at
    mu_pub, so its Z'_i has mean w_pub * tau^2 rather than 0.
    """
    measured, ok = {}, True
    for tau in (0.0, 0.5):
        cfg = ExperimentConfig(
            "mean", d=10, n=50, m=50, tau=tau, mechanism=_BAYES, trials=trials, root_seed=root_seed,
            outputs=("zprime", "zprime_sq", "err_l2_sq"), zprime_indices=1,
            zprime_source="all" if tau == 0 else "private",
        )
        s = {x.name: x for x in run_experiment(cfg)}
        zp, zsq, risk = s["zprime"], s["zprime_sq"], s["err_l2_sq"]
        ok &= abs(zp.mean) <= 3 * zp.stderr and zsq.mean <= 1.2 * risk.mean
        measured[f"zprime_tau={tau:g}"] = zp.mean
        measured[f"stderr_tau={tau:g}"] = zp.stderr
        measured[f"sq_ratio_tau={tau:g}"] = zsq.mean / risk.mean
    return CheckResult("c03_resampled_null", ok, measured)


# -- 4: fingerprint identities ---------------------------------------------


def _random_mean_case(rng, tau=None):
    d = int(rng.integers(1, 7))
    n, m = int(rng.integers(1, 31)), int(rng.integers(1, 31))
    tau = float(rng.uniform(0, 3)) if tau is None else tau
    params = MeanModelParams(d=d, n=n, m=m, tau=tau, prior_sigma2=float(rng.uniform(0.2, 3)))
    seed = RngSeed(int(rng.integers(2**63)), 0)
    inst = sample_mean_instance(params, seed.child(0))
    ds = sample_mean_dataset(params, inst, seed.child(1))
    # perturb the Bayes estimate so cross terms are not special
    estimate = estimate_mean(_BAYES, ds, params, seed).estimate + 0.1 * rng.standard_normal(d)
    return params, inst, ds, estimate


def check_fingerprint_identities(cases: int = 100, root_seed: int = 104) -> CheckResult:
    rng = np.random.default_rng(root_seed)
    worst = {"a_sum_identity": 0.0, "b_decomposition": 0.0, "c_reg_rows_vs_vectorized": 0.0}
    for _ in range(cases):
        params, inst, ds, estimate = _random_mean_case(rng, tau=0.0)
        tr = fp.mean_statistics(estimate, ds, inst, kappa=1.0)
        pooled = est.empirical_mean(ds.rows())
        ref = (params.n + params.m) * float((estimate - inst.mu_priv) @ (pooled - inst.mu_priv))
        scale = float(np.abs(np.concatenate([tr.z_priv, tr.z_pub])).sum())
        worst["a_sum_identity"] = max(worst["a_sum_identity"], _rel_err(tr.sum_total, ref, scale))

        params, inst, ds, estimate = _random_mean_case(rng)
        k = bounds.kappa(params.m, params.tau, params.d)
        tr = fp.mean_statistics(estimate, ds, inst, kappa=k)
        dec = fp.bayes_decomposition(estimate, ds, inst, params)
        scale = float(np.abs(tr.z_priv).sum() + np.abs(tr.z_pub).sum() / k)
        worst["b_decomposition"] = max(worst["b_decomposition"], _rel_err(tr.sum_total, dec.reconstructed_sum, scale))

        rp = RegModelParams(d=int(rng.integers(1, 7)), n=int(rng.integers(1, 40)), m=int(rng.integers(0, 40)), tau=float(rng.uniform(0, 3)))
        seed = RngSeed(int(rng.integers(2**63)), 0)
        ri = sample_reg_instance(rp, seed.child(0))
        rd = sample_reg_dataset(rp, ri, seed.child(1))
        b_hat = ri.beta_priv + rng.standard_normal(rp.d)
        tr = fp.reg_score_statistics(b_hat, rd, ri)
        scale = float(np.abs(np.concatenate([tr.z_priv, tr.z_pub])).sum())
        worst["c_reg_rows_vs_vectorized"] = max(worst["c_reg_rows_vs_vectorized"], _rel_err(tr.sum_total, fp.reg_score_sum(b_hat, rd, ri), scale))
    return CheckResult("c04_fingerprint_identities", all(v <= 1e-10 for v in worst.values()), worst)


# -- 5: oracle equivalences ------------------------------------------------


def check_posterior_oracles(cases: int = 100, root_seed: int = 105) -> CheckResult:
    rng = np.random.default_rng(root_seed)
    worst_mean = 0.0
    for _ in range(cases):
        params = MeanModelParams(
            d=int(rng.integers(1, 5)), n=int(rng.integers(1, 21)), m=int(rng.integers(1, 21)),
            tau=float(rng.uniform(0, 5)), prior_sigma2=float(rng.uniform(0.2, 3)),
        )
        seed = RngSeed(int(rng.integers(2**63)), 0)
        inst = sample_mean_instance(params, seed.child(0))
        ds = sample_mean_dataset(params, inst, seed.child(1))
        closed = est.posterior_mean_shifted(ds, params)
        oracle = est.joint_gaussian_conditional(params, est.empirical_mean(ds.x_pub), est.empirical_mean(ds.x_priv))
        worst_mean = max(worst_mean, _rel_err(closed, oracle, 1.0))
    worst_gls = 0.0
    for _ in range(cases):
        params = RegModelParams(
            d=int(rng.integers(1, 7)), n=int(rng.integers(1, 61)), m=int(rng.integers(0, 61)),
            tau=float(10 ** rng.uniform(-2, 1)), noise_sigma2=float(rng.uniform(0.3, 3)),
            prior_precision_b=float(10 ** rng.uniform(-2, 0.5)),
        )
        seed = RngSeed(int(rng.integers(2**63)), 0)
        inst = sample_reg_instance(params, seed.child(0))
        ds = sample_reg_dataset(params, inst, seed.child(1))
        sigma_inv = est.sigma_inverse(ds.x_pub, params.tau, params.noise_sigma2, ds.n, method="dense")
        a = est.gls_posterior_mean(ds.x, ds.y, sigma_inv, params.prior_precision_b)
        b = est.reg_posterior_via_M_m(ds.x, ds.y, params)
        worst_gls = max(worst_gls, _rel_err(a, b))
    return CheckResult(
        "c05_posterior_oracles", worst_mean <= 1e-8 and worst_gls <= 1e-9,
        {"mean_vs_joint_conditioning": worst_mean, "gls_two_route": worst_gls},
    )


# -- 6: Woodbury -----------------------------------------------------------


def check_woodbury(root_seed: int = 106, m: int = 40, d: int = 4, n: int = 20) -> CheckResult:
    rng = np.random.default_rng(root_seed)
    worst_dense, worst_identity = 0.0, 0.0
    for tau in (0.1, 1.0, 10.0):
        x_pub = rng.standard_normal((m, d))
        op = est.woodbury_sigma_inverse(x_pub, tau, 1.0, n)
        sigma = op.cov.dense()
        dense_inv = np.linalg.inv(sigma)
        wood = op.dense()
        worst_dense = max(worst_dense, float(np.linalg.norm(wood - dense_inv) / np.linalg.norm(dense_inv)))
        z = rng.standard_normal((n + m, 100))
        back = sigma @ op.apply(z)
        worst_identity = max(worst_identity, float(np.max(np.abs(back - z)) / np.max(np.abs(z))))
    return CheckResult(
        "c06_woodbury", worst_dense <= 1e-9 and worst_identity <= 1e-9,
        {"rel_frobenius_vs_dense": worst_dense, "sigma_times_inverse": worst_identity},
    )


# -- 7: lower-bound floor --------------------------------------------------


def check_lower_bound_floor(trials: int = 5000, root_seed: int = 107) -> CheckResult:
    d, n, m = 10, 50, 50
    cfg = ExperimentConfig("mean", d=d, n=n, m=m, tau=0.0, mechanism=_BAYES, trials=trials, root_seed=root_seed, outputs=("sum_total",))
    s = run_experiment(cfg)[0]
    N = n + m
    target = d * N / (N + 1)
    ok = abs(s.mean - target) <= 3 * s.stderr and s.mean >= 0.8 * d
    return CheckResult("c07_lower_bound_floor", ok, {"mean": s.mean, "stderr": s.stderr, "closed_form": target})


# -- 8: DP suppression -----------------------------------------------------


def check_dp_suppression(trials: int = 5000, root_seed: int = 108) -> CheckResult:
    eps_grid = (0.25, 0.5, 1.0, 2.0)
    n = 1000
    means, ses, alphas = [], [], []
    for eps in eps_grid:
        spec = MechanismSpec(MechanismKind.GAUSSIAN_MECH_MEAN, PrivacyBudget(eps, 1e-5))
        cfg = ExperimentConfig("mean", d=10, n=n, m=0, mechanism=spec, trials=trials, root_seed=root_seed, outputs=("sum_priv", "err_l2"))
        s = {x.name: x for x in run_experiment(cfg)}
        means.append(s["sum_priv"].mean)
        ses.append(s["sum_priv"].stderr)
        alphas.append(s["err_l2"].mean)
    increasing = all(b > a for a, b in zip(means, means[1:]))
    separation = (means[-1] - means[0]) / math.hypot(ses[0], ses[-1])
    ratio = np.array(means) / (n * np.array(alphas))
    slope = _slope(eps_grid, ratio) if np.all(ratio > 0) else math.nan
    ok = increasing and separation >= 3 and 0.6 <= slope <= 1.4
    return CheckResult(
        "c08_dp_suppression", ok,
        {"sum_priv": means, "stderr": ses, "alpha": alphas, "separation_sigmas": separation, "slope": slope, "increasing": increasing},
    )


# -- 9: posterior concentration --------------------------------------------


def check_posterior_concentration(trials: int = 5000, root_seed: int = 109) -> CheckResult:
    """Slope of log E||E[mu|X] - Xbar||^2 against log(n + m/kappa), kappa = 2."""
    d, pools, gaps = 5, (50, 100, 200, 400), []
    for pool in pools:
        m, n = pool, pool // 2
        cfg = ExperimentConfig(
            "mean", d=d, n=n, m=m, tau=math.sqrt(d / m), mechanism=_BAYES, trials=trials, root_seed=root_seed, outputs=("posterior_gap",)
        )
        gaps.append(run_experiment(cfg)[0].mean)
    slope = _slope(pools, gaps)
    return CheckResult("c09_posterior_concentration", -3.5 <= slope <= -2.5, {"gap": gaps, "slope": slope, "target_range": [-3.5, -2.5]})


# -- 10: regime transition -------------------------------------------------


def check_regime_transition(trials: int = 10_000, root_seed: int = 110) -> CheckResult:
    d, n, m = 10, 100, 1000
    base = math.sqrt(d / m)
    taus = [base * f for f in np.logspace(-1, 1, 5)]

    def risk(tau, spec):
        cfg = ExperimentConfig("mean", d=d, n=n, m=m, tau=tau, mechanism=spec, trials=trials, root_seed=root_seed, outputs=("err_l2_sq",))
        return run_experiment(cfg)[0].mean

    # same root seed => same mu_priv and private rows in every run below
    bayes = [risk(t, _BAYES) for t in taus]
    w_priv_only = est.conjugate_mean_weights(MeanModelParams(d=d, n=n, m=0))
    private_only = risk(taus[-1], MechanismSpec(MechanismKind.BAYES_POSTERIOR, mix_weights=w_priv_only))
    pooled = risk(0.0, _BAYES)
    w_pub = [est.posterior_weights_mean(MeanModelParams(d=d, n=n, m=m, tau=t)).w_pub for t in taus]
    gap_large = abs(bayes[-1] / private_only - 1)
    gap_small = abs(bayes[0] / pooled - 1)
    monotone = all(b < a for a, b in zip(w_pub, w_pub[1:]))
    return CheckResult(
        "c10_regime_transition", gap_large <= 0.10 and gap_small <= 0.10 and monotone,
        {"taus": taus, "bayes_risk": bayes, "private_only_risk": private_only, "pooled_tau0_risk": pooled,
         "rel_gap_large_tau": gap_large, "rel_gap_small_tau": gap_small, "w_pub": w_pub},
    )


# -- 11: eigenvalue tails --------------------------------------------------


def check_eigval_tails(draws: int = 1000, root_seed: int = 111) -> CheckResult:
    N, d = 300, 3
    upper, _ = bounds.eigval_tail(N, d, 0.1, "max")
    lo, hi = np.empty(draws), np.empty(draws)
    for t in range(draws):
        x = RngSeed(root_seed, t).generator().standard_normal((N, d))
        ev = np.linalg.eigvalsh(x.T @ x)
        lo[t], hi[t] = ev[0], ev[-1]
    frac_lo = float(np.mean(lo < 0.63 * N))
    frac_hi = float(np.mean(hi > upper))
    return CheckResult(
        "c11_eigval_tails", frac_lo <= 0.01 and frac_hi <= 0.01,
        {"frac_min_below_0.63N": frac_lo, "frac_max_above_upper": frac_hi, "upper_threshold": upper},
    )


# -- fast invariants -------------------------------------------------------


def check_bound_collapses() -> CheckResult:
    """Shifted formulas at tau = 0 equal their unshifted forms; kappa(sqrt(d/m)) = 2."""
    ok, worst_kappa = True, 0.0
    for d in range(1, 11):
        for m in (1, 3, 7, 50, 400, 1000):
            worst_kappa = max(worst_kappa, abs(bounds.kappa(m, math.sqrt(d / m), d) - 2.0))
            for n in (0, 10, 100):
                eps, alpha = 0.7, 0.3
                ok &= bounds.mean_upper_bound(n, m, d, 0.0, eps, alpha) == n * eps * alpha + alpha * math.sqrt(m * d)
                ok &= bounds.reg_upper_bound(n, m, d, 0.0, eps, alpha) == n * eps * alpha + alpha * math.sqrt(m * d)
                if n + m:
                    ok &= bounds.posterior_concentration_bound(n, m, d, 0.0) == d / (n + m) ** 3
    ok &= worst_kappa <= 1e-12
    return CheckResult("inv_bound_collapses", bool(ok), {"max_kappa_dev": worst_kappa})


def check_eigval_brackets() -> CheckResult:
    """Lower threshold >= 0.63 z and upper threshold <= 1.44 z for z in {101d..104d}."""
    min_ratio, max_ratio = math.inf, 0.0
    for d in range(1, 11):
        for z in range(101 * d, 104 * d + 1):
            t_lo, _ = bounds.eigval_tail(z, d, 0.1, "min")
            t_hi, _ = bounds.eigval_tail(z, d, 0.1, "max")
            min_ratio = min(min_ratio, t_lo / z)
            max_ratio = max(max_ratio, t_hi / z)
    return CheckResult("inv_eigval_brackets", min_ratio >= 0.63 and max_ratio <= 1.44, {"min_t_over_z": min_ratio, "max_t_over_z": max_ratio})


def check_weight_ladder() -> CheckResult:
    """w_pub falls monotonically in tau; tau -> 0 recovers the pooled conjugate weights."""
    params = MeanModelParams(d=10, n=100, m=1000)
    grid = np.logspace(-3, 3, 40)
    w_pub = [est.posterior_weights_mean(dataclasses.replace(params, tau=float(t))).w_pub for t in grid]
    monotone = all(b < a for a, b in zip(w_pub, w_pub[1:]))
    w0 = est.posterior_weights_mean(params)
    N = params.n + params.m
    pooled = N / (N + 1)
    collapse = max(abs(w0.w_priv - pooled * params.n / N), abs(w0.w_pub - pooled * params.m / N))
    return CheckResult("inv_weight_ladder", monotone and collapse <= 1e-12, {"tau0_collapse_err": collapse, "w_pub_at_max_tau": w_pub[-1]})


def check_stderr_coverage(experiments: int = 100, trials: int = 200, root_seed: int = 112) -> CheckResult:
    """The 3-stderr interval of Z'_i covers 0 in at least 95% of repeated runs."""
    covered = 0
    for e in range(experiments):
        cfg = ExperimentConfig(
            "mean", d=5, n=20, m=20, mechanism=_BAYES, trials=trials, root_seed=root_seed * 1000 + e, outputs=("zprime",), zprime_indices=1, zprime_source="all"
        )
        s = run_experiment(cfg)[0]
        covered += abs(s.mean) <= 3 * s.stderr
    return CheckResult("inv_stderr_coverage", covered >= 0.95 * experiments, {"coverage": covered / experiments})


FAST_CHECKS = (
    check_fingerprint_identities,
    check_posterior_oracles,
    check_woodbury,
    check_bound_collapses,
    check_eigval_brackets,
    check_weight_ladder,
)

FULL_CHECKS = FAST_CHECKS + (
    check_gls_whitened_risk,
    check_ols_projected_risk,
    check_resampled_null,
    check_lower_bound_floor,
    check_dp_suppression,
    check_posterior_concentration,
    check_regime_transition,
    check_eigval_tails,
    check_stderr_coverage,
)


def _timed(fn) -> CheckResult:
    start = time.perf_counter()
    try:
        res = fn()
    except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
        res = CheckResult(fn.__name__.removeprefix("check_"), False, detail=f"raised {type(exc).__name__}: {exc}")
    res.elapsed = time.perf_counter() - start
    return res


def verify_suite(level: str = "fast", progress=None) -> VerifyReport:
    """Run every check registered for ``level`` ('fast' or 'full')."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    start = time.perf_counter()
    results = []
    for fn in FAST_CHECKS if level == "fast" else FULL_CHECKS:
        res = _timed(fn)
        results.append(res)
        if progress is not None:
            progress(res)
    return VerifyReport(level, results, time.perf_counter() - start)
