import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pubpriv import (
    MeanDataset,
    MeanInstance,
    MeanModelParams,
    MechanismKind,
    MechanismSpec,
    ParameterError,
    PrivacyBudget,
    RegDataset,
    RegInstance,
    RegModelParams,
    RngSeed,
    bayes_decomposition,
    dp_indistinguishability_bound,
    gls_estimate,
    gls_score_statistic,
    kappa,
    kappa_weighted_pooled_mean,
    mean_statistics,
    paired_statistics,
    reg_score_statistics,
    reg_score_sum,
    resampled_statistic,
    sample_mean_dataset,
    sample_mean_instance,
    sample_reg_dataset,
    sample_reg_instance,
    sigma_inverse,
)


def _mean_trial(params, seed):
    inst = sample_mean_instance(params, seed.child(0))
    return inst, sample_mean_dataset(params, inst, seed.child(1))


class TestMeanStatistics:
    def test_exact_estimate_gives_zero(self):
        params = MeanModelParams(d=4, n=6, m=5, tau=1.0)
        inst, ds = _mean_trial(params, RngSeed(1))
        tr = mean_statistics(inst.mu_priv, ds, inst, kappa=3.0)
        np.testing.assert_array_equal(tr.z_priv, 0.0)
        np.testing.assert_array_equal(tr.z_pub, 0.0)
        assert tr.sum_total == 0.0

    def test_hand_example(self):
        inst = MeanInstance(np.zeros(1), np.zeros(1), np.zeros(1))
        ds = MeanDataset(np.array([[2.0]]), np.array([[3.0]]))
        tr = mean_statistics(np.array([1.0]), ds, inst, kappa=2.0)
        assert tr.sum_priv == 2.0
        assert tr.sum_pub_weighted == 1.5
        assert tr.sum_total == 3.5

    def test_rejects_small_kappa(self):
        inst = MeanInstance(np.zeros(1), np.zeros(1), np.zeros(1))
        ds = MeanDataset(np.array([[2.0]]), np.array([[3.0]]))
        with pytest.raises(ParameterError):
            mean_statistics(np.zeros(1), ds, inst, kappa=0.5)

    @settings(max_examples=40, deadline=None)
    @given(d=st.integers(1, 5), n=st.integers(1, 15), m=st.integers(0, 15), tau=st.floats(0, 5), seed=st.integers(0, 2**31))
    def test_decomposition_identity(self, d, n, m, tau, seed):
        params = MeanModelParams(d=d, n=n, m=m, tau=tau)
        inst, ds = _mean_trial(params, RngSeed(seed))
        estimate = RngSeed(seed, 1).generator().standard_normal(d)
        k = kappa(m, tau, d)
        tr = mean_statistics(estimate, ds, inst, kappa=k)
        dec = bayes_decomposition(estimate, ds, inst, params)
        assert math.isclose(dec.reconstructed_sum, tr.sum_total, rel_tol=1e-9, abs_tol=1e-9 * (1 + abs(tr.sum_total)))

    def test_decomposition_at_pool_has_no_cross_term(self):
        params = MeanModelParams(d=3, n=8, m=9, tau=0.7)
        inst, ds = _mean_trial(params, RngSeed(2))
        xbar = kappa_weighted_pooled_mean(ds, kappa(9, 0.7, 3))
        assert abs(bayes_decomposition(xbar, ds, inst, params).cross_term) < 1e-15


class TestBayesFloor:
    def test_score_mean_matches_closed_form(self):
        # independent oracle: sample the pooled mean directly, no harness
        d, N, trials = 6, 40, 20_000
        c = N / (N + 1)
        rng = RngSeed(77).generator()
        mu = rng.standard_normal((trials, d))
        xbar = mu + rng.standard_normal((trials, d)) / math.sqrt(N)
        sums = N * np.einsum("ij,ij->i", c * xbar - mu, xbar - mu)
        se = sums.std(ddof=1) / math.sqrt(trials)
        assert abs(sums.mean() - d * c) <= 3 * se

    def test_quad_term_mean(self):
        d, n, m = 10, 100, 100
        tau = math.sqrt(d / m)
        params = MeanModelParams(d=d, n=n, m=m, tau=tau)
        q = []
        for t in range(5000):
            inst, ds = _mean_trial(params, RngSeed(5, t))
            q.append(bayes_decomposition(inst.mu_priv, ds, inst, params).quad_term)
        target = d / (n + m / kappa(m, tau, d))
        assert abs(np.mean(q) / target - 1) <= 0.10


class TestResampled:
    def test_public_only_pairs_exactly_on_private_rows(self):
        params = MeanModelParams(d=3, n=5, m=7)
        spec = MechanismSpec(MechanismKind.PUBLIC_ONLY_MEAN)
        inst, ds = _mean_trial(params, RngSeed(3))
        for i in range(params.n):
            z, zp = paired_statistics(spec, ds, inst, params, i, RngSeed(3).child(3, i))
            assert z == zp

    def test_resampled_matches_paired(self):
        params = MeanModelParams(d=3, n=5, m=7, tau=0.4)
        spec = MechanismSpec(MechanismKind.BAYES_POSTERIOR)
        inst, ds = _mean_trial(params, RngSeed(4))
        seed = RngSeed(4).child(3, 2)
        assert resampled_statistic(spec, ds, inst, params, 2, seed) == paired_statistics(spec, ds, inst, params, 2, seed)[1]

    def test_index_range(self):
        params = MeanModelParams(d=2, n=2, m=2)
        inst, ds = _mean_trial(params, RngSeed(0))
        with pytest.raises(ParameterError):
            resampled_statistic(MechanismSpec(MechanismKind.BAYES_POSTERIOR), ds, inst, params, 4, RngSeed(0))

    @pytest.mark.parametrize(
        "spec",
        [
            MechanismSpec(MechanismKind.BAYES_POSTERIOR),
            MechanismSpec(MechanismKind.PUBLIC_ONLY_MEAN),
            MechanismSpec(MechanismKind.GAUSSIAN_MECH_MEAN, PrivacyBudget(1.0, 1e-5)),
        ],
        ids=lambda s: s.kind.value,
    )
    def test_null_mean_zero(self, spec):
        params = MeanModelParams(d=3, n=10, m=10, tau=0.5)
        zp = []
        for t in range(4000):
            seed = RngSeed(21, t)
            inst, ds = _mean_trial(params, seed)
            zp.append(resampled_statistic(spec, ds, inst, params, t % params.n, seed.child(3, t % params.n)))
        zp = np.array(zp)
        assert abs(zp.mean()) <= 3 * zp.std(ddof=1) / math.sqrt(zp.size)


class TestDpAudit:
    @pytest.mark.slow
    def test_bound_covers_gap(self):
        rng = RngSeed(31).generator()
        covered, draws, trials = 0, 20, 5000
        for k in range(draws):
            d, n = int(rng.integers(2, 4)), int(rng.integers(20, 60))
            eps, delta = float(rng.uniform(0.2, 1.0)), float(10 ** rng.uniform(-6, -3))
            params = MeanModelParams(d=d, n=n, m=0)
            spec = MechanismSpec(MechanismKind.GAUSSIAN_MECH_MEAN, PrivacyBudget(eps, delta))
            z, zp = np.empty(trials), np.empty(trials)
            for t in range(trials):
                seed = RngSeed(1000 + k, t)
                inst, ds = _mean_trial(params, seed)
                i = t % n
                z[t], zp[t] = paired_statistics(spec, ds, inst, params, i, seed.child(3, i))
            bound = dp_indistinguishability_bound(np.abs(zp).mean(), (zp**2).mean(), (z**2).mean(), eps, delta)
            covered += abs(z.mean() - zp.mean()) <= bound
        assert covered / draws >= 0.95


class TestRegressionScores:
    def _data(self, d=3, n=10, m=10, tau=0.0, seed=0, **kw):
        params = RegModelParams(d=d, n=n, m=m, tau=tau, **kw)
        inst = sample_reg_instance(params, RngSeed(seed))
        return params, inst, sample_reg_dataset(params, inst, RngSeed(seed, 1))

    def test_hand_example(self):
        ds = RegDataset(x=np.array([[1.0, 2.0]]), y=np.array([3.0]), eta=np.array([3.0]), n=1)
        inst = RegInstance(np.zeros(2), np.zeros(2), np.zeros(2))
        tr = reg_score_statistics(np.array([1.0, 1.0]), ds, inst)
        np.testing.assert_array_equal(tr.z_priv, [9.0])
        ds = RegDataset(x=np.array([[1.0, 1.0]]), y=np.array([3.0]), eta=np.array([3.0]), n=1)
        assert reg_score_statistics(np.array([1.0, 1.0]), ds, inst).sum_total == 6.0

    def test_exact_estimate_gives_zero(self):
        params, inst, ds = self._data(tau=0.5)
        assert reg_score_statistics(inst.beta_priv, ds, inst).sum_total == 0.0
        inv = sigma_inverse(ds.x_pub, 0.5, 1.0, ds.n)
        assert gls_score_statistic(inst.beta_priv, ds, inst, inv) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(d=st.integers(1, 5), n=st.integers(1, 20), m=st.integers(0, 20), seed=st.integers(0, 2**31))
    def test_vectorized_sum(self, d, n, m, seed):
        params = RegModelParams(d=d, n=n, m=m, tau=1.0)
        inst = sample_reg_instance(params, RngSeed(seed))
        ds = sample_reg_dataset(params, inst, RngSeed(seed, 1))
        est = RngSeed(seed, 2).generator().standard_normal(d)
        per_row = reg_score_statistics(est, ds, inst).sum_total
        assert math.isclose(per_row, reg_score_sum(est, ds, inst), rel_tol=1e-9, abs_tol=1e-9)

    def test_gls_score_is_scaled_sum_at_tau_zero(self):
        params, inst, ds = self._data(d=4, n=15, m=15, noise_sigma2=0.5)
        est = RngSeed(9).generator().standard_normal(4)
        inv = sigma_inverse(ds.x_pub, 0.0, 0.5, ds.n)
        expect = -reg_score_sum(est, ds, inst) / 0.5
        assert math.isclose(gls_score_statistic(est, ds, inst, inv), expect, rel_tol=1e-10)

    def test_gls_score_mean_is_minus_d(self):
        d, n, m, tau = 8, 400, 400, 1.0
        params = RegModelParams(d=d, n=n, m=m, tau=tau)
        vals = []
        for t in range(2000):
            inst = sample_reg_instance(params, RngSeed(41, t))
            ds = sample_reg_dataset(params, inst, RngSeed(41, t).child(1))
            inv = sigma_inverse(ds.x_pub, tau, 1.0, n, method="woodbury")
            vals.append(gls_score_statistic(gls_estimate(ds.x, ds.y, inv), ds, inst, inv))
        mean = np.mean(vals)
        assert mean < 0
        assert 0.8 * d <= abs(mean) <= 1.2 * d
