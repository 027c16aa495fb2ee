"""
Mean estimation with a shifted public sample
============================================

A private sample is centred at mu_priv.  A public sample is centred at
mu_priv + v, where ||v|| is roughly tau.  This script shows how the posterior
weight on the public mean falls as tau grows, and how the risk moves with it.
"""

import math

import numpy as np

import pubpriv as pp

d, n, m = 10, 100, 1000
print(f"d={d}, n={n}, m={m}; regime threshold sqrt(d/m) = {math.sqrt(d / m):.3f}")

# Weights of the two empirical means in E[mu_priv | data].
print("\n   tau     kappa   w_priv   w_pub   regime")
for tau in [0.0, 0.03, 0.1, 0.3, 1.0, 3.0]:
    params = pp.MeanModelParams(d=d, n=n, m=m, tau=tau)
    w = pp.posterior_weights_mean(params)
    regime = pp.classify_regime(params).regime
    print(f"{tau:6.2f} {pp.kappa(m, tau, d):9.2f} {w.w_priv:8.4f} {w.w_pub:7.4f}   {regime}")

# One draw: the weights agree with brute-force Gaussian conditioning.
params = pp.MeanModelParams(d=d, n=n, m=m, tau=0.3)
inst = pp.sample_mean_instance(params, pp.RngSeed(1))
ds = pp.sample_mean_dataset(params, inst, pp.RngSeed(1, 1))
lemma = pp.posterior_mean_shifted(ds, params)
brute = pp.joint_gaussian_conditional(params, ds.x_pub.mean(0), ds.x_priv.mean(0))
print(f"\nclosed form vs block conditioning: max diff {np.abs(lemma - brute).max():.2e}")

# Monte Carlo risk of the posterior mean and of the public mean alone.
print("\n   tau   risk(Bayes)   risk(public only)")
for tau in [0.0, 0.1, 1.0]:
    row = []
    for kind in (pp.MechanismKind.BAYES_POSTERIOR, pp.MechanismKind.PUBLIC_ONLY_MEAN):
        cfg = pp.ExperimentConfig(problem="mean", d=d, n=n, m=m, tau=tau, trials=400,
                                  mechanism=pp.MechanismSpec(kind), outputs=("err_l2_sq",))
        row.append(pp.run_experiment(cfg)[0])
    print(f"{tau:6.2f}   {row[0].mean:.4f} +- {row[0].stderr:.4f}   {row[1].mean:.4f} +- {row[1].stderr:.4f}")
