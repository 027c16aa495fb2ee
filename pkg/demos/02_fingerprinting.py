"""
Fingerprinting statistics
=========================

Z_i = <M(X) - mu, x_i - mu> measures how much an estimate leans on row i.
A good estimate must make the sum of Z_i large (about d for the Bayes
posterior).  Rerunning the estimate with row i redrawn gives Z'_i, which has
mean zero.  A differentially private estimate cannot tell the two apart
by much.
"""

import pubpriv as pp

d, n = 10, 100
params = pp.MeanModelParams(d=d, n=n, m=0)

# The Bayes posterior on private data alone: E[sum Z] = d * n / (n + 1).
cfg = pp.ExperimentConfig(problem="mean", d=d, n=n, m=0, trials=2000,
                          mechanism=pp.MechanismSpec(pp.MechanismKind.BAYES_POSTERIOR),
                          outputs=("sum_total", "z_paired", "zprime"))
stats = {s.name: s for s in pp.run_experiment(cfg)}
print(f"Bayes:  E[sum Z] = {stats['sum_total'].mean:.3f} +- {stats['sum_total'].stderr:.3f}"
      f"   (closed form {d * n / (n + 1):.3f})")
print(f"        E[Z_i] = {stats['z_paired'].mean:.4f},  E[Z'_i] = {stats['zprime'].mean:.4f}")

# The Gaussian mechanism: compare the gap |E Z - E Z'| with the DP bound.
print("\n  eps    E[Z_i]    E[Z'_i]    gap     bound")
for eps in [0.25, 0.5, 1.0]:
    spec = pp.MechanismSpec(pp.MechanismKind.GAUSSIAN_MECH_MEAN, pp.PrivacyBudget(eps, 1e-5))
    cfg = pp.ExperimentConfig(problem="mean", d=d, n=n, m=0, trials=2000, mechanism=spec,
                              outputs=("z_paired", "z_paired_sq", "zprime", "zprime_sq", "zprime_abs"))
    s = {x.name: x.mean for x in pp.run_experiment(cfg)}
    bound = pp.dp_indistinguishability_bound(s["zprime_abs"], s["zprime_sq"], s["z_paired_sq"], eps, 1e-5)
    gap = abs(s["z_paired"] - s["zprime"])
    print(f"{eps:5.2f} {s['z_paired']:9.4f} {s['zprime']:9.4f} {gap:8.4f} {bound:8.4f}")

# Each trial can be replayed exactly from (config, trial index).
rec_a, rec_b = pp.run_trial(cfg, 17), pp.run_trial(cfg, 17)
print(f"\nreplay of trial 17 identical: {rec_a.stats == rec_b.stats}")
print(f"sample thresholds for alpha=0.5, eps=1: {pp.sample_thresholds(d, 0.5, 1.0)}")
