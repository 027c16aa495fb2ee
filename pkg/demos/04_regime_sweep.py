"""
Sweeping the shift
==================

Below tau = sqrt(d/m) the public sample behaves almost like extra private
data.  Above it, each public row counts as only 1/kappa of a row.  This
script sweeps tau with the harness and writes the table as CSV.
"""

import math
import sys

import numpy as np

import pubpriv as pp

d, n, m = 10, 100, 100
threshold = math.sqrt(d / m)
taus = threshold * np.logspace(-1, 1, 5)

base = pp.ExperimentConfig(problem="mean", d=d, n=n, m=m, trials=1000, root_seed=7,
                           mechanism=pp.MechanismSpec(pp.MechanismKind.BAYES_POSTERIOR),
                           outputs=("err_l2_sq", "sum_total", "sum_pub_weighted"))
table = pp.run_sweep(base, "tau", taus)

print(f"threshold tau = {threshold:.3f}")
print("  tau/thr   kappa   risk      E[sum Z]   public share")
for tau, stats in table:
    s = {x.name: x.mean for x in stats}
    k = pp.kappa(m, tau, d)
    share = (m / k) / (n + m / k)
    print(f"{tau / threshold:8.2f} {k:7.2f} {s['err_l2_sq']:8.4f} {s['sum_total']:10.3f} {share:10.3f}")

print("\nCSV:")
sys.stdout.write(pp.results_to_csv(table))
