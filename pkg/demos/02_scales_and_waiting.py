"""From a velocity field to a waiting time.

r_star is the last radius at which box averages of the field (over N^(d+1)
sub-boxes) are still at least epsilon in size.  The waiting time T is
how long it takes until the reachable set swallows a ball growing at
speed c.  Large-scale structure should make both large.
"""
import numpy as np

from gcoerce import experiments, field, stats
from gcoerce.store import load_config
from pathlib import Path

here = Path(__file__).parent
conf = experiments.ExperimentConfig.from_dict(load_config(here / "small.toml"))

fld = field.from_config(conf.field, seed=0)
es = stats.r_star(fld, (0.0, (0.0, 0.0)), conf.N, conf.epsilon, conf.r_min, conf.r_max)
print("E_N over the radius grid (seed 0):")
for r, e in zip(es.r_values[::3], es.E_N_values[::3]):
    print(f"  r = {r:6.3f}   E_N = {e:.4f}")
print(f"r_star = {es.r_star:.3f} (censored: {es.censored})")

recs = experiments.run_waiting_time_ensemble(conf, write=False)
for c, frac in experiments.supremal_c(recs)["uncensored_fraction"].items():
    print(f"c = {c}: {frac:.0%} of runs finished within the horizon")

fast = [r for r in recs if r.c == conf.c_values[-1]]
# a faster ball is contained later, so its waiting times spread out more
T = np.array([r.measured_T for r in fast])
print(f"waiting times at c = {conf.c_values[-1]}:", np.round(T, 3))
if len(fast) >= 10:
    rep = experiments.correlate_T_rstar(fast, n_permutations=999)
    print(f"Spearman(T, r_star) = {rep.spearman:.3f}, permutation p = {rep.p_value:.3f}")
