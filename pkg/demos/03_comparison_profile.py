"""The volume of Box_r inside R_t against the comparison profile phi.

phi solves y' = (lambda_1 / 2) min(y, 1 - y)^((d-1)/d) with phi(0) = 0,
phi(b) = 1/2 and phi(2b) = 1.  For the zero field, the filled fraction
of a box around the source should sit above phi once it passes alpha.
"""
import math

import numpy as np

from gcoerce import experiments, field, frontier, theory

p = theory.theorem_parameters(2.0, d=2, C=2.0)
print("theorem parameters at M = 2:")
for key in ("epsilon", "N", "L", "alpha", "beta", "gamma", "a", "b"):
    print(f"  {key:8s} {p.to_dict()[key]}")

b = p.b
for s in np.linspace(0, 2, 9):
    print(f"  phi({s:4.2f} b) = {float(theory.phi(s * b, p)):.4f}")

h = 1 / 64
r = 32 * h
dur = r / math.sqrt(2) + 4 * h
n = int(math.ceil(frontier.required_side(1.0, 0.0, dur, 2 * h) / h)) + 2
grid = frontier.GridSpec.centered((0.0, 0.0), n, h)
rec = frontier.waiting_time(field.make_zero(2), (0.0, (0.0, 0.0)), 0.5, dur, grid, n_samples=128,
                            box_sides=(r,))
q = theory.theorem_parameters(1.0, d=2, C=2.0, strict=False)
rep = experiments.phi_domination_check(rec, r, q)
print(f"box side {r}: {rep.status}, min slack {rep.min_slack:.3f}, "
      f"t2 - t1 = {rep.t2_minus_t1:.3f} (bound {rep.t2_bound:.3f})")
