"""Grow a front from a point and compare it with what we know exactly.

With no flow the reachable set is a ball of radius A t.  With a constant
drift the ball is carried along.  In a cellular flow there is no formula,
so the level-set answer is checked against a brute-force trajectory
oracle instead.
"""
import math

import numpy as np

from gcoerce import experiments, field, frontier

h, t = 1 / 64, 0.5

# zero field: the 0.5-level set should be the circle of radius t
n = int(math.ceil(frontier.required_side(1.0, 0.0, t, 2 * h) / h)) + 2
grid = frontier.GridSpec.centered((0.0, 0.0), n, h)
state = frontier.evolve(frontier.init_point_source(grid, (0.0, 0.0), 2 * h), field.make_zero(2), t)[-1]
rs = frontier.reachable_indicator(state)
print(f"zero field     |R_t| / pi t^2 = {frontier.volume(rs) / (math.pi * t * t):.4f}")
print(f"               inscribed radius - t = {frontier.inscribed_ball_radius(rs, (0.0, 0.0)) - t:+.4f}")

# constant drift (0.5, 0): same circle, centre moved by v t
v = np.array([0.5, 0.0])
n = int(math.ceil(frontier.required_side(1.0, 0.5, t, 2 * h) / h)) + 2
grid = frontier.GridSpec.centered((0.0, 0.0), n, h)
state = frontier.evolve(frontier.init_point_source(grid, (0.0, 0.0), 2 * h), field.make_constant(v), t)[-1]
pts = frontier.level_crossings(state)
dev = np.linalg.norm(pts - v * t, axis=1) - t
print(f"drift          distance to shifted circle in [{dev.min() / h:+.2f}h, {dev.max() / h:+.2f}h]")

# cellular flow: level set vs trajectory oracle
cell = field.make_cellular(2.0, 1.0)
sd = experiments.oracle_agreement(cell, t=0.3, n=128, h=1 / 32)
print(f"cellular M=2   oracle symmetric difference / union = {sd:.3f}")

# the front never outruns A + M
fld = field.make_random_fourier(4.0, 8, 1, 1.0, seed=3)
T = 1.0
n = int(math.ceil(frontier.required_side(1.0, 4.0, T, 4 * h) / h)) + 2
grid = frontier.GridSpec.centered((0.0, 0.0), n, 2 * h)
rec = frontier.waiting_time(fld, (0.0, (0.0, 0.0)), 0.2, T, grid, n_samples=32)
speed = np.max((rec.outer_radius[1:] - rec.delta) / (rec.times[1:] - rec.times[0]))
print(f"random M=4     max outer radius / t = {speed:.2f} (bound A + M = 5)")
