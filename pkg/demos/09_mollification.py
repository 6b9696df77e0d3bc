"""Mollification and the regularize-approximate scheme.

Convolution with the unit-mass bump contracts every L^p norm exactly; for a
problem with rough Holder coefficients, solving the mollified problems with
the true solution as boundary data converges back in H^1 as the kernel
shrinks.
"""

import numpy as np

from schauderlab import Field, box_region, lp_norm, make_grid, mollify, regularize_approximate
from schauderlab.generators import random_problem

grid = make_grid(2, 1.0, 65)
rng = np.random.default_rng(0)
box = box_region(grid)

print("== exact L2 contraction on white-noise fields ==")
for trial in range(3):
    g = Field(grid, rng.standard_normal(grid.shape))
    smooth = mollify(g, 4 * grid.h)
    print(f"trial {trial}: ||g_eps||_2 = {lp_norm(smooth, 2, box).value:.4f}  "
          f"<=  ||g||_2 = {lp_norm(g, 2, box).value:.4f}")

print("\n== approximation scheme on rough-Holder coefficients ==")
grid = make_grid(2, 1.0, 129)
problem = random_problem(grid, np.random.default_rng(21), rough_alpha=0.4, beta=0.2)
record = regularize_approximate(problem, [8 * grid.h, 4 * grid.h, 2 * grid.h * 1.01])
for row in record.rows:
    print(f"eps = {row['eps']:.4f}:  ||u_eps - u||_H1 = {row['h1_gap']:.4e}   "
          f"lam_eps = {row['lam_eps']:.4f}")
print("H1 gaps strictly decreasing:", record.decreasing)
print("||u_eps||_2 <= 2 ||u||_2 along the schedule:", record.l2_bound_ok)
print("mollified ellipticity stays in the envelope:", record.ellipticity_ok)
