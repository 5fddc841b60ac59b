"""Calderón-Zygmund stopping cubes, the sparse bound, and the one-third trick.

Run with ``python demos/stopping_cubes.py``.
"""
import numpy as np

from varlex.cz import cz_decompose, sparse_domination_check
from varlex.grid import AllCubes, DomainGrid, enumerate_cubes, unit_interval_grid
from varlex.operators import dyadic_shifted_cover_check, fractional_maximal

g = unit_interval_grid(64)
f = (g.axis_centers() < 0.25).astype(float)

# a = 4, level k = -1: the average 1/4 on [0, 1) does not exceed a^-1, the average 1/2 on [0, 1/2) does.
dec = cz_decompose([f], None, 0.0, 4.0, g, k_range=(-1, 0))
for lv in dec.levels:
    cubes = [tuple(round(x, 4) for x in q.bounds(g)[0]) for q in lv.cubes]
    print(f"level k = {lv.k}: threshold {lv.threshold}, cubes {cubes}, products {lv.products}")
print("structural checks:", dec.check())

# Bilinear, alpha = 1/2: every level, every residual set, and the sparse sum.
rng = np.random.default_rng(1)
g = unit_interval_grid(1024)
f1, f2 = rng.exponential(size=1024), rng.exponential(size=1024) * (rng.random(1024) < 0.2)
alpha = 0.5
a = 2 ** (2 - alpha) + 1
dec = cz_decompose([f1, f2], None, alpha, a, g)
rep = sparse_domination_check(dec, [f1, f2], None, alpha)
print(f"levels {dec.k_range}, {sum(len(lv.cubes) for lv in dec.levels)} stopping cubes, "
      f"max M / sparse = {rep.max_ratio:.3f} (bound {a * 2 ** (2 - alpha):.3f})")

# One-third trick: the full maximal function against the sum over shifted grids.
for N in (256, 512, 1024):
    g = DomainGrid(1, 1.0, N)
    bump = np.exp(-40 * g.axis_centers() ** 2)
    rep = dyadic_shifted_cover_check([bump], 0.0, g)
    dyad = fractional_maximal([bump], 0.0, enumerate_cubes(g)).values
    full = fractional_maximal([bump], 0.0, AllCubes(g)).values
    print(f"N = {N}: covering constant {rep.max_ratio:.5f}, dyadic <= full everywhere: {bool(np.all(dyad <= full))}")
