"""Luxemburg norms, Hölder quotients and multiple weight constants on [0, 1).

Run with ``python demos/variable_exponent_norms.py``.
"""
import numpy as np

from varlex.exponents import conjugate, constant_exponent, derive_q, make_exponent
from varlex.grid import enumerate_cubes, field_from_function, unit_interval_grid
from varlex.lebesgue import holder_check, holder_constant, luxemburg_norm, modular
from varlex.weights import WeightVector, multi_apq_constant

g = unit_interval_grid(1024)
p = make_exponent(g, field_from_function(g, lambda x: 2 + 0.5 * np.sin(2 * np.pi * x)).values)

# For constant exponents the Luxemburg norm is the usual L^p norm.
f = field_from_function(g, lambda x: np.exp(-8 * (x - 0.3) ** 2))
for p0 in (1.5, 2.0, 3.0):
    lux = luxemburg_norm(f, constant_exponent(g, p0)).norm
    print(f"p = {p0}: Luxemburg {lux:.12f}  closed form {np.mean(f.values ** p0) ** (1 / p0):.12f}")

# With a variable exponent the norm of f = 1 + x solves  int ((1 + x)/lam)^{p(x)} dx = 1.
ramp = 1 + g.axis_centers()
res = luxemburg_norm(ramp, p)
print(f"||1 + x||_p(.) = {res.norm:.10f}, modular there {modular(ramp / res.norm, p):.12f}, "
      f"{res.iterations} Newton steps")

# Hölder: int |fg| <= (1/p- + 1/p'-) ||f|| ||g||, and 4 is the textbook constant.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(200):
    a, b = rng.exponential(size=g.shape), rng.exponential(size=g.shape)
    lhs, rhs = holder_check(a, b, p)
    worst = max(worst, lhs / (rhs / 4))
print(f"largest Hölder quotient {worst:.4f} against the constant {holder_constant(p):.4f}")

# The constant weight vector has multiple weight constant 1 whatever alpha is.
fam = enumerate_cubes(unit_interval_grid(256), K=6)
g2 = fam.grid
for alpha in (0.0, 0.25):
    ps = [constant_exponent(g2, 4.0)] * 2
    q = derive_q(constant_exponent(g2, 2.0), alpha)
    wv = WeightVector([np.ones(g2.shape)] * 2, ps, q)
    print(f"alpha = {alpha}: [1]_A = {multi_apq_constant(wv, alpha, fam).value:.15f}")

# |x - 1/2|^gamma is an A_2 weight for -1 < gamma < 1; the constant blows up near 1.
p2 = constant_exponent(g2, 2.0)
for gamma in (0.5, 0.8, 0.95):
    w = np.abs(g2.axis_centers() - 0.5) ** gamma
    wv = WeightVector([w], [p2], p2)
    print(f"gamma = {gamma}: [w]_A2 = {multi_apq_constant(wv, 0.0, enumerate_cubes(g2, 'all')).value:.4f}")
print("conjugate of 2 + sin/2 ranges over", np.round([conjugate(p).p_minus, conjugate(p).p_plus], 4))
