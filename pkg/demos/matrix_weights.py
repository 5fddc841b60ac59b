"""Reducing operators and the two matrix weight constants for a 2 x 2 field.

Run with ``python demos/matrix_weights.py``.
"""
import numpy as np

from varlex.exponents import derive_q, make_exponent
from varlex.grid import enumerate_cubes, unit_interval_grid
from varlex.matrix import (directions, certify, matrix_apq_direct, matrix_apq_reduced, matrix_field_from_spec,
                           norm_bound_check, reducing_operator)

g = unit_interval_grid(64)
fam = enumerate_cubes(g, K=3)
W = matrix_field_from_spec(g, {"kind": "random", "d": 2, "spread": 1.0}, rng=3)
p = make_exponent(g, 1.6 + 0.8 * np.random.default_rng(4).random(64))
alpha = 0.25
q = derive_q(p, alpha)

# The ellipsoid of the averaged norm v -> <|W v|>_Q, calibrated so |Mv| never undershoots.
Q = fam[0]
op = reducing_operator(W, q, Q)
lo, hi = certify(op, W, q, directions(2, 1000, offset=0.5))
print("reducing operator on the window:\n", np.round(op.matrix, 6))
print(f"|Mv| / <r>(v) on 1000 fresh directions: [{lo:.6f}, {hi:.6f}], sqrt(2) = {np.sqrt(2):.6f}")

# Direct and reduced constants are comparable; the ratio stays near 1 on these fields.
direct = matrix_apq_direct(W, p, q, alpha, fam).value
reduced = matrix_apq_reduced(W, p, q, alpha, fam).value
print(f"direct {direct:.5f}  reduced {reduced:.5f}  ratio {direct / reduced:.4f}")

# The scalar field ||W|| inherits a constant at most d times the matrix one.
rep = norm_bound_check(W, p, q, alpha, fam)
print(f"[||W||] = {rep.norm_constant:.4f} <= d [W] = {rep.bound:.4f}; "
      f"sum of [|W e_i|] = {sum(rep.basis_constants):.4f}")
