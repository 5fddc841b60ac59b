import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from varlex.exponents import constant_exponent, derive_q, make_exponent
from varlex.grid import enumerate_cubes, unit_interval_grid
from varlex.matrix import (MatrixWeightField, averaging_probes, averaging_ratio, avg_norm, certify,
                           christ_goldberg, directions, matrix_apq_direct, matrix_apq_reduced,
                           matrix_field_from_spec, norm_bound_check, reducing_operator, rotation,
                           scalar_projections, vector_average)
from varlex.operators import fractional_maximal
from varlex.weights import apq_constant

G = unit_interval_grid(32)
FAM = enumerate_cubes(G, K=3)


def _lux(vals, p, cv):
    return float(np.exp(brentq(lambda s: np.log(np.sum((vals / np.exp(s)) ** p) * cv), -50, 50, xtol=1e-14)))


def _exponents(rng, alpha=0.25):
    p = make_exponent(G, 1.5 + 1.3 * rng.random(32))
    return p, derive_q(p, alpha), alpha


def _field(seed, d=2, spread=1.0):
    return matrix_field_from_spec(G, {"kind": "random", "d": d, "spread": spread}, rng=seed)


def test_field_validation_and_json():
    W = _field(0)
    assert W.d == 2
    back = MatrixWeightField.from_dict(json.loads(json.dumps(W.to_dict())))
    assert np.array_equal(back.values, W.values)
    bad = np.array(W.values)
    bad[0, 0, 1] += 1e-3
    with pytest.raises(ValueError, match="symmetric"):
        MatrixWeightField(G, bad)
    with pytest.raises(ValueError, match="positive definite"):
        MatrixWeightField(G, -np.array(W.values))
    with pytest.raises(ValueError):
        MatrixWeightField(G, np.ones((32, 5, 5)))


def test_avg_norm_examples():
    Q = FAM[1]
    for p0 in (1.5, 2.0, 3.0):
        p = constant_exponent(G, p0)
        I = matrix_field_from_spec(G, {"kind": "identity", "d": 2})
        assert avg_norm(I, p, Q, [0.6, -0.8]) == pytest.approx(1.0, rel=1e-10)
        D = matrix_field_from_spec(G, {"kind": "diagonal", "diag": [2.0, 3.0]})
        assert avg_norm(D, p, Q, [1.0, 0.0]) == pytest.approx(2.0, rel=1e-10)


def test_avg_norm_against_scalar_pipeline():
    rng = np.random.default_rng(1)
    W = _field(1)
    p = make_exponent(G, 1.2 + 3 * rng.random(32))
    for Q in FAM:
        lo, hi = Q.axis_range(G, 0)
        v = rng.standard_normal(2)
        r = np.linalg.norm(W.values[lo:hi] @ v, axis=1)
        pv = p.values[lo:hi]
        pQ = 1 / np.mean(1 / pv)
        want = Q.measure(G) ** (-1 / pQ) * _lux(r, pv, G.cell_volume)
        assert avg_norm(W, p, Q, v) == pytest.approx(want, rel=1e-9)


def test_reducing_operator_identity_and_diagonal():
    p = constant_exponent(G, 2.0)
    Q = FAM[0]
    I = matrix_field_from_spec(G, {"kind": "identity", "d": 2})
    op = reducing_operator(I, p, Q)
    assert np.allclose(op.ellipsoid, np.eye(2), atol=1e-6)
    assert op.certified and op.lower >= 1
    # the certified matrix is inflated only by the polygon inradius of the samples
    assert np.allclose(op.matrix, np.eye(2), atol=2e-4)
    D = matrix_field_from_spec(G, {"kind": "diagonal", "diag": [2.0, 3.0]})
    op = reducing_operator(D, p, Q)
    assert np.allclose(op.ellipsoid, np.diag([2.0, 3.0]), atol=1e-6)
    R = rotation(0.4)
    rot = MatrixWeightField(G, np.broadcast_to(R @ np.diag([2.0, 3.0]) @ R.T, (32, 2, 2)))
    assert np.allclose(reducing_operator(rot, p, Q).ellipsoid, R @ np.diag([2.0, 3.0]) @ R.T, atol=1e-6)


def test_scalar_field_reducing_operator_is_exact():
    rng = np.random.default_rng(2)
    W = _field(2, d=1)
    p = make_exponent(G, 1.3 + 2 * rng.random(32))
    for Q in FAM:
        for dual in (False, True):
            op = reducing_operator(W, p, Q, dual=dual)
            lo, hi = Q.axis_range(G, 0)
            w = W.values[lo:hi, 0, 0]
            pv = p.values[lo:hi]
            want = Q.measure(G) ** (-np.mean(1 / pv)) * _lux(1 / w if dual else w, pv, G.cell_volume)
            assert op.matrix[0, 0] == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("seed", range(6))
def test_sandwich_on_fresh_directions(seed):
    rng = np.random.default_rng(seed)
    W = _field(seed)
    p, q, _ = _exponents(rng)
    V = directions(2, 256, offset=0.811)
    for Q in list(FAM)[:5]:
        for dual in (False, True):
            op = reducing_operator(W, q, Q, dual=dual)
            lo, hi = certify(op, W, q, V)
            assert lo >= 1 - 1e-12
            assert hi <= np.sqrt(2) * 1.01


def test_direct_constant_identity_and_scalar_collapse():
    rng = np.random.default_rng(3)
    p, q, alpha = _exponents(rng)
    I = matrix_field_from_spec(G, {"kind": "identity", "d": 2})
    pc, qc = constant_exponent(G, 2.0), constant_exponent(G, 4.0)
    assert matrix_apq_direct(I, pc, qc, 0.25, FAM).value == pytest.approx(1.0, rel=1e-9)
    W = _field(3, d=1)
    w = W.values[:, 0, 0]
    direct = matrix_apq_direct(W, p, q, alpha, FAM)
    scalar = apq_constant(w, p, q, alpha, FAM)
    assert np.allclose(direct.per_cube, scalar.per_cube, rtol=1e-10)
    reduced = matrix_apq_reduced(W, p, q, alpha, FAM)
    assert reduced.value == pytest.approx(direct.value, rel=1e-4)


def test_rotation_invariance_of_direct_constant():
    rng = np.random.default_rng(4)
    p, q, alpha = _exponents(rng)
    lam = np.exp(rng.uniform(-1, 1, (32, 2)))
    D = MatrixWeightField(G, np.einsum("ci,ij->cij", lam, np.eye(2)))
    R = rotation(1.1)
    UDU = MatrixWeightField(G, R @ D.values @ R.T)
    a = matrix_apq_direct(D, p, q, alpha, FAM).per_cube
    b = matrix_apq_direct(UDU, p, q, alpha, FAM).per_cube
    assert np.allclose(a, b, rtol=1e-10)


def test_reduced_constant_identity():
    I = matrix_field_from_spec(G, {"kind": "identity", "d": 2})
    rep = matrix_apq_reduced(I, constant_exponent(G, 2.0), constant_exponent(G, 4.0), 0.25, FAM)
    assert rep.value == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("seed", range(4))
def test_two_path_ratio_band(seed):
    rng = np.random.default_rng(seed)
    p, q, alpha = _exponents(rng)
    W = _field(seed + 10)
    direct = matrix_apq_direct(W, p, q, alpha, FAM).value
    reduced = matrix_apq_reduced(W, p, q, alpha, FAM).value
    assert 1 / 50 <= direct / reduced <= 50


def test_vector_average_examples():
    Q = FAM[2]
    c = np.array([1.5, -2.0])
    f = np.broadcast_to(c, (32, 2))
    for alpha in (0.0, 0.3):
        out = vector_average(f, alpha, Q, G)
        lo, hi = Q.axis_range(G, 0)
        assert np.allclose(out[lo:hi], Q.volume(G) ** alpha * c, rtol=1e-14)
        assert not out[:lo].any() and not out[hi:].any()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(-5, 5))
def test_vector_average_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((32, 2)), rng.standard_normal((32, 2))
    Q = FAM[int(rng.integers(len(FAM)))]
    lhs = vector_average(a * f + b * g, 0.25, Q, G)
    rhs = a * vector_average(f, 0.25, Q, G) + b * vector_average(g, 0.25, Q, G)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_averaging_bounded_by_four_times_constant(seed):
    rng = np.random.default_rng(seed)
    p, q, alpha = _exponents(rng)
    W = _field(seed + 20)
    bound = 4 * matrix_apq_direct(W, p, q, alpha, FAM).value
    for Q in FAM:
        for f in averaging_probes(W, p, Q, count=3, rng=seed):
            assert averaging_ratio(W, f, p, q, alpha, Q) <= bound


def test_christ_goldberg_identity_and_scalar():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((32, 2))
    I = matrix_field_from_spec(G, {"kind": "identity", "d": 2})
    cg = christ_goldberg(f, I, 0.25, FAM).values
    assert np.allclose(cg, fractional_maximal([np.linalg.norm(f, axis=1)], 0.25, FAM).values, rtol=1e-12)
    W = _field(5, d=1)
    w = W.values[:, 0, 0]
    g = rng.standard_normal((32, 1))
    cg = christ_goldberg(g, W, 0.25, FAM).values
    want = np.zeros(32)
    for Q in FAM:
        lo, hi = Q.axis_range(G, 0)
        s = np.sum(np.abs(g[lo:hi, 0]) / w[lo:hi]) * G.h * Q.volume(G) ** (0.25 - 1)
        want[lo:hi] = np.maximum(want[lo:hi], w[lo:hi] * s)
    assert np.allclose(cg, want, rtol=1e-12)


def test_christ_goldberg_dominates_averages():
    rng = np.random.default_rng(6)
    W = _field(6)
    f = rng.standard_normal((32, 2))
    cg = christ_goldberg(f, W, 0.25, FAM).values
    for Q in FAM:
        A = vector_average(f, 0.25, Q, G)
        WA = np.linalg.norm(np.einsum("cij,cj->ci", W.flat(), A), axis=1)
        assert np.all(WA <= cg * (1 + 1e-12) + 1e-15)


def test_scalar_projection_examples():
    p, q = constant_exponent(G, 2.0), constant_exponent(G, 4.0)
    lam = np.exp(np.random.default_rng(7).uniform(-1, 1, 32))
    D = MatrixWeightField(G, np.stack([np.diag([1.0, l]) for l in lam]))
    r_e, _ = scalar_projections(D, [1.0, 0.0], p, q, 0.25, FAM)
    assert r_e.value == pytest.approx(1.0, rel=1e-9)
    W = _field(7, d=1)
    r_e, r_n = scalar_projections(W, [1.0], p, q, 0.25, FAM)
    assert np.allclose(r_e.per_cube, r_n.per_cube, rtol=1e-14)
    with pytest.raises(ValueError):
        scalar_projections(W, [2.0], p, q, 0.25, FAM)


@pytest.mark.parametrize("seed", range(4))
def test_norm_bound_chain(seed):
    rng = np.random.default_rng(seed)
    p, q, alpha = _exponents(rng)
    rep = norm_bound_check(_field(seed + 30), p, q, alpha, FAM)
    assert rep.holds and rep.triangle_holds and rep.basis_holds
