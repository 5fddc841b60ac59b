import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from varlex.grid import AllCubes, DomainGrid, GridField, enumerate_cubes, field_from_function, unit_interval_grid
from varlex.operators import (dyadic_maximal, dyadic_shifted_cover_check, fractional_average,
                              fractional_integral, fractional_maximal, power_maximal, sharp_maximal,
                              weighted_dyadic_maximal)

G = unit_interval_grid(32)
FAM = enumerate_cubes(G)
fields = st.lists(st.floats(0, 10), min_size=32, max_size=32).map(np.array)


def brute_maximal(fs, alpha, g, intervals):
    """max over intervals [i, j) of cells containing x of |Q|^{alpha-m} prod int_Q f_i."""
    m = len(fs)
    out = np.zeros(g.N)
    for i, j in intervals:
        side = (j - i) * g.h
        val = side ** (alpha - m) * np.prod([f[i:j].sum() * g.h for f in fs])
        out[i:j] = np.maximum(out[i:j], val)
    return out


def dyadic_intervals(N):
    out, size = [], N
    while size >= 1:
        out += [(i, i + size) for i in range(0, N, size)]
        size //= 2
    return out


def all_intervals(N):
    return [(i, j) for i in range(N) for j in range(i + 1, N + 1)]


def test_dyadic_maximal_half_indicator():
    f = field_from_function(G, lambda x: (x < 0.5).astype(float))
    M = dyadic_maximal(f, 0.0, G).values
    assert np.all(M[:16] == 1.0) and np.allclose(M[16:], 0.5, rtol=1e-15)


def test_maximal_of_constant():
    assert np.allclose(dyadic_maximal(np.full(32, 2.5), 0.0, G).values, 2.5, rtol=1e-14)
    assert np.allclose(fractional_maximal([np.full(32, 2.5)], 0.0, AllCubes(G)).values, 2.5, rtol=1e-14)


def test_bilinear_single_cube():
    alpha = 0.5
    q0 = FAM[1]             # [0, 1/2)
    chi = np.zeros(32)
    chi[:16] = 1
    M = fractional_maximal([chi, chi], alpha, FAM).values
    assert np.allclose(M[:16], 0.5 ** alpha, rtol=1e-14)
    assert fractional_average([chi, chi], alpha, q0, G).values[0] == pytest.approx(0.5 ** alpha, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(fields, fields, st.floats(0, 1.9))
def test_maximal_against_brute_force(f1, f2, alpha):
    got = fractional_maximal([f1, f2], alpha, FAM).values
    assert np.allclose(got, brute_maximal([f1, f2], alpha, G, dyadic_intervals(32)), rtol=1e-12)
    got = fractional_maximal([f1, f2], alpha, AllCubes(G)).values
    assert np.allclose(got, brute_maximal([f1, f2], alpha, G, all_intervals(32)), rtol=1e-12)


def test_all_cubes_two_dimensional_against_loop():
    g = DomainGrid(2, 0.5, 8, 0.0)
    f = np.random.default_rng(0).random(g.shape)
    want = np.zeros(g.shape)
    for s in range(1, 9):
        for i in range(9 - s):
            for j in range(9 - s):
                v = f[i:i + s, j:j + s].sum() * g.cell_volume / (s * g.h) ** 2 * (s * g.h) ** 0.5
                want[i:i + s, j:j + s] = np.maximum(want[i:i + s, j:j + s], v)
    assert np.allclose(fractional_maximal([f], 0.5, AllCubes(g)).values, want, rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(fields, fields, fields, st.floats(0, 0.9))
def test_sublinear_in_each_slot(f, g, h, alpha):
    lhs = fractional_maximal([f + g, h], alpha, FAM).values
    rhs = fractional_maximal([f, h], alpha, FAM).values + fractional_maximal([g, h], alpha, FAM).values
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-300)


@settings(max_examples=40, deadline=None)
@given(fields, st.floats(0, 0.9))
def test_monotone_in_family_and_dyadic_below_full(f, alpha):
    small = fractional_maximal([f], alpha, enumerate_cubes(G, K=3)).values
    dyad = fractional_maximal([f], alpha, FAM).values
    full = fractional_maximal([f], alpha, AllCubes(G)).values
    assert np.all(small <= dyad) and np.all(dyad <= full)


def test_average_examples():
    q = FAM[1]             # [0, 1/2)
    chi_b = np.zeros(32)
    chi_b[:16] = 1
    assert np.array_equal(fractional_average([chi_b], 0.0, q, G).values, chi_b)
    quarter = np.zeros(32)
    quarter[:8] = 1
    for alpha in (0.0, 0.3, 1.2):
        out = fractional_average([np.ones(32), quarter], alpha, q, G).values
        assert np.allclose(out[:16], 0.5 ** alpha * 0.5, rtol=1e-14) and not out[16:].any()


@settings(max_examples=30, deadline=None)
@given(fields, fields, st.floats(0, 1.5))
def test_average_below_maximal(f1, f2, alpha):
    M = fractional_maximal([f1, f2], alpha, FAM).values
    for q in FAM:
        A = fractional_average([f1, f2], alpha, q, G).values
        assert np.all(A <= M * (1 + 1e-12))


def test_integral_far_field_against_quadrature():
    g = DomainGrid(1, 4.0, 1024)
    f = ((g.axis_centers() >= 0) & (g.axis_centers() < 1)).astype(float)
    alpha = 0.5
    out = fractional_integral([f], alpha, g).values
    for x in (2.5, 3.5, -3.0):
        i = int(np.argmin(np.abs(g.axis_centers() - x)))
        xc = g.axis_centers()[i]
        want = quad(lambda y: abs(xc - y) ** (alpha - 1), 0, 1)[0]
        assert out[i] == pytest.approx(want, rel=1e-4)


def _brute_integral_1d(fs, alpha, g):
    m, h, N = len(fs), g.h, g.N
    out = np.zeros(N)
    import itertools
    for x in range(N):
        for ys in itertools.product(range(N), repeat=m):
            s = sum(abs(x - y) for y in ys) * h
            if s == 0:
                s = m * h / 2
            out[x] += np.prod([f[y] for f, y in zip(fs, ys)]) * s ** (alpha - m)
    return out * h ** m


def test_integral_multilinear_against_tuple_loop():
    g = unit_interval_grid(16)
    rng = np.random.default_rng(2)
    fs = [rng.random(16), rng.random(16)]
    assert np.allclose(fractional_integral(fs, 0.7, g).values, _brute_integral_1d(fs, 0.7, g), rtol=1e-11)
    g2 = DomainGrid(2, 0.5, 4, 0.0)
    f1, f2 = rng.random(g2.shape), rng.random(g2.shape)
    c = g2.centers()
    want = np.zeros(16)
    for i in range(16):
        for a in range(16):
            for b in range(16):
                s = np.linalg.norm(c[i] - c[a]) + np.linalg.norm(c[i] - c[b])
                if a == b == i:
                    s = g2.h
                want[i] += f1.flat[a] * f2.flat[b] * s ** (0.8 - 4)
    want *= g2.cell_volume ** 2
    assert np.allclose(fractional_integral([f1, f2], 0.8, g2).values.ravel(), want, rtol=1e-11)


def test_integral_positive_and_dominates_maximal():
    rng = np.random.default_rng(3)
    ratios = []
    for N in (64, 128):
        g = unit_interval_grid(N)
        f = np.repeat(rng.random(16), N // 16)
        I = fractional_integral([f], 0.5, g).values
        M = fractional_maximal([f], 0.5, AllCubes(g)).values
        assert np.all(I > 0)
        ratios.append(float(np.max(M / I)))
    assert ratios[1] == pytest.approx(ratios[0], rel=0.1)


def test_integral_rejects_order_and_budget():
    with pytest.raises(ValueError):
        fractional_integral([np.ones(32)], 0.0, G)
    with pytest.raises(ValueError, match="budget"):
        fractional_integral([np.ones(32)] * 2, 0.5, G, budget=100)


def test_order_rejected():
    with pytest.raises(ValueError):
        fractional_maximal([np.ones(32)], 1.0, FAM)


def test_sharp_maximal_examples():
    assert not sharp_maximal(np.full(32, 4.0), 1.0, FAM).values.any()
    step = (G.axis_centers() < 0.5).astype(float)
    out = sharp_maximal(step, 1.0, FAM).values
    assert np.allclose(out, 0.5, rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(fields, st.floats(0.2, 2.0))
def test_sharp_below_power_maximal(f, delta):
    sharp = sharp_maximal(f, delta, FAM).values
    Md = power_maximal(f, delta, FAM).values
    assert np.all(sharp <= 2 ** (1 / delta) * Md * (1 + 1e-12) + 1e-300)
    assert np.allclose(power_maximal(f, 1.0, FAM).values, fractional_maximal([f], 0.0, FAM).values, rtol=1e-12)


def test_weighted_dyadic_maximal_examples():
    rng = np.random.default_rng(4)
    f = rng.random(32)
    assert np.allclose(weighted_dyadic_maximal(f, np.ones(32), FAM).values,
                       dyadic_maximal(f, 0.0, G).values, rtol=1e-14)
    assert np.allclose(weighted_dyadic_maximal(np.full(32, 3.0), np.exp(rng.normal(size=32)), FAM).values, 3.0)


def test_weighted_dyadic_maximal_l2_bound():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        f = rng.random(32) * (rng.random(32) < 0.3)
        s = np.exp(rng.normal(scale=2, size=32))
        Mf = weighted_dyadic_maximal(f, s, FAM).values
        worst = max(worst, np.sqrt(np.sum(Mf ** 2 * s) / max(np.sum(f ** 2 * s), 1e-300)))
    assert worst <= 2.0


def test_cover_check():
    g = unit_interval_grid(64)
    zero = dyadic_shifted_cover_check([np.zeros(64)], 0.0, g)
    assert zero.max_ratio == 0 and not zero.ratio.any()
    consts = []
    for N in (256, 512):
        g = DomainGrid(1, 1.0, N)
        f = np.zeros(N)
        f[N // 2] = 1.0
        rep = dyadic_shifted_cover_check([f], 0.0, g)
        assert np.all(rep.dyadic0 <= rep.full)
        consts.append(rep.max_ratio)
    assert np.isfinite(consts).all() and consts[0] >= 0.5
