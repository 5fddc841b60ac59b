import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varlex.cz import cz_decompose, sparse_domination_check
from varlex.grid import DomainGrid, unit_interval_grid


def exhaustive_stopping(gs, alpha, a, k, N, max_up=6):
    """Maximal dyadic intervals (depth -max_up..log2 N) with product > a^k, by direct search."""
    m = len(gs)
    h = 1.0 / N
    levels = int(np.log2(N))
    hits = []
    for d in range(-max_up, levels + 1):
        size = 2.0 ** -d
        count = 1 if d <= 0 else 2 ** d
        for j in range(count):
            lo, hi = j * size, (j + 1) * size
            i0, i1 = int(round(lo / h)), min(int(round(hi / h)), N)
            prod = size ** (alpha - m) * np.prod([g[i0:i1].sum() * h for g in gs])
            if prod > a ** k:
                hits.append((d, j, lo, hi, prod))
    maximal = [x for x in hits if not any(y[2] <= x[2] and x[3] <= y[3] and y[0] < x[0] for y in hits)]
    return sorted((lo, hi) for _, _, lo, hi, _ in maximal)


def _intervals(level, g):
    return sorted(tuple(q.bounds(g)[0]) for q in level.cubes)


def test_quarter_indicator_level_minus_one():
    g = unit_interval_grid(64)
    f = (g.axis_centers() < 0.25).astype(float)
    dec = cz_decompose([f], None, 0.0, 4.0, g, k_range=(-1, -1))
    lv = dec.levels[0]
    assert _intervals(lv, g) == [(0.0, 0.5)]
    assert lv.products[0] == pytest.approx(0.5)
    assert _intervals(lv, g) == exhaustive_stopping([f], 0.0, 4.0, -1, 64)
    assert all(dec.check().values())


def test_zero_input_is_empty():
    g = unit_interval_grid(64)
    dec = cz_decompose([np.zeros(64), np.zeros(64)], None, 0.5, 3.0, g)
    assert dec.levels == [] and not dec.omega_next.any()
    assert sparse_domination_check(dec, [np.zeros(64)] * 2, None, 0.5).max_ratio == 0


def test_a_out_of_range_rejected():
    g = unit_interval_grid(16)
    with pytest.raises(ValueError):
        cz_decompose([np.ones(16), np.ones(16)], None, 0.0, 4.0, g)


def test_single_indicator_ratio_below_a():
    g = unit_interval_grid(256)
    f = np.zeros(256)
    f[40:48] = 1.0
    a = 2.5
    dec = cz_decompose([f], None, 0.0, a, g)
    rep = sparse_domination_check(dec, [f], None, 0.0)
    assert rep.deficient_cells.size == 0 and rep.max_ratio <= a


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0.0, 0.5, 1.0]))
def test_random_inputs_match_exhaustive_search(seed, alpha):
    rng = np.random.default_rng(seed)
    N = 64
    g = unit_interval_grid(N)
    f1, f2 = rng.random(N) * (rng.random(N) < 0.5), rng.random(N)
    s1, s2 = np.exp(rng.normal(size=N)), np.exp(rng.normal(size=N))
    a = 2 ** (2 - alpha) + 1
    dec = cz_decompose([f1, f2], [s1, s2], alpha, a, g)
    for lv in dec.levels:
        assert _intervals(lv, g) == exhaustive_stopping([f1 * s1, f2 * s2], alpha, a, lv.k, N)
        assert np.all(lv.products > lv.threshold)
        assert np.all(lv.products <= 2 ** (2 - alpha) * lv.threshold)
    checks = dec.check()
    assert all(checks.values()), checks
    rep = sparse_domination_check(dec, [f1, f2], [s1, s2], alpha)
    assert rep.deficient_cells.size == 0
    assert rep.max_ratio <= a * 2 ** (2 - alpha)


def test_two_dimensional_decomposition():
    rng = np.random.default_rng(9)
    g = DomainGrid(2, 1.0, 16)
    f = rng.random(g.shape)
    a = 2 ** 2 + 0.5
    dec = cz_decompose([f], None, 0.0, a, g)
    assert all(dec.check().values())
    assert sparse_domination_check(dec, [f], None, 0.0).max_ratio <= a * 4


def test_dump_shape():
    g = unit_interval_grid(16)
    f = np.linspace(0, 1, 16)
    d = cz_decompose([f], None, 0.0, 3.0, g).to_dict()
    assert set(d) == {"a", "alpha", "levels"}
    for lv in d["levels"]:
        for c in lv["cubes"]:
            assert set(c) == {"cube", "product", "residual_cells"}
