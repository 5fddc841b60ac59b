"""Stopping-time (Calderón-Zygmund) decomposition over the unshifted dyadic
cubes and the pointwise sparse bound for the dyadic fractional maximal function.

For each level k the stopping cubes are the maximal dyadic cubes with
``a**k < |Q|^{alpha/n} prod <g_i>_Q`` where ``g_i = f_i sigma_i``.  Data vanish
outside the window, so dyadic ancestors of the window (negative depth) enter
the search whenever the window itself already exceeds a threshold.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .grid import DomainGrid, DyadicCube, GridField, as_values, enumerate_cubes
from .operators import fractional_maximal


def _block_sum(x: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return x.reshape(-1, 2).sum(axis=1)
    r = x.shape[0] // 2
    return x.reshape(r, 2, r, 2).sum(axis=(1, 3))


def _upsample(x: np.ndarray, factor: int) -> np.ndarray:
    for a in range(x.ndim):
        x = np.repeat(x, factor, axis=a)
    return x


@dataclass
class Pyramid:
    """Products |Q|^{alpha/n - m} prod int_Q g_i for every dyadic cube of depth 0..K."""

    grid: DomainGrid
    alpha: float
    m: int
    K: int
    products: list          # products[d] has shape (2**d,)*n

    @classmethod
    def build(cls, gs, alpha, grid, K):
        n, N = grid.n, grid.N
        b = N >> K
        sums = []
        for g in gs:
            cell = as_values(g) * grid.cell_volume
            if n == 1:
                top = cell.reshape(2 ** K, b).sum(axis=1)
            else:
                top = cell.reshape(2 ** K, b, 2 ** K, b).sum(axis=(1, 3))
            # parents are sums of their children so the integrals are monotone
            lv = [top]
            for _ in range(K):
                lv.append(_block_sum(lv[-1], n))
            sums.append(lv[::-1])
        m = len(gs)
        prods = []
        for d in range(K + 1):
            side = 2.0 * grid.L * 2.0 ** (-d)
            p = np.full((2 ** d,) * n, side ** (alpha - m * n))
            for s in sums:
                p = p * s[d]
            prods.append(p)
        return cls(grid, alpha, m, K, prods)

    def ancestor_product(self, j: int) -> float:
        """Product of the depth ``-j`` ancestor of the window (j >= 0)."""
        if j == 0:
            return float(self.products[0].ravel()[0])
        side = 2.0 * self.grid.L * 2.0 ** j
        side0 = 2.0 * self.grid.L
        exp = self.alpha - self.m * self.grid.n
        return float(self.products[0].ravel()[0] / side0 ** exp * side ** exp)

    def cell_maximal(self) -> np.ndarray:
        """The dyadic fractional maximal function over depths 0..K."""
        N = self.grid.N
        out = np.zeros(self.grid.shape)
        for d, p in enumerate(self.products):
            np.maximum(out, _upsample(p, N >> d), out=out)
        return out


@dataclass
class CZLevel:
    k: int
    threshold: float
    cubes: list                      # stopping cubes (DyadicCube)
    products: np.ndarray             # their products
    residuals: list                  # flat cell indices of E_j^k = Q_j^k minus Omega_{k+1}
    omega: np.ndarray = field(repr=False)   # cells of Omega_k


@dataclass
class CZDecomposition:
    grid: DomainGrid
    a: float
    alpha: float
    m: int
    K: int
    levels: list
    omega_next: np.ndarray = field(repr=False, default=None)   # Omega_{k_max + 1}

    @property
    def k_range(self):
        return (self.levels[0].k, self.levels[-1].k) if self.levels else None

    def sparse_sum(self) -> np.ndarray:
        """sum_{k,j} product(Q_j^k) chi_{E_j^k}."""
        s = np.zeros(self.grid.size)
        for lv in self.levels:
            for p, e in zip(lv.products, lv.residuals):
                s[e] += p
        return s.reshape(self.grid.shape)

    def check(self) -> dict:
        """Recheck every structural property; values are booleans."""
        n = self.grid.n
        c = 2.0 ** (self.m * n - self.alpha)
        stop = True
        for lv in self.levels:
            t = self.a ** lv.k
            stop &= bool(np.all(lv.products > t) and np.all(lv.products <= c * t))
        count = np.zeros(self.grid.size, dtype=int)
        for lv in self.levels:
            for e in lv.residuals:
                count[e] += 1
        disjoint = bool(count.max(initial=0) <= 1)
        nested = True
        omegas = [lv.omega for lv in self.levels] + ([self.omega_next] if self.levels else [])
        for a, b in zip(omegas, omegas[1:]):
            nested &= bool(np.all(b <= a))
        within = True
        for lv in self.levels:
            cover = np.zeros(self.grid.shape, dtype=int)
            for q in lv.cubes:
                cover[q.slices(self.grid)] += 1
            within &= bool(cover.max(initial=0) <= 1) and bool(np.array_equal(cover > 0, lv.omega))
        partition = True
        if self.levels:
            partition = bool(count.sum() <= self.levels[0].omega.sum())
        return {"stopping": stop, "disjoint_residuals": disjoint, "nested": nested,
                "level_disjoint": within, "residual_partition": partition}

    def to_dict(self) -> dict:
        levels = []
        for lv in self.levels:
            cubes = [{"cube": q.to_dict(), "product": float(p), "residual_cells": e.tolist()}
                     for q, p, e in zip(lv.cubes, lv.products, lv.residuals)]
            levels.append({"k": lv.k, "cubes": cubes})
        return {"a": self.a, "alpha": self.alpha, "levels": levels}


def _prepare(fs, sigmas):
    fs = [fs] if isinstance(fs, (GridField, np.ndarray)) else list(fs)
    if sigmas is None:
        sigmas = [None] * len(fs)
    elif isinstance(sigmas, (GridField, np.ndarray)):
        sigmas = [sigmas]
    gs = []
    for f, s in zip(fs, sigmas):
        g = as_values(f) if s is None else as_values(f) * as_values(s)
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("f_i sigma_i must be nonnegative and finite")
        gs.append(g)
    return gs


def default_k_range(maximal: np.ndarray, a: float):
    """Levels k with a^k < M(x) <= a^{k+1} for some cell, i.e. all levels the
    sparse bound needs."""
    pos = maximal[maximal > 0]
    if pos.size == 0:
        return None
    lo_v, hi_v = float(pos.min()), float(pos.max())
    k_lo = math.ceil(math.log(lo_v) / math.log(a)) - 1
    while a ** k_lo >= lo_v:
        k_lo -= 1
    while a ** (k_lo + 1) < lo_v:
        k_lo += 1
    k_hi = math.ceil(math.log(hi_v) / math.log(a)) - 1
    while a ** (k_hi + 1) < hi_v:
        k_hi += 1
    while k_hi > k_lo and a ** k_hi >= hi_v:
        k_hi -= 1
    return k_lo, k_hi


def cz_decompose(fs, sigmas, alpha: float, a: float, grid: DomainGrid, K: int | None = None,
                 k_range=None, verify: bool = True) -> CZDecomposition:
    """Maximal dyadic stopping cubes for every level in ``k_range``.

    ``a`` must exceed ``2**(m n - alpha)``.  The search is top-down: a cube is
    claimed when it exceeds the threshold and no ancestor was claimed.
    """
    gs = _prepare(fs, sigmas)
    m, n = len(gs), grid.n
    K = grid.levels if K is None else int(K)
    if not 0 <= alpha < m * n:
        raise ValueError(f"alpha must lie in [0, {m * n})")
    if not a > 2.0 ** (m * n - alpha):
        raise ValueError(f"a = {a} must exceed 2^(mn - alpha) = {2.0 ** (m * n - alpha)}")
    pyr = Pyramid.build(gs, alpha, grid, K)
    if k_range is None:
        k_range = default_k_range(pyr.cell_maximal(), a)
    dec = CZDecomposition(grid, a, alpha, m, K, [])
    if k_range is None:
        dec.omega_next = np.zeros(grid.shape, dtype=bool)
        return dec
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    zero = (0,) * n
    zero_shift = tuple([Fraction(0)] * n)
    N = grid.N
    idx = np.arange(grid.size).reshape(grid.shape)
    omegas = {}
    raw = {}
    for k in range(k_lo, k_hi + 2):
        t = a ** k
        cubes, prods = [], []
        claimed = False
        # ancestors of the window, farthest first
        j = 0
        while pyr.ancestor_product(j) > t:
            j += 1
        for jj in range(j - 1, 0, -1):
            p = pyr.ancestor_product(jj)
            if p > t:
                cubes.append(DyadicCube(zero_shift, -jj, zero))
                prods.append(p)
                claimed = True
                break
        covered = np.full((1,) * n, claimed)
        for d in range(K + 1):
            if d > 0:
                covered = _upsample(covered, 2)
            P = pyr.products[d]
            sel = (P > t) & ~covered
            for c in zip(*np.nonzero(sel)):
                cubes.append(DyadicCube(zero_shift, d, tuple(int(x) for x in c)))
                prods.append(float(P[c]))
            covered = covered | sel
        om = np.zeros(grid.shape, dtype=bool)
        for q in cubes:
            om[q.slices(grid)] = True
        omegas[k] = om
        raw[k] = (cubes, np.array(prods))
    for k in range(k_lo, k_hi + 1):
        cubes, prods = raw[k]
        nxt = omegas[k + 1]
        res = [idx[q.slices(grid)][~nxt[q.slices(grid)]].ravel() for q in cubes]
        dec.levels.append(CZLevel(k, a ** k, cubes, prods, res, omegas[k]))
    dec.omega_next = omegas[k_hi + 1]
    if verify:
        bad = [name for name, ok in dec.check().items() if not ok]
        if bad:
            raise AssertionError(f"decomposition violates {bad}")
    return dec


@dataclass
class SparseReport:
    max_ratio: float
    ratio: np.ndarray
    deficient_cells: np.ndarray     # positive maximal function but no residual set


def sparse_domination_check(dec: CZDecomposition, fs, sigmas, alpha: float) -> SparseReport:
    """Pointwise ratio of the dyadic fractional maximal function of (f_i sigma_i)
    to the sparse sum of the decomposition."""
    gs = _prepare(fs, sigmas)
    fam = enumerate_cubes(dec.grid, [0], dec.K)
    M = fractional_maximal(gs, alpha, fam).values
    S = dec.sparse_sum()
    on = S > 0
    ratio = np.zeros(dec.grid.shape)
    ratio[on] = M[on] / S[on]
    deficient = np.flatnonzero(((M > 0) & ~on).ravel())
    mr = float(ratio.max()) if ratio.size else 0.0
    if deficient.size:
        mr = float("inf")
    return SparseReport(mr, ratio, deficient)
