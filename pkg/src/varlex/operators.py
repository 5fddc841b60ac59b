"""Multilinear fractional maximal, averaging and integral operators, plus the
sharp and weighted dyadic maximal functions.

Inputs are zero outside the window, so cube averages divide by the geometric
volume of the cube.  Oscillations and weighted averages only look at cells and
use the measure of the cells inside the window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import fftconvolve

from .grid import AllCubes, CubeFamily, DomainGrid, DyadicCube, GridField, as_values, enumerate_cubes, prefix_sums
from .lebesgue import mean_oscillations

INTEGRAL_BUDGET = 2 ** 24


@dataclass(frozen=True)
class OperatorOutput:
    field: GridField
    tag: str
    params: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _as_list(fs):
    if isinstance(fs, (GridField, np.ndarray)):
        return [fs]
    return list(fs)


def _grid_of(fs, grid=None):
    for f in fs:
        if isinstance(f, GridField):
            return f.grid
    if grid is None:
        raise ValueError("pass GridFields or a grid")
    return grid


def _check_order(alpha, m, n):
    if not 0 <= alpha < m * n:
        raise ValueError(f"order alpha = {alpha} must satisfy 0 <= alpha < m n = {m * n}")


def cube_products(fs, alpha: float, family: CubeFamily) -> np.ndarray:
    """|Q|^{alpha/n - m} prod int_Q |f_i| for every family cube."""
    n, m = family.grid.n, len(fs)
    val = family.sides ** (alpha - m * n)
    for f in fs:
        val = val * family.sums(np.abs(as_values(f)))
    return val


def fractional_maximal(fs, alpha: float, cubes, grid: DomainGrid | None = None) -> OperatorOutput:
    """max over cubes Q containing x of |Q|^{alpha/n - m} prod int_Q |f_i|.

    ``cubes`` is a :class:`CubeFamily` or :class:`AllCubes`.
    """
    fs = _as_list(fs)
    g = cubes.grid
    m = len(fs)
    _check_order(alpha, m, g.n)
    if isinstance(cubes, AllCubes):
        vals = _maximal_all_cubes(fs, alpha, g)
        shifts = "all-aligned"
    else:
        vals = cubes.cell_max(cube_products(fs, alpha, cubes))
        shifts = [str(t) for t in cubes.shifts]
    return OperatorOutput(GridField(g, vals), "fractional_maximal", {"alpha": alpha, "m": m, "shifts": shifts})


def _maximal_all_cubes(fs, alpha, g):
    m, n, h, N = len(fs), g.n, g.h, g.N
    # same arithmetic as CubeFamily.sums / cube_products, so shared cubes agree bitwise
    a = [np.abs(as_values(f)) * g.cell_volume for f in fs]
    if n == 1:
        S = [prefix_sums(ai) for ai in a]
        i = np.arange(N)[:, None]
        j = np.arange(N + 1)[None, :]
        length = (j - i).astype(float)
        valid = length > 0
        V = np.where(valid, (np.where(valid, length, 1.0) * h) ** (alpha - m * n), 0.0)
        for s in S:
            V = V * (s[None, :] - s[:N, None])
        V = np.where(valid, V, -np.inf)
        # R[i, r] = max_{j >= r} V[i, j]; cell x lies in [i, j) iff i <= x < j
        R = np.maximum.accumulate(V[:, ::-1], axis=1)[:, ::-1]
        T = R[:, 1:]
        T = np.where(i <= np.arange(N)[None, :], T, -np.inf)
        return T.max(axis=0)
    S = [prefix_sums(ai) for ai in a]
    out = np.full(g.shape, -np.inf)
    for s in range(1, N + 1):
        V = (s * h) ** (alpha - m * n)
        for P in S:
            V = V * (P[s:, s:] - P[:-s, s:] - P[s:, :-s] + P[:-s, :-s])
        W = np.pad(V, s - 1, constant_values=-np.inf)
        W = sliding_window_view(W, s, axis=0).max(axis=-1)
        W = sliding_window_view(W, s, axis=1).max(axis=-1)
        np.maximum(out, W, out=out)
    return out


def dyadic_maximal(fs, alpha: float, grid: DomainGrid, K: int | None = None, shift=0) -> OperatorOutput:
    return fractional_maximal(fs, alpha, enumerate_cubes(grid, [shift], K))


@dataclass
class CoverReport:
    ratio: np.ndarray          # M_alpha / sum_t M_alpha^{D_t}, 0 where both vanish
    max_ratio: float
    full: np.ndarray           # M_alpha over all aligned cubes
    shifted_sum: np.ndarray    # sum over shifts of the dyadic maximal functions
    dyadic0: np.ndarray        # the unshifted dyadic maximal function


def dyadic_shifted_cover_check(fs, alpha: float, grid: DomainGrid, K: int | None = None) -> CoverReport:
    """Compare the maximal function over all cubes with the sum over the
    one-third shifted dyadic families."""
    fs = _as_list(fs)
    full = fractional_maximal(fs, alpha, AllCubes(grid)).values
    parts = {}
    for t in enumerate_cubes(grid, "all", 0).shifts:
        parts[t] = fractional_maximal(fs, alpha, enumerate_cubes(grid, [t], K)).values
    total = sum(parts.values())
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(total > 0, full / np.where(total > 0, total, 1.0), np.where(full > 0, np.inf, 0.0))
    d0 = parts[tuple([0 * t for t in next(iter(parts))])]
    return CoverReport(ratio, float(ratio.max()), full, total, d0)


def fractional_average(fs, alpha: float, B: DyadicCube, grid: DomainGrid | None = None) -> OperatorOutput:
    """|B|^{alpha/n} prod <f_i>_B on B, zero elsewhere."""
    fs = _as_list(fs)
    g = _grid_of(fs, grid)
    vol = B.volume(g)
    val = vol ** (alpha / g.n)
    sl = B.slices(g)
    for f in fs:
        val *= float(as_values(f)[sl].sum()) * g.cell_volume / vol
    out = np.zeros(g.shape)
    out[sl] = val
    return OperatorOutput(GridField(g, out), "fractional_average", {"alpha": alpha, "m": len(fs), "cube": B.label()})


def fractional_integral(fs, alpha: float, grid: DomainGrid | None = None, budget: int = INTEGRAL_BUDGET,
                        allow_large: bool = False) -> OperatorOutput:
    """sum over source tuples of prod f_i(y_i) (sum |x - y_i|)^{alpha - m n} * vol^m.

    The fully diagonal tuple (every y_i in the cell of x) uses the distance
    ``h/2`` for each slot.
    """
    fs = _as_list(fs)
    g = _grid_of(fs, grid)
    m, n, N, h = len(fs), g.n, g.N, g.h
    if not 0 < alpha < m * n:
        raise ValueError(f"order alpha = {alpha} must satisfy 0 < alpha < m n = {m * n}")
    if N ** (m * n) > budget and not allow_large:
        raise ValueError(f"N^(mn) = {N ** (m * n)} tuples exceeds the budget {budget}; pass allow_large=True")
    vals = [as_values(f) for f in fs]
    beta = alpha - m * n
    if m == 1:
        offs = np.arange(-(N - 1), N) * h
        grids = np.meshgrid(*([offs] * n), indexing="ij")
        r = np.sqrt(sum(z ** 2 for z in grids))
        r[(N - 1,) * n] = h / 2
        K = r ** beta
        full = fftconvolve(vals[0], K, mode="full")
        out = full[tuple(slice(N - 1, 2 * N - 1) for _ in range(n))] * g.cell_volume
    elif n == 1:
        out = _integral_1d_multilinear(vals, beta, h)
    elif m == 2:
        out = _integral_2d_bilinear(vals, beta, g)
    else:
        raise ValueError("multilinear fractional integrals in two dimensions are limited to m = 2")
    return OperatorOutput(GridField(g, out), "fractional_integral", {"alpha": alpha, "m": m})


def _integral_1d_multilinear(vals, beta, h):
    # per target x, bin each source by its distance |x - y| = d h and
    # convolve the m distance profiles; the kernel depends on the total sum only
    N = len(vals[0])
    x = np.arange(N)[:, None]
    d = np.arange(N)[None, :]
    profiles = []
    for v in vals:
        right = np.where(x + d < N, v[np.minimum(x + d, N - 1)], 0.0)
        left = np.where((x - d >= 0) & (d > 0), v[np.maximum(x - d, 0)], 0.0)
        profiles.append(right + left)
    c = profiles[0]
    for pr in profiles[1:]:
        c = fftconvolve(c, pr, mode="full", axes=1)
    m = len(vals)
    s = np.arange(c.shape[1], dtype=float)
    K = np.where(s > 0, (np.where(s > 0, s, 1.0) * h) ** beta, (m * h / 2) ** beta)
    return (c * K[None, :]).sum(axis=1) * h ** m


def _integral_2d_bilinear(vals, beta, g):
    c = g.centers()
    f1, f2 = vals[0].ravel(), vals[1].ravel()
    out = np.empty(g.size)
    reg = g.h  # two slots at h/2 each
    for i, x in enumerate(c):
        d = np.sqrt(((c - x) ** 2).sum(1))
        s = d[:, None] + d[None, :]
        s[i, i] = reg
        out[i] = f1 @ (s ** beta) @ f2
    return out.reshape(g.shape) * g.cell_volume ** 2


def sharp_maximal(f, delta: float, family: CubeFamily) -> OperatorOutput:
    """[max over cubes Q containing x of <| |f|^delta - <|f|^delta>_Q |>_Q]^{1/delta}."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    g = family.grid
    osc = mean_oscillations(np.abs(as_values(f)) ** delta, family)
    vals = family.cell_max(osc) ** (1.0 / delta)
    return OperatorOutput(GridField(g, vals), "sharp_maximal", {"delta": delta})


def power_maximal(f, delta: float, family: CubeFamily) -> OperatorOutput:
    """M_delta f = M(|f|^delta)^{1/delta}, averages over the cells in the window."""
    g = family.grid
    avg = family.sums(np.abs(as_values(f)) ** delta) / family.measures
    return OperatorOutput(GridField(g, family.cell_max(avg) ** (1.0 / delta)), "power_maximal", {"delta": delta})


def weighted_dyadic_maximal(f, sigma, family: CubeFamily) -> OperatorOutput:
    """max over cubes Q containing x of int_Q |f| sigma / sigma(Q)."""
    s = as_values(sigma)
    if np.any(~(s > 0)) or not np.all(np.isfinite(s)):
        raise ValueError("sigma must be a positive finite weight")
    g = family.grid
    avg = family.sums(np.abs(as_values(f)) * s) / family.sums(s)
    return OperatorOutput(GridField(g, family.cell_max(avg)), "weighted_dyadic_maximal", {})
