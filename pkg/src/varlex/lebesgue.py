"""Modular, Luxemburg norm and the basic inequalities of L^{p(.)} as numerical checks.

The norm is ``inf{lam > 0 : rho(f / lam) <= 1}`` with the modular
``rho(f) = sum |f|^p(x) * cell volume``.  All solves go through
:func:`luxemburg_rows`, which handles many independent problems at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exponents import ExponentField, conjugate, make_exponent
from .grid import CubeFamily, GridField, as_values

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class LuxemburgResult:
    norm: float
    modular_at_norm: float
    iterations: int
    bracket: tuple


def _log_modular(la, p, s, log_cv):
    """log rho(f / e^s) row-wise and its derivative in s, computed stably."""
    with np.errstate(invalid="ignore"):   # padding cells: 0 * -inf, discarded below
        z = np.where(np.isfinite(la), p * (la - s[:, None]), -np.inf)
    zmax = z.max(axis=1)
    e = np.exp(z - zmax[:, None])
    tot = e.sum(axis=1)
    G = zmax + np.log(tot) + log_cv
    dG = -np.nansum(np.where(e > 0, p * e, 0.0), axis=1) / tot
    return G, dG


def luxemburg_rows(values, p, cell_volume, counts=None, tol=1e-10, max_iter=200):
    """Luxemburg norms of the rows of ``values`` with row exponents ``p``.

    Padding entries should have value 0 (any exponent, NaN allowed).  Returns
    ``(norm, modular_at_norm, iterations, lo, hi)`` arrays, where ``lo, hi`` is
    the initial bracket.  Safeguarded Newton steps on ``log rho`` (convex in
    ``log lam``) fall back to bisection whenever they leave the bracket.
    """
    a = np.abs(np.atleast_2d(np.asarray(values, dtype=float)))
    p = np.broadcast_to(np.atleast_2d(np.asarray(p, dtype=float)), a.shape)
    B, M = a.shape
    if counts is None:
        counts = np.full(B, M)
    live = a > 0
    with np.errstate(divide="ignore"):
        la = np.where(live, np.log(np.where(live, a, 1.0)), -np.inf)
    nz = live.any(axis=1)
    norm = np.zeros(B)
    mod = np.zeros(B)
    iters = np.zeros(B, dtype=int)
    lo0 = np.zeros(B)
    hi0 = np.zeros(B)
    if not nz.any():
        return norm, mod, iters, lo0, hi0
    la, p_nz, cnt = la[nz], p[nz], np.asarray(counts)[nz]
    pl = np.where(np.isfinite(la), p_nz, np.nan)
    pminus, pplus = np.nanmin(pl, axis=1), np.nanmax(pl, axis=1)
    log_cv = np.log(cell_volume)
    lvol = np.log(cnt * cell_volume)
    lmax = la.max(axis=1)
    lo = lmax + lvol / pplus - 60 * LOG2
    hi = lmax + np.maximum(lvol, 0.0) / pminus + 60 * LOG2
    for _ in range(64):
        G, _d = _log_modular(la, p_nz, lo, log_cv)
        bad = G <= 0
        if not bad.any():
            break
        lo = np.where(bad, lo - 30 * LOG2, lo)
    for _ in range(64):
        G, _d = _log_modular(la, p_nz, hi, log_cv)
        bad = G > 0
        if not bad.any():
            break
        hi = np.where(bad, hi + 30 * LOG2, hi)
    b_lo, b_hi = lo.copy(), hi.copy()
    s = 0.5 * (lo + hi)
    done = np.zeros(len(s), dtype=bool)
    it = np.zeros(len(s), dtype=int)
    G = np.zeros(len(s))
    for _ in range(max_iter):
        act = ~done
        if not act.any():
            break
        Ga, dGa = _log_modular(la[act], p_nz[act], s[act], log_cv)
        G[act] = Ga
        it[act] += 1
        conv = np.abs(np.expm1(np.minimum(Ga, 1.0))) <= tol
        sa, la_, ha = s[act], lo[act], hi[act]
        la_ = np.where(Ga > 0, sa, la_)
        ha = np.where(Ga > 0, ha, sa)
        step = sa - Ga / dGa
        inside = (step > la_) & (step < ha) & np.isfinite(step)
        nxt = np.where(inside, step, 0.5 * (la_ + ha))
        narrow = (ha - la_) <= 4e-16 * np.maximum(1.0, np.abs(sa))
        lo[act], hi[act] = la_, ha
        fin = conv | narrow
        s[act] = np.where(fin, sa, nxt)
        idx = np.flatnonzero(act)
        done[idx[fin]] = True
    norm[nz] = np.exp(s)
    mod[nz] = np.exp(G)
    iters[nz] = it
    lo0[nz] = np.exp(b_lo)
    hi0[nz] = np.exp(b_hi)
    return norm, mod, iters, lo0, hi0


def _exponent_values(p):
    return p.values if isinstance(p, GridField) else np.asarray(p, dtype=float)


def modular(f, p: ExponentField) -> float:
    a = np.abs(as_values(f))
    pv = _exponent_values(p)
    with np.errstate(divide="ignore"):
        t = np.where(a > 0, a ** pv, 0.0)
    return float(t.sum() * p.grid.cell_volume)


def luxemburg_norm(f, p: ExponentField, tol=1e-10, max_iter=200) -> LuxemburgResult:
    v = as_values(f).ravel()
    nrm, mod, it, lo, hi = luxemburg_rows(v[None, :], _exponent_values(p).ravel()[None, :],
                                          p.grid.cell_volume, tol=tol, max_iter=max_iter)
    return LuxemburgResult(float(nrm[0]), float(mod[0]), int(it[0]), (float(lo[0]), float(hi[0])))


def norm(f, p: ExponentField) -> float:
    return luxemburg_norm(f, p).norm


def weighted_norm(f, p: ExponentField, w) -> float:
    """||f||_{L^p(w)} = ||w f||_p."""
    wv = as_values(w)
    if np.any(~(wv > 0)) or not np.all(np.isfinite(wv)):
        raise ValueError("weight must be positive and finite on every cell")
    return norm(as_values(f) * wv, p)


def cube_norms(values, p: ExponentField, family: CubeFamily) -> np.ndarray:
    """||values * chi_Q||_p for every cube of the family."""
    out = np.zeros(len(family))
    cv = family.grid.cell_volume
    pv = _exponent_values(p)
    for index, (vals, pp), counts in family.gather([values, pv], fill=0.0):
        out[index] = luxemburg_rows(vals, pp, cv, counts=counts)[0]
    return out


# ------------------------------------------------------------ inequalities


def holder_constant(p: ExponentField) -> float:
    """1/p- + 1/(p')-, the constant of the generalized Hölder inequality (at most 2)."""
    pc = conjugate(p)
    return 1.0 / p.p_minus + 1.0 / pc.p_minus


def holder_check(f, g, p: ExponentField):
    """Return ``(lhs, rhs)`` with lhs = int |f g| and rhs = 4 ||f||_p ||g||_{p'}."""
    lhs = float(np.sum(np.abs(as_values(f) * as_values(g))) * p.grid.cell_volume)
    rhs = 4.0 * norm(f, p) * norm(g, conjugate(p))
    return lhs, rhs


def dual_candidates(f, p: ExponentField, trials: int, rng=None):
    """Test functions g for the duality bound: the scaled and unscaled local
    extremals and their random sign flips."""
    rng = np.random.default_rng(rng)
    fv = as_values(f)
    a = np.abs(fv)
    sgn = np.sign(fv)
    lam = norm(fv, p)
    pv = p.values
    out = []
    if lam == 0:
        return out
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(a > 0, (a / lam) ** (pv - 1.0), 0.0)
        local = np.where(a > 0, a ** (pv - 1.0), 0.0)
    out += [scaled * sgn, local * sgn]
    for _ in range(trials):
        eps = rng.choice([-1.0, 1.0], size=fv.shape)
        out.append(eps * (scaled if rng.random() < 0.5 else local))
    return out


def dual_lower_bound(f, p: ExponentField, trials: int = 16, rng=None) -> float:
    """max |int f g| over candidate g normalized to ||g||_{p'} = 1."""
    fv = as_values(f)
    if not np.any(fv):
        return 0.0
    pc = conjugate(p)
    best = 0.0
    for g in dual_candidates(fv, p, trials, rng):
        gn = norm(g, pc)
        if gn == 0:
            continue
        val = abs(float(np.sum(fv * g) * p.grid.cell_volume)) / gn
        best = max(best, val)
    return best


@dataclass(frozen=True)
class ModularNormReport:
    norm: float
    modular: float
    lower: float
    upper: float
    holds: bool


def modular_norm_bounds(f, p: ExponentField, tol: float = 1e-9) -> ModularNormReport:
    """Check rho^{1/p+} <= ||f|| <= rho^{1/p-} when ||f|| > 1, reversed otherwise."""
    nr = norm(f, p)
    a = np.abs(as_values(f)).ravel()
    live = a > 0
    if not live.any():
        return ModularNormReport(nr, 0.0, 0.0, 0.0, nr == 0)
    # log rho, so the bounds survive when rho itself under- or overflows
    log_rho = logsumexp(p.values.ravel()[live] * np.log(a[live])) + np.log(p.grid.cell_volume)
    rho = float(np.exp(log_rho))
    a, b = np.exp(log_rho / p.p_plus), np.exp(log_rho / p.p_minus)
    lower, upper = (a, b) if nr > 1 else (b, a)
    ok = lower <= nr * (1 + tol) and nr <= upper * (1 + tol)
    return ModularNormReport(nr, rho, lower, upper, bool(ok))


@dataclass(frozen=True)
class ProductNormReport:
    lhs: float        # ||f_1 ... f_m||_p
    rhs: float        # prod ||f_i||_{p_i}
    constant: float   # lhs / rhs
    bound: float      # sum_i sup p / p_i


def product_norm_check(fs, ps) -> ProductNormReport:
    """Compare ||f_1...f_m||_p with prod ||f_i||_{p_i} where 1/p = sum 1/p_i.

    Pointwise Young's inequality gives the constant ``sum_i sup p/p_i``, which
    is 1 for constant exponents.
    """
    inv = sum(1.0 / pi.values for pi in ps)
    p = make_exponent(ps[0].grid, 1.0 / inv, cls="P0")
    prod = np.prod([as_values(f) for f in fs], axis=0)
    lhs = norm(prod, p)
    rhs = float(np.prod([norm(f, pi) for f, pi in zip(fs, ps)]))
    bound = float(sum(np.max(p.values / pi.values) for pi in ps))
    c = lhs / rhs if rhs > 0 else 0.0
    return ProductNormReport(lhs, rhs, c, bound)


def monotone_norms(f, p: ExponentField, steps: int = 8) -> np.ndarray:
    """Norms of the truncations min(|f|, level_k) for increasing levels ending at max|f|."""
    a = np.abs(as_values(f))
    top = a.max()
    if top == 0:
        return np.zeros(steps)
    levels = top * np.linspace(1.0 / steps, 1.0, steps)
    return np.array([norm(np.minimum(a, t), p) for t in levels])


def bmo_norm(b, family: CubeFamily) -> float:
    """max over cubes of the mean of |b - b_Q| on Q."""
    return float(np.max(mean_oscillations(b, family)))


def mean_oscillations(b, family: CubeFamily) -> np.ndarray:
    """Mean of |b - b_Q| over the cells of each cube."""
    v = as_values(b).ravel()
    out = np.zeros(len(family))
    for g in family.groups:
        lab = g.labels.ravel()
        cnt = np.bincount(lab, minlength=len(family))
        means = np.bincount(lab, weights=v, minlength=len(family)) / np.maximum(cnt, 1)
        dev = np.abs(v - means[lab])
        s = np.bincount(lab, weights=dev, minlength=len(family))
        out[g.index] = s[g.index] / cnt[g.index]
    return out
