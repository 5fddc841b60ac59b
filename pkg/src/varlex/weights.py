"""Weight constants over a finite cube family.

Conventions follow the weight-in-the-norm form: the weight multiplies the
function inside the norm, so ``[w]_{A_p} = sup |B|^-1 ||w chi_B||_p ||w^-1 chi_B||_{p'}``.
``|B|`` is the measure of the cells of B inside the window.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exponents import ExponentField, conjugate, make_exponent
from .grid import CubeFamily, DomainGrid, DyadicCube, GridField, as_values
from .lebesgue import cube_norms


def check_weight(w, name="weight") -> np.ndarray:
    v = as_values(w)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        bad = np.flatnonzero(~(np.isfinite(v.ravel()) & (v.ravel() > 0)))
        raise ValueError(f"{name} must be positive and finite; bad cells {bad[:5].tolist()}")
    return v


@dataclass
class WeightConstantReport:
    value: float
    argmax: DyadicCube | None
    per_cube: np.ndarray = field(repr=False)

    @property
    def n_cubes(self) -> int:
        return len(self.per_cube)

    def to_dict(self, dump=False) -> dict:
        d = {"constant": self.value,
             "argmax_cube": None if self.argmax is None else self.argmax.to_dict(),
             "n_cubes": self.n_cubes}
        if dump:
            d["per_cube"] = self.per_cube.tolist()
        return d


def _report(per_cube, family) -> WeightConstantReport:
    per_cube = np.asarray(per_cube, dtype=float)
    i = int(np.argmax(per_cube))
    return WeightConstantReport(float(per_cube[i]), family.cubes[i], per_cube)


def _power_sums(v, family, r):
    return family.sums(v ** r)


# --------------------------------------------------------------- classical


def classical_ap(w, p: float, family: CubeFamily) -> WeightConstantReport:
    """Constant-exponent A_p in closed form: |B|^-1 (int_B w^p)^(1/p) (int_B w^-p')^(1/p')."""
    v = check_weight(w)
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    pc = p / (p - 1)
    meas = family.measures
    per = _power_sums(v, family, p) ** (1 / p) * _power_sums(v, family, -pc) ** (1 / pc) / meas
    return _report(per, family)


def reverse_holder_report(w, r: float, family: CubeFamily) -> WeightConstantReport:
    """Per-cube <w^r>^(1/r) / <w> with its maximum."""
    v = check_weight(w)
    if not r > 1:
        raise ValueError("reverse Hölder exponent must exceed 1")
    meas = family.measures
    per = (_power_sums(v, family, r) / meas) ** (1 / r) / (family.sums(v) / meas)
    return _report(per, family)


def reverse_holder(w, r: float, family: CubeFamily) -> float:
    """max over cubes of <w^r>^(1/r) / <w>."""
    return reverse_holder_report(w, r, family).value


def classical_apq(ws, ps, q: float, alpha: float, family: CubeFamily) -> WeightConstantReport:
    """Constant-exponent multiple weight constant in closed form."""
    vs = [check_weight(w) for w in ws]
    n, m = family.grid.n, len(vs)
    _check_constant_consistency(ps, q, alpha, n)
    meas = family.measures
    prod = np.prod(vs, axis=0)
    per = meas ** (alpha / n - m) * _power_sums(prod, family, q) ** (1 / q)
    for v, p in zip(vs, ps):
        pc = p / (p - 1)
        per = per * _power_sums(v, family, -pc) ** (1 / pc)
    return _report(per, family)


def _check_constant_consistency(ps, q, alpha, n):
    lhs = sum(1.0 / p for p in ps) - 1.0 / q
    if abs(lhs - alpha / n) > 1e-10:
        raise ValueError(f"1/p - 1/q = {lhs} does not equal alpha/n = {alpha / n}")


# ------------------------------------------------------------ variable


@dataclass
class WeightVector:
    """Weights w_1..w_m with exponents p_1..p_m and q.

    Derived fields: w = prod w_i, sigma_i = w_i^{-p_i'}, u = w^q.
    """

    weights: list
    ps: list
    q: ExponentField
    w: np.ndarray = field(init=False, repr=False)
    sigmas: list = field(init=False, repr=False)
    u: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.ps):
            raise ValueError("need one exponent per weight")
        vals = [check_weight(w, f"weight {i}") for i, w in enumerate(self.weights)]
        self.weights = [w if isinstance(w, GridField) else GridField(self.q.grid, w) for w in self.weights]
        self.w = np.prod(vals, axis=0)
        self.sigmas = [v ** (-conjugate(p).values) for v, p in zip(vals, self.ps)]
        self.u = self.w ** self.q.values

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def grid(self) -> DomainGrid:
        return self.q.grid

    @property
    def p(self) -> ExponentField:
        """The combined exponent 1/p = sum 1/p_i."""
        return make_exponent(self.grid, 1.0 / sum(1.0 / pi.values for pi in self.ps))

    def alpha(self) -> float:
        """alpha from 1/p - 1/q = alpha/n, checked to be constant."""
        d = 1.0 / self.p.values - 1.0 / self.q.values
        if np.ptp(d) > 1e-10:
            raise ValueError(f"1/p - 1/q varies by {np.ptp(d):.3g}; it must equal alpha/n")
        return float(d.mean()) * self.grid.n

    def consistency_error(self) -> float:
        """Largest relative mismatch of stored sigma_i, u against fresh recomputation."""
        errs = []
        for w, p, s in zip(self.weights, self.ps, self.sigmas):
            fresh = w.values ** (-conjugate(p).values)
            errs.append(np.max(np.abs(fresh - s) / fresh))
        fresh = np.prod([w.values for w in self.weights], axis=0) ** self.q.values
        errs.append(np.max(np.abs(fresh - self.u) / fresh))
        return float(max(errs))


def _check_alpha(wv: WeightVector, alpha: float):
    n, m = wv.grid.n, wv.m
    if not 0 <= alpha < m * n:
        raise ValueError(f"alpha/n must lie in [0, m) = [0, {m})")
    d = 1.0 / wv.p.values - 1.0 / wv.q.values - alpha / n
    if np.max(np.abs(d)) > 1e-10:
        raise ValueError(f"exponents inconsistent with alpha: max |1/p - 1/q - alpha/n| = {np.max(np.abs(d)):.3g}")


def multi_apq_per_cube(wv: WeightVector, alpha: float, family: CubeFamily) -> np.ndarray:
    _check_alpha(wv, alpha)
    n, m = wv.grid.n, wv.m
    per = family.measures ** (alpha / n - m) * cube_norms(wv.w, wv.q, family)
    for w, p in zip(wv.weights, wv.ps):
        per = per * cube_norms(1.0 / w.values, conjugate(p), family)
    return per


def multi_apq_constant(wv: WeightVector, alpha: float, family: CubeFamily) -> WeightConstantReport:
    """sup |B|^{alpha/n - m} ||w chi_B||_q prod ||w_i^-1 chi_B||_{p_i'}."""
    return _report(multi_apq_per_cube(wv, alpha, family), family)


def apq_constant(w, p: ExponentField, q: ExponentField, alpha: float, family: CubeFamily) -> WeightConstantReport:
    """The one-weight constant sup |B|^{alpha/n - 1} ||w chi_B||_q ||w^-1 chi_B||_{p'}."""
    return multi_apq_constant(WeightVector([w], [p], q), alpha, family)


def ap_variable(w, p: ExponentField, family: CubeFamily) -> WeightConstantReport:
    """A_{p(.)}: sup |B|^-1 ||w chi_B||_p ||w^-1 chi_B||_{p'}."""
    v = check_weight(w)
    per = cube_norms(v, p, family) * cube_norms(1.0 / v, conjugate(p), family) / family.measures
    return _report(per, family)


def _split_constant(r, parts):
    """sum_i sup r/r_i: the product-norm constant for 1/r = sum 1/r_i (pointwise)."""
    return float(sum(np.max(r * inv) for inv in parts))


@dataclass
class ImplicationReport:
    multi: float               # [w]_{A_{p,q}}
    left: list                 # [w_j^{-1/m}]^m_{A_{m p_j'}}, j = 1..m
    right: float               # [w^{1/m}]^m_{A_{m q}}
    bounds: list               # proven constant for each of left..., right
    ratios: list               # measured constant / multi, same order
    holds: bool


def vweight4_check(wv: WeightVector, alpha: float, family: CubeFamily, rtol: float = 1e-8) -> ImplicationReport:
    """Each w_j^{-1/m} lies in A_{m p_j'} and w^{1/m} in A_{m q}, with m-th powers
    of the constants bounded by C [w].

    ``C`` is the product-norm constant of the Hölder step, ``K**m`` where
    ``K = sum sup r/r_i`` over the pieces of the split; it is 1 for constant
    exponents.
    """
    n, m = wv.grid.n, wv.m
    multi = multi_apq_constant(wv, alpha, family).value
    lefts, rights, bounds = [], None, []
    inv_pc = [1.0 - 1.0 / p.values for p in wv.ps]
    chi_part = [np.full(wv.grid.shape, alpha / (m * n))] if alpha > 0 else []
    for j, (w, p) in enumerate(zip(wv.weights, wv.ps)):
        r = make_exponent(wv.grid, m * conjugate(p).values)
        lefts.append(ap_variable(w.values ** (-1.0 / m), r, family).value ** m)
        rc = conjugate(r).values
        parts = [1.0 / (m * wv.q.values)] + [inv_pc[i] / m for i in range(m) if i != j] + chi_part
        bounds.append(_split_constant(rc, parts) ** m)
    r = make_exponent(wv.grid, m * wv.q.values)
    rights = ap_variable(wv.w ** (1.0 / m), r, family).value ** m
    rc = conjugate(r).values
    bounds.append(_split_constant(rc, [ip / m for ip in inv_pc] + chi_part) ** m)
    vals = lefts + [rights]
    ratios = [v / multi for v in vals]
    holds = all(v <= b * multi * (1 + rtol) for v, b in zip(vals, bounds))
    return ImplicationReport(multi, lefts, rights, bounds, ratios, holds)


@dataclass
class ProductFactorReport:
    multi: float
    factors: list       # [w_i]_{A_{p_i, q_i}} with 1/q_i = 1/p_i - alpha/(m n)
    bound: float        # proven constant sum sup q/q_i
    ratio: float        # multi / prod factors


def product_factor_check(wv: WeightVector, alpha: float, family: CubeFamily) -> ProductFactorReport:
    n, m = wv.grid.n, wv.m
    multi = multi_apq_constant(wv, alpha, family).value
    factors, parts = [], []
    for w, p in zip(wv.weights, wv.ps):
        inv_qi = 1.0 / p.values - alpha / (m * n)
        qi = make_exponent(wv.grid, 1.0 / inv_qi)
        factors.append(apq_constant(w, p, qi, alpha / m, family).value)
        parts.append(inv_qi)
    bound = _split_constant(wv.q.values, parts)
    return ProductFactorReport(multi, factors, bound, multi / float(np.prod(factors)))


def ainfty_absorption(w, family: CubeFamily, alpha_frac: float, samples: int = 0, rng=None) -> float:
    """Smallest observed w(E)/w(Q) over cells-unions E of Q with |E| >= alpha_frac |Q|.

    For each cube the minimizer is the set of its lightest cells, which is
    always evaluated; ``samples`` random subsets per cube are added on top.
    """
    v = check_weight(w)
    if not 0 < alpha_frac <= 1:
        raise ValueError("alpha_frac must lie in (0, 1]")
    rng = np.random.default_rng(rng)
    best = 1.0
    for index, (vals,), counts in family.gather([v], fill=np.inf):
        srt = np.sort(vals, axis=1)
        k = np.ceil(alpha_frac * counts - 1e-12).astype(int)
        csum = np.cumsum(np.where(np.isfinite(srt), srt, 0.0), axis=1)
        tot = csum[np.arange(len(counts)), counts - 1]
        light = csum[np.arange(len(counts)), k - 1]
        best = min(best, float(np.min(light / tot)))
        for _ in range(samples):
            for r in range(len(counts)):
                c = counts[r]
                size = rng.integers(k[r], c + 1)
                pick = rng.choice(c, size=size, replace=False)
                best = min(best, float(vals[r, pick].sum() / tot[r]))
    return best


def weight_from_spec(grid: DomainGrid, spec, rng=None) -> GridField:
    """Build a weight from a config entry.

    Forms: a number; ``{"kind": "constant", "value"}``; ``{"kind": "power",
    "gamma", "center"}`` giving ``|x - center|^gamma``; ``{"kind": "log-bump",
    "height", "width", "center"}`` giving ``exp(height * exp(-|x-c|^2 / width^2))``;
    ``{"kind": "random-log-uniform", "spread"}`` giving ``exp(U(-spread, spread))``
    per cell; ``{"kind": "spike", "height", "cell"}``; ``{"kind": "file", "path"}``.
    """
    rng = np.random.default_rng(rng)
    if isinstance(spec, (int, float)):
        return GridField(grid, np.full(grid.shape, float(spec)))
    kind = spec.get("kind", "constant")
    x = grid.coords()
    if kind == "constant":
        v = np.full(grid.shape, float(spec["value"]))
    elif kind == "power":
        c = spec.get("center", 0.0)
        r = np.sqrt(sum((xi - c) ** 2 for xi in x))
        v = r ** spec["gamma"]
    elif kind == "log-bump":
        c = spec.get("center", 0.0)
        r2 = sum((xi - c) ** 2 for xi in x)
        v = np.exp(spec.get("height", 1.0) * np.exp(-r2 / spec.get("width", 0.25) ** 2))
    elif kind == "random-log-uniform":
        s = spec.get("spread", 1.0)
        v = np.exp(rng.uniform(-s, s, size=grid.shape))
    elif kind == "spike":
        v = np.ones(grid.shape)
        v.flat[spec.get("cell", grid.size // 2)] = spec.get("height", 1e3)
    elif kind == "file":
        with open(spec["path"]) as fh:
            return GridField.from_dict(json.load(fh))
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    return GridField(grid, check_weight(v))
