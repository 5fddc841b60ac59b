"""Verification suites, experiment configuration and report emission.

A config is a JSON object with ``"schema": "varlex.config/1"``, a ``seed`` and
one entry per suite under ``"suites"``.  Each suite returns a list of
:class:`CheckRecord`; asserted checks carry a tolerance and a pass/fail
status, report-only checks carry measurements alone.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cz import cz_decompose, sparse_domination_check
from .exponents import ExponentField, conjugate, constant_exponent, make_exponent
from .grid import DomainGrid, GridField, enumerate_cubes, unit_interval_grid
from .lebesgue import (dual_lower_bound, holder_check, holder_constant, luxemburg_rows, modular_norm_bounds,
                       monotone_norms, norm, product_norm_check)
from .matrix import (MatrixWeightField, averaging_probes, averaging_ratio, certify, christ_goldberg, directions,
                     matrix_apq_per_cube, matrix_apq_reduced, matrix_field_from_spec, norm_bound_check,
                     reducing_operator, vector_average)
from .operators import dyadic_shifted_cover_check, fractional_average, fractional_maximal
from .weights import WeightVector, apq_constant, multi_apq_per_cube, vweight4_check

SCHEMA = "varlex.config/1"

# one descriptive anchor per check id
ANCHORS = {
    "luxemburg.constant_collapse": "Luxemburg norm reduces to the L^p0 norm for constant exponents",
    "foundations.modular_norm": "modular-norm comparison rho^(1/p+) vs rho^(1/p-)",
    "foundations.holder": "generalized Hölder inequality with constant 4",
    "foundations.holder_slack": "largest observed Hölder quotient with Luxemburg norms on both factors",
    "foundations.product_norm": "norm of a product against the product of norms, 1/p = sum 1/p_i",
    "foundations.dual": "norm recovered by pairing with normalized local extremals",
    "foundations.fatou": "norms of increasing truncations increase to the norm",
    "foundations.vweight4": "multiple weight condition implies the one-weight conditions on its factors",
    "weights.trivial": "the constant weight vector has multiple A_{p,q} constant 1",
    "averaging.upper": "fractional averages are bounded by the multiple weight constant",
    "averaging.lower": "dual witnesses recover the multiple weight constant from the averages",
    "maximal.boundedness": "fractional maximal operator norm against the multiple weight constant",
    "cz.exactness": "stopping cubes, disjoint residual sets and sparse pointwise bound",
    "cover.shifted": "the fractional maximal operator is controlled by the one-third shifted dyadic ones",
    "matrix.sandwich": "reducing operators bracket the averaged norms within sqrt(d)",
    "matrix.scalar_collapse": "for d = 1 the direct and reduced matrix constants coincide",
    "matrix.averaging": "vector averages are bounded by 4 times the matrix weight constant",
    "matrix.reduced_band": "direct and reduced matrix weight constants are comparable",
    "matrix.commutation": "||V W|| = ||W V|| for symmetric V, W",
    "matrix.christ_goldberg": "the matrix maximal operator dominates every vector average",
    "matrix.norm_bound": "[||W||] <= d [W] through the basis split of |W e_i|",
}


class ConfigError(ValueError):
    """Malformed config; ``where`` names the field or the JSON line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# ------------------------------------------------------------------ config


SUITES = ("luxemburg", "foundations", "weights", "averaging", "maximal", "cz", "cover", "matrix")


@dataclass
class ExperimentConfig:
    seed: int = 0
    suites: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    probes: int | None = None
    name: str = "experiment"

    @classmethod
    def from_dict(cls, d) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        if d.get("schema") != SCHEMA:
            raise ConfigError("schema", f"expected {SCHEMA!r}, got {d.get('schema')!r}")
        known = {"schema", "seed", "suites", "tolerances", "probes", "name"}
        extra = sorted(set(d) - known)
        if extra:
            raise ConfigError(extra[0], "unknown top-level field")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        suites = d.get("suites", {})
        if not isinstance(suites, dict):
            raise ConfigError("suites", "must be an object")
        for k, v in suites.items():
            if k not in SUITES:
                raise ConfigError(f"suites.{k}", f"unknown suite; choose from {', '.join(SUITES)}")
            if not isinstance(v, dict):
                raise ConfigError(f"suites.{k}", "must be an object")
            for kk, vv in v.items():
                if isinstance(vv, (int, float)) and not isinstance(vv, bool) and vv < 0:
                    raise ConfigError(f"suites.{k}.{kk}", "must be non-negative")
        tol = d.get("tolerances", {})
        if not isinstance(tol, dict) or any(not isinstance(v, (int, float)) for v in tol.values()):
            raise ConfigError("tolerances", "must map names to numbers")
        probes = d.get("probes")
        if probes is not None and (not isinstance(probes, int) or probes < 1):
            raise ConfigError("probes", "must be a positive integer")
        return cls(seed, suites, tol, probes, d.get("name", "experiment"))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}", e.msg) from None
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA, "name": self.name, "seed": self.seed, "suites": self.suites,
             "tolerances": self.tolerances}
        if self.probes is not None:
            d["probes"] = self.probes
        return d

    def suite(self, name) -> dict:
        return self.suites.get(name, {})

    def tol(self, name, default) -> float:
        return float(self.tolerances.get(name, default))

    def rng(self, check_id: str) -> np.random.Generator:
        """Independent stream per check, fixed by the seed and the check id."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, zlib.crc32(check_id.encode())]))


# ------------------------------------------------------------------ reports


@dataclass
class CheckRecord:
    id: str
    status: str                  # "pass", "fail" or "report"
    measured: dict
    tolerance: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def anchor(self) -> str:
        return ANCHORS[self.id]

    def to_dict(self, runtime=True) -> dict:
        d = {"id": self.id, "anchor": self.anchor, "status": self.status,
             "measured": _plain(self.measured), "tolerance": _plain(self.tolerance)}
        if runtime:
            d["runtime"] = round(self.runtime, 4)
        return d


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class VerificationReport:
    config: dict
    records: list

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    def failures(self) -> list:
        return [r for r in self.records if r.status == "fail"]

    def to_dict(self, runtime=True) -> dict:
        return {"config": self.config, "passed": self.passed,
                "checks": [r.to_dict(runtime) for r in self.records]}

    def to_json(self, runtime=True) -> str:
        return json.dumps(self.to_dict(runtime), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["id", "anchor", "status", "measured", "tolerance", "runtime"])
        for r in self.records:
            d = r.to_dict()
            w.writerow([r.id, r.anchor, r.status, json.dumps(d["measured"], sort_keys=True),
                        json.dumps(d["tolerance"], sort_keys=True), d["runtime"]])
        return buf.getvalue()

    def write(self, json_path, csv_path=None):
        with open(json_path, "w") as fh:
            fh.write(self.to_json())
        if csv_path:
            with open(csv_path, "w") as fh:
                fh.write(self.to_csv())

    def summary_lines(self) -> list:
        return [f"{r.status.upper():6s} {r.id}: {r.anchor}" for r in self.records]


def _timed(check_id, fn):
    t = time.perf_counter()
    status, measured, tolerance = fn()
    return CheckRecord(check_id, status, measured, tolerance, time.perf_counter() - t)


def _status(ok) -> str:
    return "pass" if ok else "fail"


# ------------------------------------------------------------------ helpers


def _random_exponent(grid, rng, lo=1.1, hi=6.0):
    """Either a smooth sine profile or an arbitrary cellwise field, values in [lo, hi]."""
    if rng.random() < 0.5:
        base = rng.uniform(lo + 0.3, hi - 0.3)
        amp = rng.uniform(0, min(base - lo, hi - base))
        x = grid.coords()[0]
        v = base + amp * np.sin(2 * np.pi * rng.integers(1, 4) * (x - grid.lower) / (2 * grid.L))
    else:
        v = rng.uniform(lo, hi, size=grid.shape)
    return make_exponent(grid, v)


def _random_function(grid, rng, scale=None):
    kind = rng.integers(3)
    if kind == 0:
        v = rng.standard_normal(grid.shape)
    elif kind == 1:
        v = rng.exponential(size=grid.shape) * (rng.random(grid.shape) < 0.3)
        if not v.any():
            v.flat[0] = 1.0
    else:
        x = grid.coords()[0]
        c = rng.uniform(grid.lower, grid.lower + 2 * grid.L)
        v = np.exp(-((x - c) / (0.1 * grid.L)) ** 2)
    s = 10.0 ** rng.uniform(-2, 2) if scale is None else scale
    return GridField(grid, s * v)


def _grid(spec, default_N):
    spec = spec or {}
    N = int(spec.get("N", default_N))
    if "L" in spec:
        return DomainGrid(int(spec.get("n", 1)), float(spec["L"]), N, spec.get("lower"))
    return unit_interval_grid(N, int(spec.get("n", 1)))


# ------------------------------------------------------------------ suites


def verify_luxemburg(cfg: ExperimentConfig) -> list:
    s = cfg.suite("luxemburg")
    trials = int(s.get("trials", 100))
    p0s = s.get("exponents", [1.5, 2.0, 3.0])
    g = _grid(s.get("grid"), 1024)
    tol = cfg.tol("luxemburg.rel", 1e-8)
    budget = cfg.tol("luxemburg.seconds", 5.0)

    def run():
        rng = cfg.rng("luxemburg.constant_collapse")
        fields = np.stack([_random_function(g, rng).values.ravel() for _ in range(trials)])
        worst = 0.0
        t = time.perf_counter()
        for p0 in p0s:
            got = luxemburg_rows(fields, np.full(fields.shape, p0), g.cell_volume)[0]
            exact = (np.sum(np.abs(fields) ** p0, axis=1) * g.cell_volume) ** (1 / p0)
            worst = max(worst, float(np.max(np.abs(got - exact) / exact)))
        el = time.perf_counter() - t
        ok = worst <= tol and el < budget
        return _status(ok), {"max_rel_err": worst, "fields": trials * len(p0s), "within_budget": el < budget}, \
            {"rel": tol, "seconds": budget}

    return [_timed("luxemburg.constant_collapse", run)]


def verify_foundations(cfg: ExperimentConfig) -> list:
    s = cfg.suite("foundations")
    trials = int(s.get("trials", 500))
    small = int(s.get("small_trials", 40))
    g = _grid(s.get("grid"), 64)
    tol = cfg.tol("foundations", 1e-9)
    out = []

    def modular():
        rng = cfg.rng("foundations.modular_norm")
        bad = 0
        for _ in range(trials):
            r = modular_norm_bounds(_random_function(g, rng), _random_exponent(g, rng), tol)
            bad += not r.holds
        return _status(bad == 0), {"trials": trials, "violations": bad}, {"rel": tol}

    def holder():
        rng = cfg.rng("foundations.holder")
        bad, worst, top = 0, 0.0, 0.0
        for _ in range(trials):
            p = _random_exponent(g, rng)
            lhs, rhs = holder_check(_random_function(g, rng), _random_function(g, rng), p)
            bad += lhs > rhs * (1 + tol)
            worst = max(worst, lhs / rhs)
            top = max(top, 4 * lhs / rhs)
        return _status(bad == 0), {"trials": trials, "violations": bad, "max_lhs_over_rhs": worst,
                                   "max_quotient": top}, {"rel": tol}

    def holder_slack():
        # pairs built to nearly saturate the inequality: g = |f|^{p-1} has ||g||_{p'} = 1 when ||f||_p = 1
        rng = cfg.rng("foundations.holder_slack")
        best = 0.0
        for _ in range(small):
            p = _random_exponent(g, rng, 1.05, 8.0)
            f = np.abs(_random_function(g, rng).values)
            f = f / norm(f, p)
            gg = f ** (p.values - 1) * np.exp(rng.normal(0, 0.3, g.shape))
            q = np.sum(f * gg) * g.cell_volume / (norm(f, p) * norm(gg, conjugate(p)))
            best = max(best, float(q))
        return "report", {"trials": small, "max_quotient": best}, {}

    def product():
        rng = cfg.rng("foundations.product_norm")
        bad, top = 0, 0.0
        for t in range(small):
            m = 2
            if t == 0:
                ps = [constant_exponent(g, 2.0)] * 2
            else:
                ps = [_random_exponent(g, rng, 1.5, 8.0) for _ in range(m)]
            fs = [_random_function(g, rng) for _ in range(m)]
            r = product_norm_check(fs, ps)
            bad += r.constant > r.bound * (1 + tol)
            if t == 0:
                bad += r.constant > 1 + tol
            top = max(top, r.constant)
        return _status(bad == 0), {"trials": small, "violations": bad, "max_constant": top}, {"rel": tol}

    def dual():
        rng = cfg.rng("foundations.dual")
        bad, lo, hi = 0, np.inf, 0.0
        for _ in range(small):
            p = _random_exponent(g, rng, 1.2, 6.0)
            f = _random_function(g, rng)
            nf = norm(f, p)
            val = dual_lower_bound(f, p, trials=4, rng=rng)
            r = val / nf
            bad += r < 1 - 1e-6 or r > holder_constant(p) * (1 + tol)
            lo, hi = min(lo, r), max(hi, r)
        return _status(bad == 0), {"trials": small, "violations": bad, "min_ratio": lo, "max_ratio": hi}, \
            {"lower": 1e-6, "upper_rel": tol}

    def fatou():
        rng = cfg.rng("foundations.fatou")
        bad = 0
        for _ in range(small):
            p = _random_exponent(g, rng)
            f = _random_function(g, rng)
            seq = monotone_norms(f, p)
            bad += bool(np.any(np.diff(seq) < -tol * seq[-1])) or abs(seq[-1] - norm(f, p)) > tol * seq[-1]
        return _status(bad == 0), {"trials": small, "violations": bad}, {"rel": tol}

    def vweight4():
        rng = cfg.rng("foundations.vweight4")
        gg = _grid(s.get("weight_grid"), 32)
        fam = enumerate_cubes(gg, [0], 3)
        bad, worst = 0, 0.0
        for _ in range(max(2, small // 8)):
            wv, alpha = _random_weight_vector(gg, rng, m=2)
            r = vweight4_check(wv, alpha, fam)
            bad += not r.holds
            worst = max(worst, max(v / b for v, b in zip(r.ratios, r.bounds)))
        return _status(bad == 0), {"violations": bad, "max_ratio_over_bound": worst}, {"rel": 1e-8}

    for cid, fn in [("foundations.modular_norm", modular), ("foundations.holder", holder),
                    ("foundations.holder_slack", holder_slack), ("foundations.product_norm", product),
                    ("foundations.dual", dual), ("foundations.fatou", fatou), ("foundations.vweight4", vweight4)]:
        out.append(_timed(cid, fn))
    return out


def _random_weight_vector(grid, rng, m=2, alpha=None, spread=1.0):
    """Weights, exponents and q with 1/q = sum 1/p_i - alpha/n."""
    n = grid.n
    if alpha is None:
        alpha = float(rng.choice([0.0, 0.25, 0.5])) * n
    ps = [_random_exponent(grid, rng, 1.4, 3.0) for _ in range(m)]
    inv_q = sum(1.0 / p.values for p in ps) - alpha / n
    q = make_exponent(grid, 1.0 / inv_q)
    ws = []
    for _ in range(m):
        if rng.random() < 0.5:
            ws.append(np.exp(rng.uniform(-spread, spread, grid.shape)))
        else:
            x = grid.coords()[0]
            c = rng.uniform(grid.lower, grid.lower + 2 * grid.L)
            ws.append(np.exp(rng.uniform(-2, 2) * np.exp(-((x - c) / (0.2 * grid.L)) ** 2)))
    return WeightVector(ws, ps, q), alpha


def verify_weights(cfg: ExperimentConfig) -> list:
    s = cfg.suite("weights")
    g = _grid(s.get("grid"), 256)
    depth = int(s.get("depth", 6))
    tol = cfg.tol("weights.trivial", 1e-6)

    def run():
        fam = enumerate_cubes(g, [0], depth)
        worst = 0.0
        rows = []
        for m in (1, 2):
            for frac in (0.0, 0.25):
                alpha = frac * g.n
                ps = [constant_exponent(g, v) for v in (2.0, 3.0)[:m]]
                inv_q = sum(1 / p.values for p in ps) - frac
                q = make_exponent(g, 1 / inv_q)
                wv = WeightVector([np.ones(g.shape)] * m, ps, q)
                val = float(np.max(multi_apq_per_cube(wv, alpha, fam)))
                worst = max(worst, abs(val - 1))
                rows.append({"m": m, "alpha_over_n": frac, "constant": val})
        return _status(worst <= tol), {"max_abs_dev": worst, "cases": rows, "cubes": len(fam)}, {"abs": tol}

    return [_timed("weights.trivial", run)]


def _dual_witness(w, p, cube, grid):
    """h with int_B h = ||w^-1 chi_B||_{p'} and ||h w||_p = 1."""
    pc = conjugate(p).values
    sl = cube.slices(grid)
    v = np.zeros(grid.shape)
    v[sl] = 1.0 / w[sl]
    lam = norm(v, conjugate(p))
    h = np.zeros(grid.shape)
    h[sl] = (v[sl] / lam) ** (pc[sl] - 1) / w[sl]
    return h


def _averaging_probes(wv, cube, grid, count, rng):
    sl = cube.slices(grid)
    chi = np.zeros(grid.shape)
    chi[sl] = 1.0
    probes = [[_dual_witness(w.values, p, cube, grid) for w, p in zip(wv.weights, wv.ps)],
              [chi] * wv.m]
    for _ in range(count):
        probes.append([chi * np.abs(_random_function(grid, rng).values) for _ in range(wv.m)])
    return probes


def _average_ratio(wv, fs, alpha, cube, grid):
    A = fractional_average(fs, alpha, cube, grid).values
    top = norm(A * wv.w, wv.q)
    bottom = float(np.prod([norm(f * w.values, p) for f, w, p in zip(fs, wv.weights, wv.ps)]))
    return top, bottom


def verify_averaging_characterization(cfg: ExperimentConfig) -> list:
    s = cfg.suite("averaging")
    g = _grid(s.get("grid"), 128)
    configs = int(s.get("configs", 20))
    depth = int(s.get("depth", 5))
    probes = int(cfg.probes or s.get("probes", 4))
    atol = cfg.tol("averaging.abs", 1e-8)
    fam = enumerate_cubes(g, [0], depth)
    rows = []

    def run_upper():
        rng = cfg.rng("averaging.upper")
        bad = 0
        for c in range(configs):
            wv, alpha = _random_weight_vector(g, rng, m=int(s.get("m", 2)), alpha=s.get("alpha"))
            per = multi_apq_per_cube(wv, alpha, fam)
            const = float(per.max())
            best, worst_slack = 0.0, -np.inf
            for i, cube in enumerate(fam):
                for fs in _averaging_probes(wv, cube, g, probes, rng):
                    top, bottom = _average_ratio(wv, fs, alpha, cube, g)
                    if bottom == 0:
                        continue
                    bad += top > const * bottom + atol
                    worst_slack = max(worst_slack, top - const * bottom)
                    best = max(best, top / bottom)
            rows.append({"config": c, "constant": const, "measured": best, "ratio": const / best,
                         "max_excess": worst_slack})
        return _status(bad == 0), {"configs": configs, "cubes": len(fam), "violations": bad,
                                   "max_excess": max(r["max_excess"] for r in rows)}, {"abs": atol}

    def run_lower():
        ratios = [r["ratio"] for r in rows]
        ok = all(math.isfinite(x) and x > 0 for x in ratios)
        return _status(ok), {"ratios": ratios, "max_ratio": max(ratios),
                             "within_10": all(x <= 10 for x in ratios)}, {"finite": True}

    return [_timed("averaging.upper", run_upper), _timed("averaging.lower", run_lower)]


def verify_maximal_boundedness(cfg: ExperimentConfig) -> list:
    s = cfg.suite("maximal")
    g = _grid(s.get("grid"), 128)
    configs = int(s.get("configs", 4))
    depth = int(s.get("depth", g.levels))
    probes = int(cfg.probes or s.get("probes", 4))
    fam = enumerate_cubes(g, [0], depth)
    tol = cfg.tol("maximal.rel", 1e-10)

    def run():
        rng = cfg.rng("maximal.boundedness")
        rows, bad = [], 0
        for c in range(configs):
            wv, alpha = _random_weight_vector(g, rng, m=int(s.get("m", 2)), alpha=s.get("alpha"))
            const = float(multi_apq_per_cube(wv, alpha, fam).max())
            R, A_best = 0.0, 0.0
            # every family cube indicator plus random probes
            cases = [(cube, [np.where(_mask(cube, g), 1.0, 0.0)] * wv.m) for cube in fam]
            cases += [(None, [np.abs(_random_function(g, rng).values) for _ in range(wv.m)]) for _ in range(probes)]
            for cube, fs in cases:
                M = fractional_maximal(fs, alpha, fam).values
                bottom = float(np.prod([norm(f * w.values, p) for f, w, p in zip(fs, wv.weights, wv.ps)]))
                if bottom == 0:
                    continue
                r = norm(M * wv.w, wv.q) / bottom
                R = max(R, r)
                if cube is not None:
                    top, bot = _average_ratio(wv, fs, alpha, cube, g)
                    a = top / bot
                    A_best = max(A_best, a)
                    bad += r < a * (1 - tol)
            rows.append({"config": c, "R": R, "constant": const, "R_over_constant": R / const,
                         "average_lower": A_best})
        return _status(bad == 0), {"configs": rows, "violations": bad}, {"rel": tol}

    return [_timed("maximal.boundedness", run)]


def _mask(cube, grid):
    m = np.zeros(grid.shape, dtype=bool)
    m[cube.slices(grid)] = True
    return m


def verify_cz(cfg: ExperimentConfig) -> list:
    s = cfg.suite("cz")
    g = _grid(s.get("grid"), 1024)
    trials = int(s.get("trials", 50))
    alpha = float(s.get("alpha", 0.5))
    m = 2
    a = float(s.get("a", 2.0 ** (m * g.n - alpha) + 1))
    bound = a * 2.0 ** (m * g.n - alpha)

    def run():
        rng = cfg.rng("cz.exactness")
        bad, worst = 0, 0.0
        failed = []
        for t in range(trials):
            fs = [np.abs(_random_function(g, rng).values) for _ in range(m)]
            sig = [np.exp(rng.uniform(-1, 1, g.shape)) for _ in range(m)]
            dec = cz_decompose(fs, sig, alpha, a, g, verify=False)
            chk = dec.check()
            rep = sparse_domination_check(dec, fs, sig, alpha)
            ok = all(chk.values()) and rep.max_ratio <= bound
            if not ok:
                bad += 1
                failed.append({"trial": t, **chk, "ratio": rep.max_ratio})
            worst = max(worst, rep.max_ratio)
        return _status(bad == 0), {"trials": trials, "failures": failed, "max_sparse_ratio": worst, "a": a}, \
            {"sparse_bound": bound}

    return [_timed("cz.exactness", run)]


def verify_cover(cfg: ExperimentConfig) -> list:
    s = cfg.suite("cover")
    Ns = s.get("N", [512, 1024])
    alphas = s.get("alpha", [0.0, 0.5])
    L = float(s.get("L", 1.0))
    tol = cfg.tol("cover.change", 0.10)

    def run():
        rows, ok = [], True
        for alpha in alphas:
            consts = []
            exact = True
            for N in Ns:
                g = DomainGrid(1, L, N)
                x = g.coords()[0]
                f1 = ((x > -0.3 * L) & (x < 0.1 * L)).astype(float)
                f2 = np.exp(-((x - 0.2 * L) / (0.15 * L)) ** 2)
                fs = [f1] if alpha == 0 else [f1, f2]
                rep = dyadic_shifted_cover_check(fs, alpha, g)
                exact &= bool(np.all(rep.dyadic0 <= rep.full))
                consts.append(rep.max_ratio)
            change = abs(consts[-1] - consts[0]) / consts[0]
            good = exact and all(map(math.isfinite, consts)) and change < tol
            ok &= good
            rows.append({"alpha": alpha, "m": 1 if alpha == 0 else 2, "N": Ns, "constants": consts,
                         "rel_change": change, "dyadic_below_full": exact})
        return _status(ok), {"cases": rows}, {"rel_change": tol}

    return [_timed("cover.shifted", run)]


def verify_matrix_sandwich(cfg: ExperimentConfig) -> list:
    s = cfg.suite("matrix")
    g = _grid(s.get("grid"), 64)
    configs = int(s.get("configs", 20))
    depth = int(s.get("depth", 3))
    alpha = float(s.get("alpha", 0.25))
    band = float(s.get("band", 50.0))
    slack = cfg.tol("matrix.mvee", 0.01)
    holdout = int(s.get("holdout", 256))
    probes = int(cfg.probes or s.get("probes", 2))
    fam = enumerate_cubes(g, [0], depth)

    def fields(tag):
        rng = cfg.rng(tag)
        for c in range(configs):
            p = _random_exponent(g, rng, 1.5, 2.8)
            q = make_exponent(g, 1 / (1 / p.values - alpha / g.n))
            W = matrix_field_from_spec(g, {"kind": "random", "d": 2, "spread": float(s.get("spread", 1.5))}, rng=rng)
            yield c, p, q, W

    def sandwich():
        bad, worst_f, worst_l = 0, 0.0, np.inf
        for c, p, q, W in fields("matrix.sandwich"):
            fresh = directions(2, holdout, 0.5 + 0.123)
            for Q in fam:
                for dual, e in ((False, q), (True, conjugate(p))):
                    op = reducing_operator(W, e, Q, dual=dual, holdout=holdout, slack=slack)
                    lo, hi = certify(op, W, e, fresh)
                    ok = op.certified and lo >= 1 and hi <= np.sqrt(2) * (1 + slack)
                    bad += not ok
                    worst_f = max(worst_f, op.factor, hi)
                    worst_l = min(worst_l, op.lower, lo)
        return _status(bad == 0), {"configs": configs, "operators": 2 * configs * len(fam), "failures": bad,
                                   "max_factor": worst_f, "min_lower": worst_l}, {"factor": np.sqrt(2) * (1 + slack)}

    def scalar():
        rng = cfg.rng("matrix.scalar_collapse")
        worst = 0.0
        for _ in range(max(2, configs // 4)):
            p = _random_exponent(g, rng, 1.5, 2.8)
            q = make_exponent(g, 1 / (1 / p.values - alpha / g.n))
            w = np.exp(rng.uniform(-1.5, 1.5, g.shape))
            W = MatrixWeightField(g, w.reshape(-1, 1, 1))
            a = float(matrix_apq_per_cube(W, p, q, alpha, fam).max())
            b = matrix_apq_reduced(W, p, q, alpha, fam).value
            c = apq_constant(w, p, q, alpha, fam).value
            worst = max(worst, abs(a - b) / a, abs(a - c) / c)
        tol = cfg.tol("matrix.scalar", 1e-4)
        return _status(worst <= tol), {"max_rel_diff": worst}, {"rel": tol}

    def averaging():
        bad, worst, lower = 0, 0.0, []
        for c, p, q, W in fields("matrix.averaging"):
            per = matrix_apq_per_cube(W, p, q, alpha, fam)
            const = float(per.max())
            best = 0.0
            rng = cfg.rng(f"matrix.averaging.{c}")
            for Q in fam:
                for f in averaging_probes(W, p, Q, probes, rng):
                    r = averaging_ratio(W, f, p, q, alpha, Q)
                    bad += r > 4 * const + 1e-8
                    worst = max(worst, r / (4 * const))
                    best = max(best, r)
            lower.append(const / best)
        return _status(bad == 0), {"configs": configs, "violations": bad, "max_ratio_to_bound": worst,
                                   "constant_over_measured": lower}, {"factor": 4.0}

    def band_check():
        ratios = []
        for c, p, q, W in fields("matrix.reduced_band"):
            a = float(matrix_apq_per_cube(W, p, q, alpha, fam).max())
            b = matrix_apq_reduced(W, p, q, alpha, fam, slack=slack).value
            ratios.append(a / b)
        cd = max(max(ratios), 1 / min(ratios))
        return _status(cd <= band), {"ratios": ratios, "c_d": cd}, {"band": band}

    def commutation():
        worst = 0.0
        for c, p, q, W in fields("matrix.commutation"):
            for Q in fam.cubes[: 4]:
                A = reducing_operator(W, q, Q).matrix
                B = reducing_operator(W, conjugate(p), Q, dual=True).matrix
                x, y = np.linalg.norm(A @ B, 2), np.linalg.norm(B @ A, 2)
                worst = max(worst, abs(x - y) / x)
            if c >= 3:
                break
        return _status(worst <= 1e-10), {"max_rel_diff": worst}, {"rel": 1e-10}

    def christ():
        bad = 0
        worst_direct = 0.0
        for c, p, q, W in fields("matrix.christ_goldberg"):
            rng = cfg.rng(f"matrix.christ_goldberg.{c}")
            f = rng.standard_normal(g.shape + (2,))
            Mf = christ_goldberg(f, W, alpha, fam).values
            for Q in fam:
                A = vector_norm_cells(W, f, alpha, Q, g)
                bad += bool(np.any(A > Mf * (1 + 1e-12) + 1e-300))
            worst_direct = max(worst_direct, float(matrix_apq_per_cube(W, p, q, alpha, fam).max()))
            if c >= 3:
                break
        ok = bad == 0 and math.isfinite(worst_direct)
        return _status(ok), {"violations": bad, "max_direct_constant": worst_direct}, {"rel": 1e-12}

    def norm_bound():
        bad, rows = 0, []
        for c, p, q, W in fields("matrix.norm_bound"):
            r = norm_bound_check(W, p, q, alpha, fam)
            ok = r.norm_constant <= r.bound + 1e-6 and r.triangle_holds and r.basis_holds
            bad += not ok
            rows.append({"norm_constant": r.norm_constant, "matrix_constant": r.matrix_constant,
                         "basis_sum": sum(r.basis_constants), "sum_constant": r.sum_constant,
                         "ratio": r.norm_constant / r.matrix_constant})
        return _status(bad == 0), {"configs": rows, "violations": bad,
                                   "max_ratio": max(x["ratio"] for x in rows)}, {"abs": 1e-6, "factor": 2}

    return [_timed(cid, fn) for cid, fn in [
        ("matrix.sandwich", sandwich), ("matrix.scalar_collapse", scalar), ("matrix.averaging", averaging),
        ("matrix.reduced_band", band_check), ("matrix.commutation", commutation),
        ("matrix.christ_goldberg", christ), ("matrix.norm_bound", norm_bound)]]


def vector_norm_cells(W, f, alpha, Q, grid):
    """|W(x) A_{alpha,Q} f(x)| per cell."""
    A = vector_average(f, alpha, Q, grid).reshape(-1, W.d)
    return np.linalg.norm(np.einsum("cij,cj->ci", W.flat(), A), axis=1).reshape(grid.shape)


RUNNERS = {
    "luxemburg": verify_luxemburg,
    "foundations": verify_foundations,
    "weights": verify_weights,
    "averaging": verify_averaging_characterization,
    "maximal": verify_maximal_boundedness,
    "cz": verify_cz,
    "cover": verify_cover,
    "matrix": verify_matrix_sandwich,
}


def run_verification(cfg: ExperimentConfig, threads: int = 1) -> VerificationReport:
    """Run every suite named in the config; records keep the suite order."""
    seed = os.environ.get("VARLEX_SEED")
    if seed is not None:
        try:
            cfg.seed = int(seed)
        except ValueError:
            raise ConfigError("VARLEX_SEED", f"not an integer: {seed!r}") from None
    names = [n for n in SUITES if n in cfg.suites]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda n: RUNNERS[n](cfg), names))
    else:
        results = [RUNNERS[n](cfg) for n in names]
    return VerificationReport(cfg.to_dict(), [r for res in results for r in res])
