"""Variable exponents: classes, conjugates, Sobolev-type shifts, log-Hölder scans
and the cube-local exponents eta(Q), delta(Q)."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import DomainGrid, DyadicCube, GridField

CLASSES = ("P", "P1", "P0")


def classify(values) -> str:
    lo = float(np.min(values))
    if lo > 1:
        return "P"
    if lo >= 1:
        return "P1"
    if lo > 0:
        return "P0"
    raise ValueError(f"exponent must be positive, minimum is {lo}")


@dataclass(frozen=True)
class ExponentField(GridField):
    """Exponent samples with their class tag.

    ``P``: 1 < p- <= p+ < inf, ``P1``: p- >= 1, ``P0``: p- > 0.  ``p_inf`` is the
    value used by the decay part of the log-Hölder scan; ``None`` means the
    sample at the cell farthest from the origin.
    """

    cls: str = "P"
    p_inf: float | None = None

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if not np.all(np.isfinite(v)):
            raise ValueError("exponent must be finite")
        lo = float(v.min())
        if self.cls not in CLASSES:
            raise ValueError(f"unknown exponent class {self.cls!r}")
        need = {"P": (lo > 1), "P1": (lo >= 1), "P0": (lo > 0)}[self.cls]
        if not need:
            raise ValueError(f"p- = {lo} is outside class {self.cls}")

    @property
    def p_minus(self) -> float:
        return float(self.values.min())

    @property
    def p_plus(self) -> float:
        return float(self.values.max())

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def asymptotic_value(self) -> float:
        if self.p_inf is not None:
            return float(self.p_inf)
        r = self.grid.radius().ravel()
        return float(self.values.ravel()[np.argmax(r)])

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["class"] = self.cls
        if self.p_inf is not None:
            d["p_inf"] = self.p_inf
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExponentField":
        base = GridField.from_dict(d)
        values = base.values
        return cls(base.grid, values, d.get("class") or classify(values), d.get("p_inf"))


def make_exponent(grid: DomainGrid, values, cls: str | None = None, p_inf=None) -> ExponentField:
    values = np.broadcast_to(np.asarray(values, dtype=float), grid.shape)
    return ExponentField(grid, values, cls or classify(values), p_inf)


def constant_exponent(grid: DomainGrid, p0: float) -> ExponentField:
    return make_exponent(grid, np.full(grid.shape, float(p0)))


def as_exponent(p) -> ExponentField:
    if isinstance(p, ExponentField):
        return p
    if isinstance(p, GridField):
        return make_exponent(p.grid, p.values)
    raise TypeError("expected an ExponentField")


def conjugate(p: ExponentField) -> ExponentField:
    """p' = p / (p - 1).  Requires p- > 1."""
    if p.p_minus <= 1:
        raise ValueError(f"conjugate exponent is unbounded: p- = {p.p_minus}")
    v = p.values
    pinf = None if p.p_inf is None else p.p_inf / (p.p_inf - 1)
    return ExponentField(p.grid, v / (v - 1.0), "P", pinf)


def reciprocal_sum(ps) -> ExponentField:
    """The exponent p with 1/p = sum 1/p_i."""
    ps = list(ps)
    inv = sum(1.0 / pi.values for pi in ps)
    return make_exponent(ps[0].grid, 1.0 / inv)


def derive_q(p: ExponentField, alpha: float, n: int | None = None, m: int = 1) -> ExponentField:
    """The exponent q with 1/q = 1/p - alpha/n.

    ``p`` is the combined exponent of an m-linear problem; ``m`` only enters
    through the admissible range 0 <= alpha < m n.
    """
    n = p.grid.n if n is None else n
    if not 0 <= alpha < m * n:
        raise ValueError(f"order alpha = {alpha} must lie in [0, {m * n})")
    inv = 1.0 / p.values - alpha / n
    if np.any(inv <= 0):
        bad = np.unravel_index(int(np.argmin(inv)), inv.shape)
        raise ValueError(f"1/q = {inv[bad]:.6g} is not positive at cell {tuple(int(b) for b in bad)}")
    if alpha == 0:
        q = np.array(p.values)
    else:
        q = 1.0 / inv
    return make_exponent(p.grid, q)


def p_from_q(q: ExponentField, alpha: float, n: int | None = None) -> ExponentField:
    n = q.grid.n if n is None else n
    return make_exponent(q.grid, 1.0 / (1.0 / q.values + alpha / n))


@dataclass(frozen=True)
class LogHolderReport:
    c0: float       # local constant
    c_inf: float    # decay constant
    p_inf: float


def log_holder(p: ExponentField, p_inf: float | None = None, block: int = 512) -> LogHolderReport:
    """Grid estimates of the local and decay log-Hölder constants.

    The local scan uses every pair of cells with ``h <= |x - y| < 1/2``.
    """
    g = p.grid
    x = g.centers()
    v = p.values.ravel()
    h = g.h
    c0 = 0.0
    for s in range(0, len(v), block):
        d = np.sqrt(((x[s:s + block, None, :] - x[None, :, :]) ** 2).sum(-1))
        ok = (d >= h * (1 - 1e-12)) & (d < 0.5)
        if not ok.any():
            continue
        dv = np.abs(v[s:s + block, None] - v[None, :])
        with np.errstate(divide="ignore"):
            w = np.where(ok, dv * -np.log(np.where(ok, d, 1.0)), 0.0)
        c0 = max(c0, float(w.max()))
    pinf = p.asymptotic_value() if p_inf is None else float(p_inf)
    r = g.radius().ravel()
    c_inf = float(np.max(np.abs(v - pinf) * np.log(np.e + r)))
    return LogHolderReport(c0, c_inf, pinf)


@dataclass(frozen=True)
class CubeExponents:
    p_minus: tuple          # ess inf of each factor on Q
    p_plus: tuple           # ess sup of each factor on Q
    harmonic_means: tuple   # 1/p_Q = <1/p>_Q for each factor
    eta: float              # 1/eta = sum 1/(p_i)-(Q)
    delta: float            # 1/delta = 1/eta - alpha/n
    p_Q: float              # harmonic mean of the combined exponent 1/p = sum 1/p_i


def cube_exponents(p_list, alpha: float, Q: DyadicCube) -> CubeExponents:
    if isinstance(p_list, GridField):
        p_list = [p_list]
    g = p_list[0].grid
    sl = Q.slices(g)
    blocks = [pi.values[sl] for pi in p_list]
    if blocks[0].size == 0:
        raise ValueError(f"cube {Q.label()} contains no cells")
    pm = tuple(float(b.min()) for b in blocks)
    pp = tuple(float(b.max()) for b in blocks)
    hm = tuple(float(1.0 / np.mean(1.0 / b)) for b in blocks)
    inv_eta = sum(1.0 / a for a in pm)
    inv_delta = inv_eta - alpha / g.n
    if inv_delta <= 0:
        raise ValueError(f"delta(Q) undefined on {Q.label()}: 1/eta = {inv_eta} <= alpha/n")
    p_Q = float(1.0 / np.mean(sum(1.0 / b for b in blocks)))
    return CubeExponents(pm, pp, hm, 1.0 / inv_eta, 1.0 / inv_delta, p_Q)


def exponent_from_spec(grid: DomainGrid, spec) -> ExponentField:
    """Build an exponent from a config entry.

    Forms: a number (constant); ``{"kind": "constant", "value"}``;
    ``{"kind": "sine", "base", "amplitude", "frequency"}`` giving
    ``base + amplitude * sin(2 pi frequency x_1)``; ``{"kind": "log-decay",
    "limit", "scale"}`` giving ``limit + scale / log(e + |x|)``;
    ``{"kind": "file", "path"}``.
    """
    if isinstance(spec, (int, float)):
        return constant_exponent(grid, spec)
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return constant_exponent(grid, spec["value"])
    if kind == "sine":
        x = grid.coords()[0]
        v = spec["base"] + spec.get("amplitude", 0.5) * np.sin(2 * np.pi * spec.get("frequency", 1.0) * x)
        return make_exponent(grid, v)
    if kind == "log-decay":
        lim = spec["limit"]
        v = lim + spec.get("scale", 1.0) / np.log(np.e + grid.radius())
        return make_exponent(grid, v, p_inf=lim)
    if kind == "file":
        with open(spec["path"]) as fh:
            return ExponentField.from_dict(json.load(fh))
    raise ValueError(f"unknown exponent kind {kind!r}")
