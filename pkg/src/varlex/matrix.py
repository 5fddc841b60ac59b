"""Matrix weights: averaged norms, reducing operators, the two matrix
A_{p(.),q(.)} constants, vector averages and the Christ-Goldberg maximal operator."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .exponents import ExponentField, conjugate
from .grid import CubeFamily, DomainGrid, DyadicCube, GridField
from .lebesgue import luxemburg_rows
from .mvee import centered_mvee, sqrtm_spd
from .weights import WeightConstantReport, _report, apq_constant


@dataclass(frozen=True)
class MatrixWeightField:
    """One symmetric positive-definite d x d matrix per cell, shape ``grid.shape + (d, d)``."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        g = self.grid
        d = int(round((v.size / g.size) ** 0.5))
        if d * d * g.size != v.size or not 1 <= d <= 4:
            raise ValueError(f"need {g.size} d x d blocks with d <= 4, got {v.size} values")
        v = v.reshape(g.shape + (d, d))
        flat = v.reshape(-1, d, d)
        scale = np.linalg.norm(flat, axis=(1, 2))
        asym = np.linalg.norm(flat - flat.transpose(0, 2, 1), axis=(1, 2))
        if np.any(asym > 1e-12 * scale):
            raise ValueError("matrix weight must be symmetric on every cell")
        if np.min(np.linalg.eigvalsh(flat)) <= 0 or not np.all(np.isfinite(v)):
            raise ValueError("matrix weight must be positive definite and finite on every cell")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1, self.d, self.d)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.flat())

    def op_norm(self) -> np.ndarray:
        """||W(x)|| per cell."""
        return np.linalg.eigvalsh(self.flat())[:, -1].reshape(self.grid.shape)

    def apply_norm(self, v, inverse=False) -> np.ndarray:
        """|W(x) v| (or |W^-1(x) v|) per cell."""
        M = self.inverse() if inverse else self.flat()
        return np.linalg.norm(M @ np.asarray(v, dtype=float), axis=-1).reshape(self.grid.shape)

    def to_dict(self) -> dict:
        d = self.grid.to_dict()
        d["d"] = self.d
        d["values"] = self.values.ravel().tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixWeightField":
        grid = DomainGrid(int(d["n"]), float(d["L"]), int(d["N"]), d.get("lower"))
        return cls(grid, np.asarray(d["values"], dtype=float))


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def matrix_field_from_spec(grid: DomainGrid, spec, rng=None) -> MatrixWeightField:
    """Build a matrix weight from a config entry.

    ``{"kind": "identity", "d"}``, ``{"kind": "diagonal", "diag": [...]}``,
    ``{"kind": "random", "d", "spread"}`` (random eigenvalues ``exp(U(-s, s))``
    and random rotations per cell), ``{"kind": "file", "path"}``.
    """
    rng = np.random.default_rng(rng)
    kind = spec.get("kind", "identity")
    shape = grid.shape
    if kind == "identity":
        d = spec.get("d", 2)
        v = np.broadcast_to(np.eye(d), shape + (d, d))
    elif kind == "diagonal":
        v = np.broadcast_to(np.diag(spec["diag"]).astype(float), shape + (len(spec["diag"]),) * 2)
    elif kind == "random":
        d = spec.get("d", 2)
        s = spec.get("spread", 1.0)
        lam = np.exp(rng.uniform(-s, s, size=shape + (d,)))
        Q, _ = np.linalg.qr(rng.standard_normal(shape + (d, d)))
        v = (Q * lam[..., None, :]) @ np.swapaxes(Q, -1, -2)
        v = 0.5 * (v + np.swapaxes(v, -1, -2))
    elif kind == "file":
        with open(spec["path"]) as fh:
            return MatrixWeightField.from_dict(json.load(fh))
    else:
        raise ValueError(f"unknown matrix weight kind {kind!r}")
    return MatrixWeightField(grid, np.array(v))


# ------------------------------------------------------------- averaged norms


def _cube_data(W: MatrixWeightField, p: ExponentField, Q: DyadicCube, inverse: bool):
    g = W.grid
    sl = Q.slices(g)
    M = (np.linalg.inv(W.values[sl]) if inverse else W.values[sl]).reshape(-1, W.d, W.d)
    pv = p.values[sl].ravel()
    meas = M.shape[0] * g.cell_volume
    pQ = 1.0 / np.mean(1.0 / pv)
    return M, pv, meas, pQ


def avg_norms(W: MatrixWeightField, p: ExponentField, Q: DyadicCube, V, inverse: bool = False) -> np.ndarray:
    """<r>_{p,Q}(v) = |Q|^{-1/p_Q} ||chi_Q r(., v)||_p for each row v of ``V``.

    ``r(x, v) = |W(x) v|``, or ``|W^-1(x) v|`` with ``inverse=True``.
    """
    M, pv, meas, pQ = _cube_data(W, p, Q, inverse)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    r = np.linalg.norm(np.einsum("cij,kj->kci", M, V), axis=-1)
    nr = luxemburg_rows(r, pv[None, :], W.grid.cell_volume)[0]
    return meas ** (-1.0 / pQ) * nr


def avg_norm(W: MatrixWeightField, p: ExponentField, Q: DyadicCube, v, inverse: bool = False) -> float:
    return float(avg_norms(W, p, Q, [v], inverse)[0])


def directions(d: int, count: int, offset: float = 0.0, seed: int = 0) -> np.ndarray:
    """Unit vectors: evenly spaced half-circle angles for d = 2, Gaussian samples otherwise."""
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        th = (np.arange(count) + offset) * np.pi / count
        return np.stack([np.cos(th), np.sin(th)], 1)
    X = np.random.default_rng(seed).standard_normal((count, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


@dataclass
class ReducingOperator:
    cube: DyadicCube
    tag: str                  # "q" (r = |W v|) or "dual" (r = |W^-1 v|)
    matrix: np.ndarray        # M with <r>(v) <= |M v| for every v
    ellipsoid: np.ndarray     # A^{1/2} for the enclosing ellipsoid {x^T A x <= 1}
    factor: float             # max of |M v| / <r>(v) on the held-out directions
    lower: float              # min of the same ratio, at least 1
    certified: bool           # lower >= 1 and factor <= sqrt(d) (1 + slack)
    iterations: int


def _inscribed_radius(Y) -> float:
    """Radius of the largest origin-centered ball inside the convex hull of the rows of Y."""
    if Y.shape[1] == 1:
        return float(np.abs(Y).max())
    hull = ConvexHull(Y)
    return float(np.min(-hull.equations[:, -1]))


def reducing_operator(W: MatrixWeightField, p: ExponentField, Q: DyadicCube, dual: bool = False,
                      budget: int | None = None, holdout: int = 256, tol: float = 1e-6,
                      max_iter: int = 10_000, slack: float = 0.01) -> ReducingOperator:
    """A matrix M with <r>(v) <= |M v| <= s <r>(v), s close to sqrt(d).

    Boundary points ``u / <r>(u)`` of the unit ball of ``<r>`` are sampled in
    ``budget`` directions and enclosed by the minimum-volume ellipsoid
    ``{x^T A x <= 1}``.  The hull of the samples lies in that unit ball, so if
    ``A^{1/2}`` maps the hull onto a polytope containing the ball of radius
    ``rho``, then ``M = A^{1/2} / rho`` satisfies the lower bound for every
    direction.  The upper ratio is measured on ``holdout`` fresh directions.
    """
    d = W.d
    budget = 64 * d if budget is None else budget
    U = directions(d, budget, 0.0, seed=1)
    H = directions(d, holdout, 0.37, seed=2) if d > 1 else U
    vals = avg_norms(W, p, Q, np.vstack([U, H]), inverse=dual)
    ru, rh = vals[:len(U)], vals[len(U):]
    pts = np.vstack([U / ru[:, None], -U / ru[:, None]])
    A, it = centered_mvee(pts, tol=tol, max_iter=max_iter)
    M0 = sqrtm_spd(A)
    # the samples solve <r> = 1 to the Luxemburg tolerance
    rho = _inscribed_radius(pts @ M0) * (1 - 1e-9)
    M = M0 / rho
    held = np.linalg.norm(H @ M, axis=1) / rh
    factor, lower = float(held.max()), float(held.min())
    ok = lower >= 1 and factor <= np.sqrt(d) * (1 + slack)
    return ReducingOperator(Q, "dual" if dual else "q", M, M0, factor, lower, bool(ok), it)


def certify(op: ReducingOperator, W: MatrixWeightField, p: ExponentField, V) -> tuple[float, float]:
    """min and max of |M v| / <r>(v) over the rows of V."""
    r = avg_norms(W, p, op.cube, V, inverse=op.tag == "dual")
    s = np.linalg.norm(np.asarray(V) @ op.matrix, axis=1) / r
    return float(s.min()), float(s.max())


# ------------------------------------------------------------------ constants


def _pair_norms(Wx, Winv_y):
    """||W^-1(y) W(x)|| for all pairs, shape (len(x), len(y))."""
    # ||B|| for B = W^-1(y) W(x) is the root of the top eigenvalue of B^T B
    B = np.einsum("yij,xjk->xyik", Winv_y, Wx)
    BtB = np.einsum("xyji,xyjk->xyik", B, B)
    return np.sqrt(np.maximum(np.linalg.eigvalsh(BtB)[..., -1], 0.0))


def matrix_apq_per_cube(W: MatrixWeightField, p: ExponentField, q: ExponentField, alpha: float,
                        family: CubeFamily) -> np.ndarray:
    g = W.grid
    pc = conjugate(p)
    Wf = W.flat()
    Winv = W.inverse()
    out = np.zeros(len(family))
    cv = g.cell_volume
    for i, Q in enumerate(family):
        cells = family.cells(i)
        K = _pair_norms(Wf[cells], Winv[cells])
        inner = luxemburg_rows(K, pc.values.ravel()[cells][None, :], cv)[0]
        outer = luxemburg_rows(inner[None, :], q.values.ravel()[cells][None, :], cv)[0][0]
        out[i] = family.measures[i] ** (alpha / g.n - 1) * outer
    return out


def matrix_apq_direct(W: MatrixWeightField, p: ExponentField, q: ExponentField, alpha: float,
                      family: CubeFamily) -> WeightConstantReport:
    """sup |Q|^{alpha/n - 1} || || ||W^-1(y) W(x)|| chi_Q(y) ||_{p'(y)} chi_Q(x) ||_{q(x)}."""
    _check_exponents(p, q, alpha)
    return _report(matrix_apq_per_cube(W, p, q, alpha, family), family)


def _check_exponents(p, q, alpha):
    dv = 1.0 / p.values - 1.0 / q.values - alpha / p.grid.n
    if np.max(np.abs(dv)) > 1e-10:
        raise ValueError("exponents must satisfy 1/p - 1/q = alpha/n")


def matrix_apq_reduced(W: MatrixWeightField, p: ExponentField, q: ExponentField, alpha: float,
                       family: CubeFamily, **kw) -> WeightConstantReport:
    """sup ||W_Q^q  Wbar_Q^{p'}|| with the reducing operators of |W v| in L^q and
    of |W^-1 v| in L^{p'}."""
    _check_exponents(p, q, alpha)
    pc = conjugate(p)
    per = np.zeros(len(family))
    for i, Q in enumerate(family):
        A = reducing_operator(W, q, Q, **kw).matrix
        B = reducing_operator(W, pc, Q, dual=True, **kw).matrix
        per[i] = np.linalg.norm(A @ B, 2)
    return _report(per, family)


def scalar_projections(W: MatrixWeightField, e, p: ExponentField, q: ExponentField, alpha: float,
                       family: CubeFamily):
    """Scalar A_{p,q} constants of x -> |W(x) e| and x -> ||W(x)||."""
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1) > 1e-12:
        raise ValueError("e must be a unit vector")
    r_e = apq_constant(W.apply_norm(e), p, q, alpha, family)
    r_n = apq_constant(W.op_norm(), p, q, alpha, family)
    return r_e, r_n


@dataclass
class NormBoundReport:
    norm_constant: float          # [||W||]
    basis_constants: list         # [|W e_i|] for the standard basis
    sum_constant: float           # [sum_i |W e_i|]
    matrix_constant: float        # [W] (direct)
    bound: float                  # d [W]

    @property
    def holds(self) -> bool:
        return self.norm_constant <= self.bound + 1e-6

    @property
    def triangle_holds(self) -> bool:
        return self.sum_constant <= sum(self.basis_constants) * (1 + 1e-9)

    @property
    def basis_holds(self) -> bool:
        return sum(self.basis_constants) <= self.bound * (1 + 1e-9)


def norm_bound_check(W: MatrixWeightField, p, q, alpha, family) -> NormBoundReport:
    """[||W||] <= d [W], alongside the basis split [sum |W e_i|] <= sum [|W e_i|] <= d [W]."""
    d = W.d
    basis = [apq_constant(W.apply_norm(e), p, q, alpha, family).value for e in np.eye(d)]
    s = apq_constant(sum(W.apply_norm(e) for e in np.eye(d)), p, q, alpha, family).value
    nc = apq_constant(W.op_norm(), p, q, alpha, family).value
    mc = matrix_apq_direct(W, p, q, alpha, family).value
    return NormBoundReport(nc, basis, s, mc, d * mc)


# ------------------------------------------------------------------ operators


def vector_average(f, alpha: float, Q: DyadicCube, grid: DomainGrid) -> np.ndarray:
    """(|Q|^{alpha/n - 1} int_Q f) chi_Q for a vector field f of shape grid.shape + (d,)."""
    f = np.asarray(f, dtype=float)
    sl = Q.slices(grid)
    vol = Q.volume(grid)
    c = f[sl].reshape(-1, f.shape[-1]).sum(0) * grid.cell_volume * vol ** (alpha / grid.n - 1)
    out = np.zeros_like(f)
    out[sl] = c
    return out


def vector_norm(f, W: MatrixWeightField, p: ExponentField) -> float:
    """||f||_{L^p(W)} = || |W(x) f(x)| ||_p."""
    r = np.linalg.norm(np.einsum("cij,cj->ci", W.flat(), np.asarray(f).reshape(-1, W.d)), axis=1)
    return float(luxemburg_rows(r[None, :], p.values.ravel()[None, :], W.grid.cell_volume)[0][0])


def christ_goldberg(f, W: MatrixWeightField, alpha: float, family: CubeFamily) -> GridField:
    """max over cubes Q containing x of |Q|^{alpha/n - 1} int_Q |W(x) W^-1(y) f(y)| dy."""
    g = W.grid
    fv = np.asarray(f, dtype=float).reshape(-1, W.d)
    G = np.einsum("cij,cj->ci", W.inverse(), fv)
    Wf = W.flat()
    vols = family.volumes
    out = np.zeros(g.size)
    for i in range(len(family)):
        cells = family.cells(i)
        v = np.einsum("xij,yj->xyi", Wf[cells], G[cells])
        val = np.linalg.norm(v, axis=-1).sum(1) * g.cell_volume * vols[i] ** (alpha / g.n - 1)
        np.maximum.at(out, cells, val)
    return GridField(g, out)


def averaging_probes(W: MatrixWeightField, p: ExponentField, Q: DyadicCube, count: int = 4, rng=None) -> list:
    """Vector test fields supported on Q for the averaging operator.

    Constant vectors, the dual-type fields ``W^-1(y) v |W^-1(y) v|^{p'(y) - 2}``
    that nearly saturate the Hölder step, and random fields.
    """
    rng = np.random.default_rng(rng)
    g, d = W.grid, W.d
    sl = Q.slices(g)
    chi = np.zeros(g.shape + (1,))
    chi[sl] = 1.0
    Winv = W.inverse().reshape(g.shape + (d, d))
    pc = conjugate(p).values[..., None]
    out = []
    for v in np.eye(d):
        out.append(chi * v)
        y = Winv @ v
        r = np.linalg.norm(y, axis=-1, keepdims=True)
        out.append(chi * y * r ** (pc - 2))
        out.append(chi * (Winv @ y[..., None])[..., 0])
    for _ in range(count):
        out.append(chi * rng.standard_normal(g.shape + (d,)))
    return out


def averaging_ratio(W: MatrixWeightField, f, p: ExponentField, q: ExponentField, alpha: float, Q: DyadicCube) -> float:
    """||W A_{alpha,Q} f||_q / ||f||_{L^p(W)}."""
    den = vector_norm(f, W, p)
    if den == 0:
        return 0.0
    return vector_norm(vector_average(f, alpha, Q, W.grid), W, q) / den
