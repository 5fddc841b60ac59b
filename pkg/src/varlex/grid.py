"""Uniform grids on a cube window and the dyadic / one-third shifted cube families.

Every cube is identified by ``(shift, depth, corner)``.  In unit coordinates
``u = (x - lower) / (2L)`` the cube is ``2**-k * ((-1)**k t + j + [0, 1)**n)``.
A cell belongs to a cube when its center does, so every cube is a box of cells
and all integrals are midpoint Riemann sums.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

THIRD = Fraction(1, 3)


@dataclass(frozen=True)
class DomainGrid:
    """Uniform grid of ``N**n`` cells over ``[lower, lower + 2L)**n``.

    ``lower`` defaults to ``-L`` so the window is ``[-L, L)**n``.
    """

    n: int
    L: float
    N: int
    lower: float | None = None

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"half-width must be positive, got {self.L}")
        N = int(self.N)
        if N < 1 or N & (N - 1):
            raise ValueError(f"cells per axis must be a power of two, got {self.N}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", float(self.L))
        lo = -self.L if self.lower is None else float(self.lower)
        object.__setattr__(self, "lower", lo)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def levels(self) -> int:
        """log2 N, the finest depth at which dyadic cubes are single cells."""
        return self.N.bit_length() - 1

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.n

    def axis_centers(self) -> np.ndarray:
        return self.lower + (np.arange(self.N) + 0.5) * self.h

    def coords(self) -> list[np.ndarray]:
        """Cell-center coordinates, one array of shape ``self.shape`` per axis."""
        c = self.axis_centers()
        return list(np.meshgrid(*([c] * self.n), indexing="ij"))

    def centers(self) -> np.ndarray:
        """Cell centers as an array of shape ``(size, n)`` in row-major order."""
        return np.stack([x.ravel() for x in self.coords()], axis=1)

    def radius(self) -> np.ndarray:
        """|x| at each cell center."""
        return np.sqrt(sum(x ** 2 for x in self.coords()))

    def to_dict(self) -> dict:
        d = {"n": self.n, "L": self.L, "N": self.N}
        if self.lower != -self.L:
            d["lower"] = self.lower
        return d


def build_domain(n: int, L: float, N: int, lower: float | None = None) -> DomainGrid:
    return DomainGrid(n, L, N, lower)


def unit_interval_grid(N: int, n: int = 1) -> DomainGrid:
    """Grid over ``[0, 1)**n``, the window used by most hand-checkable examples."""
    return DomainGrid(n, 0.5, N, 0.0)


# ---------------------------------------------------------------- fields


@dataclass(frozen=True)
class GridField:
    """One real value per cell, stored with shape ``grid.shape``."""

    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values)

    def to_dict(self) -> dict:
        d = self.grid.to_dict()
        d["values"] = self.values.ravel().tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GridField":
        grid = DomainGrid(int(d["n"]), float(d["L"]), int(d["N"]), d.get("lower"))
        return cls(grid, np.asarray(d["values"], dtype=float))


def constant_field(grid: DomainGrid, c: float) -> GridField:
    return GridField(grid, np.full(grid.shape, float(c)))


def field_from_function(grid: DomainGrid, fn) -> GridField:
    """Sample ``fn(*coords)`` at the cell centers."""
    return GridField(grid, np.broadcast_to(fn(*grid.coords()), grid.shape))


def as_values(f) -> np.ndarray:
    return f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)


# ---------------------------------------------------------------- cubes


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def normalize_shift(t, n: int) -> tuple:
    """Accept ``0``, ``1/3`` (float or Fraction) or a per-axis tuple of them."""
    if np.ndim(t) == 0:
        t = (t,) * n
    out = []
    for ti in t:
        fr = Fraction(ti).limit_denominator(3)
        if fr not in (0, THIRD):
            raise ValueError(f"shift components must be 0 or 1/3, got {ti}")
        out.append(fr)
    if len(out) != n:
        raise ValueError(f"shift {t} does not have {n} components")
    return tuple(out)


def all_shifts(n: int) -> list[tuple]:
    return [tuple(s) for s in itertools.product((Fraction(0), THIRD), repeat=n)]


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Cube of the family with shift ``t`` at depth ``k`` and corner ``j``.

    Negative depths are allowed; they are the ancestors of the window that the
    stopping-time construction needs when the data fill the whole window.
    """

    shift: tuple
    depth: int
    corner: tuple

    def _signed_sixths(self) -> tuple:
        # 6 * (-1)**k * t for each axis, an integer in {0, 2, -2}
        sign = 1 if self.depth % 2 == 0 else -1
        return tuple(int(6 * t) * sign for t in self.shift)

    def _cells_per_side(self, grid: DomainGrid) -> int:
        if self.depth > grid.levels:
            raise ValueError(f"depth {self.depth} is finer than the grid (log2 N = {grid.levels})")
        return grid.N >> self.depth if self.depth >= 0 else grid.N << (-self.depth)

    def axis_range(self, grid: DomainGrid, axis: int) -> tuple[int, int]:
        """Half-open cell index range ``[lo, hi)`` whose centers lie in the cube."""
        M = self._cells_per_side(grid)
        # in units of 1/(6N): center of cell i is 3(2i+1), cube is [A, A + 6M)
        A = M * (6 * self.corner[axis] + self._signed_sixths()[axis])
        lo = _ceil_div(A - 3, 6)
        hi = _ceil_div(A + 6 * M - 3, 6)
        return max(lo, 0), min(hi, grid.N)

    def slices(self, grid: DomainGrid) -> tuple:
        return tuple(slice(*self.axis_range(grid, a)) for a in range(grid.n))

    def n_cells(self, grid: DomainGrid) -> int:
        out = 1
        for a in range(grid.n):
            lo, hi = self.axis_range(grid, a)
            out *= max(hi - lo, 0)
        return out

    def side(self, grid: DomainGrid) -> float:
        return 2.0 * grid.L * 2.0 ** (-self.depth)

    def volume(self, grid: DomainGrid) -> float:
        """Geometric volume ``l(Q)**n`` (data are zero outside the window)."""
        return self.side(grid) ** grid.n

    def measure(self, grid: DomainGrid) -> float:
        """Volume of the cells of the cube that lie in the window."""
        return self.n_cells(grid) * grid.cell_volume

    def bounds(self, grid: DomainGrid) -> list[tuple[float, float]]:
        s = self.side(grid)
        sign = 1 if self.depth % 2 == 0 else -1
        out = []
        for t, j in zip(self.shift, self.corner):
            a = grid.lower + s * (j + sign * float(t))
            out.append((a, a + s))
        return out

    def parent(self) -> "DyadicCube":
        sign = 1 if self.depth % 2 == 0 else -1
        # 2J <= j + 3 s_k with 3 s_k an integer for t in {0, 1/3}
        corner = tuple((j + int(3 * t) * sign) // 2 for t, j in zip(self.shift, self.corner))
        return DyadicCube(self.shift, self.depth - 1, corner)

    def children(self) -> list["DyadicCube"]:
        sign = 1 if self.depth % 2 == 0 else -1
        # child corner J = 2j + 3 s_k, since s_{k+1} = -s_k
        base = [2 * j + int(3 * t) * sign for t, j in zip(self.shift, self.corner)]
        return [DyadicCube(self.shift, self.depth + 1, tuple(b + o for b, o in zip(base, off)))
                for off in itertools.product((0, 1), repeat=len(base))]

    def label(self) -> str:
        sh = ",".join(str(t) for t in self.shift)
        co = ",".join(str(j) for j in self.corner)
        return f"t=({sh}) k={self.depth} j=({co})"

    def to_dict(self) -> dict:
        return {"shift": [str(t) for t in self.shift], "depth": self.depth, "corner": list(self.corner)}


def integrate_over(cube: DyadicCube, field: GridField) -> float:
    g = field.grid
    return float(field.values[cube.slices(g)].sum() * g.cell_volume)


def average_over(cube: DyadicCube, field: GridField) -> float:
    """Mean over the cells of the cube that lie in the window."""
    m = cube.measure(field.grid)
    return integrate_over(cube, field) / m if m > 0 else 0.0


@dataclass
class CubeGroup:
    """All family cubes of one (shift, depth); they tile the window."""

    shift: tuple
    depth: int
    index: np.ndarray      # positions in the family list
    labels: np.ndarray     # family position of the cube owning each cell


@dataclass
class CubeFamily:
    grid: DomainGrid
    shifts: tuple
    max_depth: int
    cubes: list = field(default_factory=list)
    groups: list = field(default_factory=list)

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __getitem__(self, i):
        return self.cubes[i]

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.array([q.volume(self.grid) for q in self.cubes])

    @cached_property
    def measures(self) -> np.ndarray:
        return np.array([q.measure(self.grid) for q in self.cubes])

    @cached_property
    def boxes(self) -> np.ndarray:
        """Cell index bounds, shape ``(len, n, 2)``: ``[lo, hi)`` per axis."""
        return np.array([[q.axis_range(self.grid, a) for a in range(self.grid.n)] for q in self.cubes],
                        dtype=np.intp).reshape(len(self.cubes), self.grid.n, 2)

    @cached_property
    def sides(self) -> np.ndarray:
        return np.array([q.side(self.grid) for q in self.cubes])

    def sums(self, values) -> np.ndarray:
        """Integral of ``values`` over every cube, in family order.

        Box sums come from a summed-area table of ``values * cell volume``, the
        same arithmetic :func:`box_sums` uses, so a cube reached through two
        different families gets bitwise identical integrals.
        """
        S = prefix_sums(as_values(values) * self.grid.cell_volume)
        return box_sums(S, self.boxes)

    def cell_max(self, per_cube) -> np.ndarray:
        """Per cell, the largest ``per_cube`` value over family cubes containing it."""
        per_cube = np.asarray(per_cube, dtype=float)
        out = np.full(self.grid.shape, -np.inf)
        for g in self.groups:
            np.maximum(out, per_cube[g.labels], out=out)
        return out

    def cell_argmax(self, per_cube) -> np.ndarray:
        per_cube = np.asarray(per_cube, dtype=float)
        best = np.full(self.grid.shape, -np.inf)
        arg = np.full(self.grid.shape, -1)
        for g in self.groups:
            v = per_cube[g.labels]
            better = v > best
            best[better] = v[better]
            arg[better] = g.labels[better]
        return arg

    def gather(self, arrays, fill=0.0, groups=None):
        """Yield ``(index, rows, counts)`` per group of cubes.

        ``rows`` holds, for each array, a ``(len(index), max_cells)`` matrix whose
        row ``r`` lists the values on the cells of cube ``index[r]``, padded with
        ``fill``.
        """
        flat = [as_values(a).ravel() for a in arrays]
        for g in (self.groups if groups is None else groups):
            lab = g.labels.ravel()
            order = np.argsort(lab, kind="stable")
            counts_all = np.bincount(lab, minlength=len(self.cubes))
            starts = np.concatenate([[0], np.cumsum(counts_all)[:-1]])
            sorted_lab = lab[order]
            rank = np.arange(lab.size) - starts[sorted_lab]
            row_of = np.full(len(self.cubes), -1)
            row_of[g.index] = np.arange(len(g.index))
            counts = counts_all[g.index]
            width = int(counts.max())
            rows = []
            for v in flat:
                m = np.full((len(g.index), width), fill, dtype=v.dtype)
                m[row_of[sorted_lab], rank] = v[order]
                rows.append(m)
            yield g.index, rows, counts

    def cells(self, i: int) -> np.ndarray:
        """Flat (row-major) indices of the cells of cube ``i``."""
        idx = np.arange(self.grid.size).reshape(self.grid.shape)
        return idx[self.cubes[i].slices(self.grid)].ravel()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.grid.n
        w.writerow(["shift", "depth"] + [f"corner{a}" for a in range(n)] + ["side"])
        for q in self.cubes:
            sh = ";".join(str(t) for t in q.shift)
            w.writerow([sh, q.depth, *q.corner, repr(q.side(self.grid))])
        return buf.getvalue()


def enumerate_cubes(grid: DomainGrid, shifts=(0,), K: int | None = None) -> CubeFamily:
    """All cubes of the given shifts with depth ``0..K`` that contain a cell center.

    ``shifts`` is an iterable of shifts (see :func:`normalize_shift`) or the
    string ``"all"`` for ``{0, 1/3}**n``.
    """
    K = grid.levels if K is None else int(K)
    if K < 0 or K > grid.levels:
        raise ValueError(f"max depth must be in [0, {grid.levels}], got {K}")
    if isinstance(shifts, str):
        if shifts != "all":
            raise ValueError(f"unknown shift set {shifts!r}")
        shift_list = all_shifts(grid.n)
    else:
        shift_list = []
        for t in shifts:
            t = normalize_shift(t, grid.n)
            if t not in shift_list:
                shift_list.append(t)
    fam = CubeFamily(grid, tuple(shift_list), K)
    for t in shift_list:
        for k in range(K + 1):
            labels = np.full(grid.shape, -1, dtype=np.intp)
            idx = []
            # corners whose cube meets the window: -1 - s < j < 2**k - s
            ranges = [range(-1, 2 ** k + 1)] * grid.n
            for corner in itertools.product(*ranges):
                q = DyadicCube(t, k, corner)
                sl = q.slices(grid)
                if any(s.stop <= s.start for s in sl):
                    continue
                pos = len(fam.cubes)
                fam.cubes.append(q)
                labels[sl] = pos
                idx.append(pos)
            assert (labels >= 0).all(), "cubes of one depth must cover the window"
            fam.groups.append(CubeGroup(t, k, np.array(idx, dtype=np.intp), labels))
    return fam


@dataclass(frozen=True)
class AllCubes:
    """Every cube whose sides are unions of whole cells and that lies in the window.

    Used as the stand-in for "all cubes" when comparing against dyadic
    families.  It is never materialized cube by cube.
    """

    grid: DomainGrid


def prefix_sums(values: np.ndarray) -> np.ndarray:
    """Summed-area table with a leading zero row/column on every axis."""
    s = np.asarray(values, dtype=float)
    for a in range(s.ndim):
        s = np.cumsum(s, axis=a)
        pad = [(0, 0)] * s.ndim
        pad[a] = (1, 0)
        s = np.pad(s, pad)
    return s


def box_sums(S: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Sums over cell boxes from a summed-area table ``S``."""
    if boxes.shape[1] == 1:
        return S[boxes[:, 0, 1]] - S[boxes[:, 0, 0]]
    r0, r1 = boxes[:, 0, 0], boxes[:, 0, 1]
    c0, c1 = boxes[:, 1, 0], boxes[:, 1, 1]
    return S[r1, c1] - S[r0, c1] - S[r1, c0] + S[r0, c0]
