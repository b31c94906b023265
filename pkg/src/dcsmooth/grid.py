"""Uniform grids and extended-real grid functions.

Function values live in (-inf, +inf].  A value of +inf marks a node outside
the function's effective domain; it is represented by the IEEE infinity and
treated as absorbing under addition.  NaN and -inf are rejected at every
construction site, and no operation in this package ever subtracts from an
infinite value, so infinities never leak through arithmetic.

Grids are node-anchored: a 1D grid with bounds [lo, hi] and `nodes` nodes has
step (hi - lo) / (nodes - 1) and node coordinates exactly lo + i * step.  2D
grids are the tensor product of two such axes, stored row-major (the x index
is the slow one).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .errors import (
    GridMismatchError,
    ImproperFunctionError,
    InvalidValueError,
)

# Extended-real scalar: a float that may be +math.inf but never NaN or -inf.
ExtReal = float

#: literal used for +inf in CSV artifacts
_INF_TOKEN = "+inf"


def _check_scalar(value: float, where: str) -> float:
    value = float(value)
    if math.isnan(value):
        raise InvalidValueError(f"NaN value at {where}")
    if value == -math.inf:
        raise InvalidValueError(f"-inf value at {where}")
    return value


@dataclass(frozen=True)
class Grid:
    """A uniform 1D or 2D grid.

    Fields are per-axis tuples so the object stays hashable; use
    :meth:`line` / :meth:`box` for the common constructions.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.nodes)):
            raise InvalidValueError("grid axis tuples must have equal length")
        if len(self.lo) not in (1, 2):
            raise InvalidValueError(f"grid dimension must be 1 or 2, got {len(self.lo)}")
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        object.__setattr__(self, "nodes", tuple(int(n) for n in self.nodes))
        for axis, (lo, hi, n) in enumerate(zip(self.lo, self.hi, self.nodes)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvalidValueError(f"grid bounds on axis {axis} must be finite")
            if not lo < hi:
                raise InvalidValueError(f"grid axis {axis} needs lo < hi, got [{lo}, {hi}]")
            if n < 2:
                raise InvalidValueError(f"grid axis {axis} needs at least 2 nodes, got {n}")

    @classmethod
    def line(cls, lo: float, hi: float, nodes: int) -> "Grid":
        return cls((lo,), (hi,), (nodes,))

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], nodes: Sequence[int]) -> "Grid":
        return cls(tuple(lo), tuple(hi), tuple(nodes))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def step(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.lo, self.hi, self.nodes))

    @property
    def size(self) -> int:
        total = 1
        for n in self.nodes:
            total *= n
        return total

    def axis(self, i: int) -> np.ndarray:
        """Node coordinates along axis `i`, computed as lo + k * step."""
        lo, n = self.lo[i], self.nodes[i]
        out = lo + np.arange(n, dtype=np.float64) * self.step[i]
        out.flags.writeable = False
        return out

    @cached_property
    def points(self) -> np.ndarray:
        """All node coordinates, shape (size, dim), row-major."""
        if self.dim == 1:
            pts = self.axis(0).reshape(-1, 1)
        else:
            xs, ys = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
            pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        pts.flags.writeable = False
        return pts

    def flat_index(self, *multi: int) -> int:
        if len(multi) != self.dim:
            raise InvalidValueError(f"expected {self.dim} indices, got {len(multi)}")
        if self.dim == 1:
            return int(multi[0])
        return int(multi[0]) * self.nodes[1] + int(multi[1])

    def multi_index(self, flat: int) -> tuple[int, ...]:
        if self.dim == 1:
            return (int(flat),)
        return (int(flat) // self.nodes[1], int(flat) % self.nodes[1])

    def interior_mask(self, width: int) -> np.ndarray:
        """Boolean mask of nodes at least `width` nodes from every boundary."""
        if width < 0:
            raise InvalidValueError("mask width must be >= 0")
        masks = []
        for n in self.nodes:
            m = np.zeros(n, dtype=bool)
            if 2 * width < n:
                m[width : n - width] = True
            masks.append(m)
        if self.dim == 1:
            return masks[0]
        return np.logical_and.outer(masks[0], masks[1]).ravel()


def _validate_values(values: np.ndarray, *, where: str = "values") -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if np.isnan(values).any():
        bad = int(np.flatnonzero(np.isnan(values))[0])
        raise InvalidValueError(f"NaN value at {where}[{bad}]")
    if np.isneginf(values).any():
        bad = int(np.flatnonzero(np.isneginf(values))[0])
        raise InvalidValueError(f"-inf value at {where}[{bad}]")
    return values


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A proper extended-real function sampled on a grid.

    `values` is a read-only flat float64 array in row-major node order.
    Proper means at least one node is finite; constructions violating that
    raise ImproperFunctionError.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _validate_values(self.values).reshape(-1).copy()
        if values.size != self.grid.size:
            raise InvalidValueError(
                f"expected {self.grid.size} values for grid, got {values.size}"
            )
        if not np.isfinite(values).any():
            raise ImproperFunctionError("grid function is +inf everywhere")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def sample_max_abs(self) -> float:
        """max |value| over finite nodes; the scale used by relative tolerances."""
        return float(np.abs(self.values[self.finite_mask]).max())


def make_grid_function(grid: Grid, sampler: Callable[..., ExtReal]) -> GridFunction:
    """Sample `sampler` at every node.  The sampler gets one positional float
    per axis and must return a value in (-inf, +inf]."""
    pts = grid.points
    values = np.empty(grid.size, dtype=np.float64)
    for k in range(grid.size):
        v = sampler(*pts[k])
        values[k] = _check_scalar(v, f"node {k}")
    return GridFunction(grid, values)


def from_values(grid: Grid, values: Iterable[float]) -> GridFunction:
    return GridFunction(grid, np.asarray(list(values), dtype=np.float64))


def infimum(f: GridFunction) -> float:
    """Exact minimum over nodes (finite, since f is proper)."""
    return float(f.values.min())


def argmin_set(f: GridFunction, tol: float = 0.0) -> np.ndarray:
    """Flat indices of nodes with value <= infimum(f) + tol.

    tol = 0 means exact equality with the minimum.
    """
    if tol < 0 or math.isnan(tol):
        raise InvalidValueError("argmin tolerance must be >= 0")
    lo = infimum(f)
    return np.flatnonzero(f.values <= lo + tol)


def check_same_grid(*fs: GridFunction) -> Grid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grids differ: {f.grid} vs {grid}")
    return grid


# ---------------------------------------------------------------------------
# CSV artifacts
# ---------------------------------------------------------------------------

def _format_value(v: float) -> str:
    return _INF_TOKEN if v == math.inf else repr(float(v))


def _parse_value(token: str, where: str) -> float:
    token = token.strip()
    if token in (_INF_TOKEN, "inf", "Infinity"):
        return math.inf
    try:
        v = float(token)
    except ValueError as exc:
        raise InvalidValueError(f"unparseable value {token!r} at {where}") from exc
    return _check_scalar(v, where)


def write_csv(f: GridFunction, dest: str | os.PathLike | TextIO, *, columns: dict[str, np.ndarray] | None = None) -> None:
    """Write node coordinates and values row-major.

    Default header is `x,value` / `x,y,value`.  When `columns` is given, its
    keys replace the single value column (all arrays must be node-aligned);
    this is how per-scale pipeline artifacts are written.
    """
    own = isinstance(dest, (str, os.PathLike))
    fh: TextIO = open(dest, "w", newline="") if own else dest  # type: ignore[arg-type]
    try:
        writer = csv.writer(fh)
        coord_names = ["x"] if f.grid.dim == 1 else ["x", "y"]
        cols = columns if columns is not None else {"value": f.values}
        for name, arr in cols.items():
            if np.asarray(arr).size != f.grid.size:
                raise InvalidValueError(f"column {name!r} is not node-aligned")
        writer.writerow(coord_names + list(cols))
        pts = f.grid.points
        for k in range(f.grid.size):
            row = [_format_value(c) for c in pts[k]]
            row += [_format_value(np.asarray(arr).reshape(-1)[k]) for arr in cols.values()]
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def _reconstruct_axis(coords: np.ndarray, axis_name: str) -> tuple[float, float, int]:
    lo, hi, n = float(coords[0]), float(coords[-1]), len(coords)
    if n < 2 or not lo < hi:
        raise InvalidValueError(f"CSV {axis_name}-axis is not an increasing grid")
    step = (hi - lo) / (n - 1)
    expected = lo + np.arange(n) * step
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.max(np.abs(coords - expected)) > tol:
        raise InvalidValueError(f"CSV {axis_name}-axis is not uniformly spaced")
    return lo, hi, n


def read_csv(src: str | os.PathLike | TextIO) -> tuple[GridFunction, dict[str, np.ndarray]]:
    """Read a CSV written by :func:`write_csv`.

    Returns the grid function built from the first value column plus a dict
    of all value columns (so multi-column pipeline artifacts round-trip).
    """
    own = isinstance(src, (str, os.PathLike))
    if own:
        try:
            fh: TextIO = open(src, "r", newline="")
        except FileNotFoundError as exc:
            raise InvalidValueError(f"CSV file not found: {src}") from exc
    else:
        fh = src  # type: ignore[assignment]
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidValueError("empty CSV") from None
        header = [h.strip() for h in header]
        if header[:2] == ["x", "y"]:
            dim, value_names = 2, header[2:]
        elif header[:1] == ["x"]:
            dim, value_names = 1, header[1:]
        else:
            raise InvalidValueError(f"unrecognized CSV header {header!r}")
        if not value_names:
            raise InvalidValueError("CSV has no value columns")
        rows = [r for r in reader if r]
    finally:
        if own:
            fh.close()

    ncol = dim + len(value_names)
    coords = np.empty((len(rows), dim), dtype=np.float64)
    data = np.empty((len(rows), len(value_names)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise InvalidValueError(f"CSV row {i + 2} has {len(row)} fields, expected {ncol}")
        for d in range(dim):
            coords[i, d] = _parse_value(row[d], f"row {i + 2} coord {d}")
            if not math.isfinite(coords[i, d]):
                raise InvalidValueError(f"non-finite coordinate at row {i + 2}")
        for j in range(len(value_names)):
            data[i, j] = _parse_value(row[dim + j], f"row {i + 2} column {value_names[j]!r}")

    if dim == 1:
        lo, hi, n = _reconstruct_axis(coords[:, 0], "x")
        grid = Grid.line(lo, hi, n)
    else:
        # row-major: the first block of rows shares x[0] and sweeps y
        ny = 1
        while ny < len(rows) and coords[ny, 0] == coords[0, 0]:
            ny += 1
        if ny < 2 or len(rows) % ny != 0:
            raise InvalidValueError("CSV rows do not form a row-major 2D grid")
        nx = len(rows) // ny
        xs = coords[::ny, 0]
        ys = coords[:ny, 1]
        if not np.array_equal(np.tile(ys, nx), coords[:, 1]) or not np.array_equal(
            np.repeat(xs, ny), coords[:, 0]
        ):
            raise InvalidValueError("CSV coordinates are not a row-major product grid")
        xlo, xhi, nx = _reconstruct_axis(xs, "x")
        ylo, yhi, ny = _reconstruct_axis(ys, "y")
        grid = Grid.box((xlo, ylo), (xhi, yhi), (nx, ny))

    f = GridFunction(grid, data[:, 0])
    extra = {name: data[:, j].copy() for j, name in enumerate(value_names)}
    return f, extra
