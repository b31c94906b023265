"""Discrete convex envelopes, conjugate-function oracles, and curvature probes.

The convex envelope of a grid function is the greatest convex function that
stays below its finite samples.  In 1D it is the lower convex hull computed
by a monotone chain over node indices; near-ties in the orientation test fall
back to exact rational arithmetic, so the vertex set is exactly that of the
sampled points and hull vertices reproduce their sample values bit-for-bit.
In 2D it is assembled from the lower facets of the 3D hull of (x, y, value).

Nodes outside the convex hull of the finite nodes get +inf (the greatest
convex minorant is unbounded there); +inf nodes inside it get the finite hull
value — infinite samples never act as constraints.

The Legendre transform / biconjugate pair is an independent oracle for the
same object: it never touches the hull code, only max-reductions of affine
families, and agrees with the hull on the finite-node hull up to slope-grid
resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    DegenerateHullError,
    InvalidValueError,
    NotConvexError,
    SlopeRangeTooNarrowError,
)
from .grid import Grid, GridFunction
from .norms import NormSpec, _norms

#: relative tolerance for convexity certification
CONVEXITY_RTOL = 1e-9

#: relative snap tolerance: 2D plane evaluation within this of the sample is
#: snapped to the sample so contact nodes reproduce their values exactly
_SNAP_RTOL = 1e-12

_BLOCK_ENTRIES = 4_000_000


def _finite_scale(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return 1.0 + (float(np.abs(finite).max()) if finite.size else 0.0)


def convexity_violation(f: GridFunction) -> float:
    """Worst violation of discrete convexity (0.0 for convex samples).

    Checks second differences along every axis line and, in 2D, both
    diagonals, over triples of finite nodes, plus contiguity of the finite
    set along each probed line (the domain of a convex function is convex,
    so finite nodes with an infinite node between them violate it).
    Returns +inf for a contiguity violation.
    """
    v = f.values if f.grid.dim == 1 else f.values.reshape(f.grid.nodes)
    worst = 0.0
    if f.grid.dim == 1:
        lines = [v]
    else:
        nx, ny = v.shape
        lines = [v[i, :] for i in range(nx)] + [v[:, j] for j in range(ny)]
        lines += [np.diagonal(v, offset=k) for k in range(-nx + 1, ny)]
        flipped = v[::-1, :]
        lines += [np.diagonal(flipped, offset=k) for k in range(-nx + 1, ny)]
    for line in lines:
        if len(line) < 3:
            finite_idx = np.flatnonzero(np.isfinite(line))
            if len(finite_idx) and np.any(~np.isfinite(line[finite_idx[0] : finite_idx[-1] + 1])):
                return math.inf
            continue
        finite_idx = np.flatnonzero(np.isfinite(line))
        if len(finite_idx) == 0:
            continue
        if np.any(~np.isfinite(line[finite_idx[0] : finite_idx[-1] + 1])):
            return math.inf
        seg = line[finite_idx[0] : finite_idx[-1] + 1]
        if len(seg) >= 3:
            second = seg[:-2] + seg[2:] - 2.0 * seg[1:-1]
            worst = max(worst, float(np.maximum(-second, 0.0).max()))
    return worst


@dataclass(frozen=True, eq=False)
class ConvexGridFunction:
    """A grid function certified convex at construction.

    Only reachable through certification: __post_init__ measures the worst
    second-difference violation and rejects anything beyond
    CONVEXITY_RTOL * (1 + max |finite value|).
    """

    fn: GridFunction
    max_violation: float = 0.0
    certified: bool = True

    def __post_init__(self):
        violation = convexity_violation(self.fn)
        tol = CONVEXITY_RTOL * _finite_scale(self.fn.values)
        if violation > tol:
            raise NotConvexError(
                f"convexity violation {violation:.3e} exceeds tolerance {tol:.3e}"
            )
        object.__setattr__(self, "max_violation", float(violation))
        object.__setattr__(self, "certified", True)

    @property
    def grid(self) -> Grid:
        return self.fn.grid

    @property
    def values(self) -> np.ndarray:
        return self.fn.values


# ---------------------------------------------------------------------------
# 1D lower hull
# ---------------------------------------------------------------------------

def _pops_strictly_above(ia: int, va: float, ib: int, vb: float, it: int, vt: float) -> bool:
    """True iff (ib, vb) lies strictly above the chord (ia, va)-(it, vt).

    Float fast path with a conservative relative filter; exact rational
    fallback near ties, so collinear points are never popped and contact
    vertices are never lost to rounding.
    """
    t1 = (vb - va) * (it - ia)
    t2 = (vt - va) * (ib - ia)
    diff = t1 - t2
    guard = 1e-12 * (abs(t1) + abs(t2)) + 1e-300
    if diff > guard:
        return True
    if diff < -guard:
        return False
    exact = (Fraction(vb) - Fraction(va)) * (it - ia) - (Fraction(vt) - Fraction(va)) * (ib - ia)
    return exact > 0


def lower_hull_vertices_1d(indices: np.ndarray, values: np.ndarray) -> list[int]:
    """Positions (into `indices`) of the lower-hull vertices, keeping
    collinear points as vertices."""
    stack: list[int] = []
    for t in range(len(indices)):
        while len(stack) >= 2:
            a, b = stack[-2], stack[-1]
            if _pops_strictly_above(
                int(indices[a]), float(values[a]),
                int(indices[b]), float(values[b]),
                int(indices[t]), float(values[t]),
            ):
                stack.pop()
            else:
                break
        stack.append(t)
    return stack


def convex_envelope_1d(f: GridFunction) -> ConvexGridFunction:
    """Greatest convex minorant of the finite samples, evaluated at all nodes.

    Hull vertices keep their sample values exactly; nodes between vertices
    are interpolated in index space (then clamped to <= f at finite nodes);
    nodes outside [first finite, last finite] are +inf.
    """
    if f.grid.dim != 1:
        raise InvalidValueError("convex_envelope_1d requires a 1D grid")
    vals = f.values
    fin = np.flatnonzero(np.isfinite(vals))
    out = np.full(f.grid.size, math.inf)
    verts_pos = lower_hull_vertices_1d(fin, vals[fin])
    verts = fin[verts_pos]
    for a, b in zip(verts[:-1], verts[1:]):
        out[a] = vals[a]
        if b > a + 1:
            t = (np.arange(a + 1, b) - a) / float(b - a)
            out[a + 1 : b] = vals[a] * (1.0 - t) + vals[b] * t
    out[verts[-1]] = vals[verts[-1]]
    np.minimum(out[fin], vals[fin], out=out[fin])
    return ConvexGridFunction(f.with_values(out))


# ---------------------------------------------------------------------------
# 2D lower hull
# ---------------------------------------------------------------------------

def _plane_fit_residual(pts: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, float]:
    A = np.column_stack([pts, np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return coef, float(np.abs(A @ coef - vals).max())


def convex_envelope_2d(f: GridFunction) -> ConvexGridFunction:
    """2D greatest convex minorant via the lower facets of the 3D hull.

    Raises DegenerateHullError when the finite nodes are affinely degenerate
    in the plane (all on one line); callers holding such data should project
    to that line and use the 1D envelope instead.
    """
    if f.grid.dim != 2:
        raise InvalidValueError("convex_envelope_2d requires a 2D grid")
    vals = f.values
    finite = np.isfinite(vals)
    fin_idx = np.flatnonzero(finite)
    pts = f.grid.points
    fp = pts[fin_idx]
    fv = vals[fin_idx]
    scale = _finite_scale(vals)

    centered = fp - fp.mean(axis=0)
    if len(fin_idx) < 3 or np.linalg.matrix_rank(centered, tol=1e-10) < 2:
        raise DegenerateHullError(
            "finite nodes span less than the plane; project to the supporting "
            "line and use the 1D envelope"
        )

    out = np.full(f.grid.size, math.inf)
    if finite.all():
        inside = np.ones(f.grid.size, dtype=bool)
    else:
        proj = ConvexHull(fp)
        eqs = proj.equations  # a x + b y + off <= 0 inside
        margin = pts @ eqs[:, :2].T + eqs[:, 2][None, :]
        inside = (margin <= 1e-12 * (1.0 + np.abs(pts).max())).all(axis=1)

    coef, resid = _plane_fit_residual(fp, fv)
    if resid <= _SNAP_RTOL * scale:
        # affine samples: the envelope is the plane itself
        plane = pts @ coef[:2] + coef[2]
        out[inside] = plane[inside]
        out[fin_idx] = fv
        return ConvexGridFunction(f.with_values(out))

    try:
        hull = ConvexHull(np.column_stack([fp, fv]))
    except QhullError as exc:
        raise DegenerateHullError(f"3D hull construction failed: {exc}") from exc
    eqs = hull.equations
    lower = eqs[:, 2] < -1e-12
    if not lower.any():
        raise DegenerateHullError("no downward-facing hull facets found")
    a, b, c, off = (eqs[lower, k] for k in range(4))

    target = np.flatnonzero(inside)
    block = max(1, _BLOCK_ENTRIES // max(1, len(a)))
    ev = np.empty(len(target))
    for start in range(0, len(target), block):
        sl = target[start : start + block]
        planes = (-(off[None, :] + pts[sl] @ np.column_stack([a, b]).T)) / c[None, :]
        ev[start : start + len(sl)] = planes.max(axis=1)
    out[target] = ev

    # snap plane evaluations onto samples they all but reproduce, then clamp
    snap = np.abs(out[fin_idx] - fv) <= _SNAP_RTOL * scale
    out[fin_idx[snap]] = fv[snap]
    np.minimum(out[fin_idx], fv, out=out[fin_idx])
    return ConvexGridFunction(f.with_values(out))


def convex_envelope(f: GridFunction) -> ConvexGridFunction:
    """Dimension dispatch for the discrete convex envelope."""
    return convex_envelope_1d(f) if f.grid.dim == 1 else convex_envelope_2d(f)


# ---------------------------------------------------------------------------
# Legendre transform oracle
# ---------------------------------------------------------------------------

def _quotient_extremes(f: GridFunction) -> list[tuple[float, float]]:
    """Per-axis extremes of difference quotients between consecutive finite
    nodes along axis lines; these bound every subgradient of the envelope."""
    out = []
    vals = f.values if f.grid.dim == 1 else f.values.reshape(f.grid.nodes)
    for axis in range(f.grid.dim):
        step = f.grid.step[axis]
        if f.grid.dim == 1:
            lines = [vals]
        elif axis == 0:
            lines = [vals[:, j] for j in range(f.grid.nodes[1])]
        else:
            lines = [vals[i, :] for i in range(f.grid.nodes[0])]
        qmin, qmax = math.inf, -math.inf
        for line in lines:
            fin = np.flatnonzero(np.isfinite(line))
            if len(fin) < 2:
                continue
            quot = np.diff(line[fin]) / (np.diff(fin) * step)
            qmin = min(qmin, float(quot.min()))
            qmax = max(qmax, float(quot.max()))
        if not qmin <= qmax:  # no pair of finite nodes anywhere on this axis
            qmin, qmax = -1.0, 1.0
        out.append((qmin, qmax))
    return out


_MAX_SLOPE_POINTS = 50_000_000


def _axis_lines(f: GridFunction, axis: int) -> tuple[float, list[np.ndarray]]:
    """(step, value lines) along the given axis."""
    vals = f.values if f.grid.dim == 1 else f.values.reshape(f.grid.nodes)
    step = f.grid.step[axis]
    if f.grid.dim == 1:
        return step, [vals]
    if axis == 0:
        return step, [vals[:, j] for j in range(f.grid.nodes[1])]
    return step, [vals[i, :] for i in range(f.grid.nodes[0])]


@dataclass(frozen=True, eq=False)
class SlopeGrid:
    """Strictly increasing slope samples per axis for conjugate evaluation.

    `for_function` gives the default uniform construction; `pairwise_for`
    returns the refinement whose biconjugate reproduces hull values at nodes
    (every supporting slope of the discrete hull is a difference quotient of
    samples along axis lines, so including all of them leaves nothing for the
    conjugate pair to miss).
    """

    axes: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise InvalidValueError(f"slope grids support 1 or 2 axes, got {len(self.axes)}")
        arrays = []
        cleaned = []
        for ax in self.axes:
            arr = np.asarray(ax, dtype=np.float64).reshape(-1)
            if len(arr) < 2:
                raise InvalidValueError("each slope axis needs at least two samples")
            if not np.isfinite(arr).all() or not (np.diff(arr) > 0).all():
                raise InvalidValueError("slope samples must be finite and strictly increasing")
            arr.flags.writeable = False
            arrays.append(arr)
            cleaned.append(tuple(float(v) for v in arr))
        object.__setattr__(self, "axes", tuple(cleaned))
        object.__setattr__(self, "_arrays", tuple(arrays))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        out = 1
        for ax in self.axes:
            out *= len(ax)
        return out

    def axis(self, i: int) -> np.ndarray:
        return self._arrays[i]

    def point_chunk(self, start: int, stop: int) -> np.ndarray:
        """Rows [start, stop) of the row-major slope product, shape (k, dim)."""
        idx = np.arange(start, stop)
        if self.dim == 1:
            return self._arrays[0][idx][:, None]
        n1 = len(self._arrays[1])
        return np.column_stack((self._arrays[0][idx // n1], self._arrays[1][idx % n1]))

    @classmethod
    def for_function(cls, f: GridFunction, factor: int = 4, pad: float = 0.1) -> "SlopeGrid":
        """Uniform slopes spanning the consecutive-finite difference quotients
        of f, padded by `pad` of the span, with factor * nodes samples/axis."""
        axes = []
        for axis, (qmin, qmax) in enumerate(_quotient_extremes(f)):
            span = max(qmax - qmin, 1.0)
            lo = qmin - max(pad, 0.01) * span
            hi = qmax + max(pad, 0.01) * span
            count = max(2, factor * f.grid.nodes[axis])
            step = (hi - lo) / (count - 1)
            axes.append(lo + np.arange(count) * step)
        return cls(axes=tuple(tuple(float(v) for v in ax) for ax in axes))

    @classmethod
    def pairwise_for(cls, f: GridFunction, *, lines: tuple[int, ...] | None = None) -> "SlopeGrid":
        """All pairwise difference quotients of finite samples along axis
        lines, deduplicated per axis.

        For 2D inputs `lines` optionally restricts which cross-lines are
        scanned (indices into the other axis; out-of-range indices are
        skipped per axis); by default all are.  The resulting product can be
        large — the conjugate evaluators refuse oversized slope grids, so
        restrict lines when the union explodes.
        """
        axes = []
        for axis in range(f.grid.dim):
            step, value_lines = _axis_lines(f, axis)
            if lines is not None and f.grid.dim == 2:
                value_lines = [value_lines[j] for j in lines if 0 <= j < len(value_lines)]
            quots = []
            for line in value_lines:
                fin = np.flatnonzero(np.isfinite(line))
                if len(fin) < 2:
                    continue
                dv = np.subtract.outer(line[fin], line[fin])
                gaps = np.subtract.outer(fin, fin).astype(np.float64) * step
                upper = np.triu_indices(len(fin), k=1)
                quots.append(dv[upper] / gaps[upper])
            if not quots:
                merged = np.array([-1.0, 1.0])
            else:
                merged = np.unique(np.concatenate(quots))
                if len(merged) == 1:
                    merged = np.array([merged[0] - 1.0, merged[0] + 1.0])
            axes.append(tuple(float(v) for v in merged))
        return cls(axes=tuple(axes))

    def required_for(self, f: GridFunction) -> None:
        """Raise SlopeRangeTooNarrowError if this grid cannot support all
        subgradients of f's envelope."""
        for axis, (qmin, qmax) in enumerate(_quotient_extremes(f)):
            lo, hi = self.axes[axis][0], self.axes[axis][-1]
            slack = 1e-12 * (1.0 + max(abs(qmin), abs(qmax)))
            if lo > qmin + slack or hi < qmax - slack:
                raise SlopeRangeTooNarrowError(
                    f"slope axis {axis} covers [{lo}, {hi}] "
                    f"but difference quotients reach [{qmin}, {qmax}]"
                )


@dataclass(frozen=True, eq=False)
class SlopeFunction:
    """Conjugate values over the slope product (row-major)."""

    slopes: SlopeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(vals) != self.slopes.size:
            raise InvalidValueError(
                f"conjugate has {len(vals)} values for {self.slopes.size} slope points"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def _certify_slope_convexity(fstar: SlopeFunction, rtol: float = 1e-9) -> None:
    """Each interior conjugate value must sit on or below the chord of its
    neighbours along every slope axis (convexity on nonuniform samples)."""
    slopes = fstar.slopes
    scale = 1.0 + float(np.abs(fstar.values).max())
    shaped = fstar.values.reshape([len(ax) for ax in slopes.axes])
    for axis in range(slopes.dim):
        s = slopes.axis(axis)
        if len(s) < 3:
            continue
        v = shaped[:, None] if slopes.dim == 1 else np.moveaxis(shaped, axis, 0)
        span = s[2:] - s[:-2]
        w_left = ((s[2:] - s[1:-1]) / span)[:, None]
        w_right = ((s[1:-1] - s[:-2]) / span)[:, None]
        viol = v[1:-1] - (w_left * v[:-2] + w_right * v[2:])
        worst = float(viol.max(initial=0.0))
        if worst > rtol * scale:
            raise NotConvexError(
                f"conjugate is not convex along slope axis {axis} (violation {worst:.3e})"
            )


def _check_slope_budget(slopes: SlopeGrid) -> None:
    if slopes.size > _MAX_SLOPE_POINTS:
        raise InvalidValueError(
            f"slope grid has {slopes.size} points, above the {_MAX_SLOPE_POINTS} limit"
        )


def legendre_transform(f: GridFunction, slopes: SlopeGrid | None = None) -> SlopeFunction:
    """Conjugate f*(s) = max over finite nodes x of <s, x> - f(x), sampled on
    the slope grid (auto-built from f when not given) and certified convex."""
    if slopes is None:
        slopes = SlopeGrid.for_function(f)
    _check_slope_budget(slopes)
    fin = f.finite_mask
    X = f.grid.points[fin]
    fv = f.values[fin]
    out = np.empty(slopes.size)
    block = max(1, _BLOCK_ENTRIES // max(1, len(X)))
    for start in range(0, slopes.size, block):
        stop = min(start + block, slopes.size)
        chunk = slopes.point_chunk(start, stop)
        out[start:stop] = (chunk @ X.T - fv[None, :]).max(axis=1)
    fstar = SlopeFunction(slopes=slopes, values=out)
    _certify_slope_convexity(fstar)
    return fstar


def legendre_biconjugate(f: GridFunction, slopes: SlopeGrid | None = None) -> ConvexGridFunction:
    """Second conjugate evaluated back on f's grid: the envelope oracle.

    With a custom slope grid, raises SlopeRangeTooNarrowError when the range
    cannot support all of f's subgradients (symptom: the biconjugate dips
    below the hull at boundary-supported nodes).
    """
    if slopes is None:
        slopes = SlopeGrid.for_function(f)
    else:
        slopes.required_for(f)
    fstar = legendre_transform(f, slopes)
    X = f.grid.points
    out = np.full(f.grid.size, -np.inf)
    sblock = max(1, _BLOCK_ENTRIES // max(1, min(f.grid.size, 4096)))
    xblock = 4096
    for s_start in range(0, slopes.size, sblock):
        s_stop = min(s_start + sblock, slopes.size)
        S = slopes.point_chunk(s_start, s_stop)
        sv = fstar.values[s_start:s_stop]
        for x_start in range(0, f.grid.size, xblock):
            chunk = X[x_start : x_start + xblock]
            cand = (chunk @ S.T - sv[None, :]).max(axis=1)
            np.maximum(out[x_start : x_start + len(chunk)], cand, out=out[x_start : x_start + len(chunk)])
    return ConvexGridFunction(GridFunction(f.grid, out))


# ---------------------------------------------------------------------------
# Second-difference Hölder probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderEstimate:
    """max of [v(x+y) + v(x-y) - 2 v(x)]+ / ||y||^(1+alpha) over probes.

    per_radius maps the probe radius (in node counts) to its own constant;
    probe_ratio is max/min across radii — near 1 for genuinely C^{1,alpha}
    data, large when the estimate is probe-scale dependent.
    negative_extreme is the same quotient for the clamped negative part
    (informative for non-convex inputs; 0 for convex ones).
    """

    alpha: float
    constant: float
    per_radius: tuple[tuple[int, float], ...]
    probe_ratio: float
    negative_extreme: float


def second_difference_holder(
    f: GridFunction,
    alpha: float,
    probe_radii: tuple[int, ...] = (1, 2, 4, 8),
    norm: NormSpec | None = None,
) -> HolderEstimate:
    if not 0.0 < alpha <= 1.0:
        raise InvalidValueError(f"alpha must be in (0, 1], got {alpha}")
    if norm is None:
        norm = NormSpec(dim=f.grid.dim, p_norm=2.0)
    grid = f.grid
    v = f.values if grid.dim == 1 else f.values.reshape(grid.nodes)
    power = 1.0 + alpha

    def _contrib(plus: np.ndarray, minus: np.ndarray, center: np.ndarray, offset) -> tuple[float, float]:
        with np.errstate(invalid="ignore"):
            num = plus + minus - 2.0 * center
        ok = np.isfinite(num)
        if not ok.any():
            return 0.0, 0.0
        ynorm = float(_norms(norm, np.atleast_1d(np.asarray(offset, dtype=np.float64))))
        denom = ynorm**power
        pos = float(np.maximum(num[ok], 0.0).max()) / denom
        neg = float(np.maximum(-num[ok], 0.0).max()) / denom
        return pos, neg

    per_radius: list[tuple[int, float]] = []
    neg_extreme = 0.0
    for r in probe_radii:
        r = int(r)
        if r < 1:
            raise InvalidValueError("probe radii must be positive node counts")
        best_pos = 0.0
        if grid.dim == 1:
            if 2 * r < grid.nodes[0]:
                p, ng = _contrib(v[2 * r :], v[: -2 * r], v[r:-r], grid.step[0] * r)
                best_pos, neg_extreme = max(best_pos, p), max(neg_extreme, ng)
        else:
            hx, hy = grid.step
            nx, ny = grid.nodes
            if 2 * r < nx:
                p, ng = _contrib(v[2 * r :, :], v[: -2 * r, :], v[r:-r, :], (hx * r, 0.0))
                best_pos, neg_extreme = max(best_pos, p), max(neg_extreme, ng)
            if 2 * r < ny:
                p, ng = _contrib(v[:, 2 * r :], v[:, : -2 * r], v[:, r:-r], (0.0, hy * r))
                best_pos, neg_extreme = max(best_pos, p), max(neg_extreme, ng)
            if 2 * r < nx and 2 * r < ny:
                p, ng = _contrib(
                    v[2 * r :, 2 * r :], v[: -2 * r, : -2 * r], v[r:-r, r:-r], (hx * r, hy * r)
                )
                best_pos, neg_extreme = max(best_pos, p), max(neg_extreme, ng)
                p, ng = _contrib(
                    v[2 * r :, : -2 * r], v[: -2 * r, 2 * r :], v[r:-r, r:-r], (hx * r, -hy * r)
                )
                best_pos, neg_extreme = max(best_pos, p), max(neg_extreme, ng)
        per_radius.append((r, best_pos))

    constants = [c for _, c in per_radius]
    top = max(constants) if constants else 0.0
    bottom = min(constants) if constants else 0.0
    if top == 0.0:
        ratio = 1.0
    elif bottom == 0.0:
        ratio = math.inf
    else:
        ratio = top / bottom
    return HolderEstimate(
        alpha=float(alpha),
        constant=top,
        per_radius=tuple(per_radius),
        probe_ratio=ratio,
        negative_extreme=neg_extreme,
    )
