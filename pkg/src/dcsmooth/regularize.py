"""The smoothing pipeline: inf-convolve, shift by the kernel weight, take the
convex envelope, subtract the weight back.

For a kernel K(x, y) = c(x) - d(x, y) and scale n, the pipeline output is

    value = co(inf_convolve(f) + n c) - n c,

represented explicitly as a difference of two certified convex parts (`plus`
minus `minus`).  The output is squeezed between the twice-smoothed function
and the once-smoothed one,

    iterated_smooth(f) <= value <= inf_convolve(f) <= f,

and both bounds are computed exactly node-wise, so the hull output is clamped
into them: that projection removes ~1e-15 hull noise and makes infimum and
argmin preservation exact identities rather than approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .envelope import ConvexGridFunction, convex_envelope
from .errors import (
    EmptySetError,
    InfiniteValueInSupError,
    InvalidValueError,
    PreconditionViolatedError,
)
from .grid import Grid, GridFunction, check_same_grid
from .infconv import _check_scale, inf_convolve
from .norms import Kernel, _norms, kernel_c, kernel_d

_BLOCK_ENTRIES = 4_000_000


@dataclass(frozen=True, eq=False)
class DeltaConvexFunction:
    """A difference of certified convex grid functions produced by the
    pipeline; value = plus - minus, with minus = scale * c(kernel)."""

    plus: ConvexGridFunction
    minus: ConvexGridFunction
    kernel: Kernel
    scale: float

    def __post_init__(self):
        check_same_grid(self.plus.fn, self.minus.fn)
        if not self.minus.fn.finite_mask.all():
            raise InvalidValueError("the subtracted convex part must be finite everywhere")
        if not self.plus.fn.finite_mask.all():
            raise InvalidValueError("the leading convex part must be finite everywhere")

    @property
    def grid(self) -> Grid:
        return self.plus.grid

    @cached_property
    def value(self) -> GridFunction:
        return GridFunction(self.grid, self.plus.values - self.minus.values)


def weight_values(kernel: Kernel, grid: Grid, n: float) -> np.ndarray:
    """n * c(kernel) sampled at the nodes."""
    return n * kernel_c(kernel, grid.points)


def smooth_plus_weight(f: GridFunction, kernel: Kernel, n: float) -> GridFunction:
    """inf_convolve(f) + n c, the function whose envelope drives the pipeline."""
    n = _check_scale(n)
    If = inf_convolve(f, kernel, n)
    return f.with_values(If.values + weight_values(kernel, f.grid, n))


def _delta_from_parts(
    f: GridFunction,
    inf_smooth: GridFunction,
    iterated: GridFunction,
    kernel: Kernel,
    n: float,
) -> DeltaConvexFunction:
    minus_vals = weight_values(kernel, f.grid, n)
    g_vals = inf_smooth.values + minus_vals
    env = convex_envelope(GridFunction(f.grid, g_vals))
    lower = iterated.values + minus_vals
    plus_vals = np.clip(env.values, lower, g_vals)
    plus = ConvexGridFunction(GridFunction(f.grid, plus_vals))
    minus = ConvexGridFunction(GridFunction(f.grid, minus_vals))
    return DeltaConvexFunction(plus=plus, minus=minus, kernel=kernel, scale=n)


def delta_regularize(f: GridFunction, kernel: Kernel, n: float) -> DeltaConvexFunction:
    """Difference-of-convex smoothing of f at scale n.

    The value function lies in [iterated_smooth(f), inf_convolve(f)] node-wise
    and shares f's infimum and argmin nodes exactly.
    """
    n = _check_scale(n)
    If = inf_convolve(f, kernel, n)
    IIf = inf_convolve(If, kernel, n)
    return _delta_from_parts(f, If, IIf, kernel, n)


def dual_part(g: GridFunction, kernel: Kernel, n: float) -> ConvexGridFunction:
    """The convex function D(x) = max over nodes y of g(y) + n d(x, y).

    sup_convolve(g) equals D - n c up to fp rearrangement of the kernel
    decomposition.  Rejects +inf inputs like any sup-type reduction.
    """
    n = _check_scale(n)
    if not g.finite_mask.all():
        bad = int(np.flatnonzero(~g.finite_mask)[0])
        raise InfiniteValueInSupError(f"dual_part input is +inf at node {bad}")
    pts = g.grid.points
    N = len(pts)
    out = np.empty(N)
    block = max(1, _BLOCK_ENTRIES // N)
    for start in range(0, N, block):
        stop = min(start + block, N)
        D = kernel_d(kernel, pts[start:stop], pts)
        out[start:stop] = (g.values[None, :] + n * D).max(axis=1)
    return ConvexGridFunction(GridFunction(g.grid, out))


@dataclass(frozen=True)
class SqueezeReport:
    """Verification that d - c <= co(e + c) - c <= e for convex d."""

    lower_violation: float
    upper_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.lower_violation, self.upper_violation) <= self.tolerance


def squeeze_check(
    c: GridFunction, d: GridFunction, e: GridFunction, rtol: float = 1e-9
) -> SqueezeReport:
    """Check the envelope squeeze d - c <= co(e + c) - c <= e node-wise.

    Preconditions (d convex as samples; d - c <= e) are verified first and
    raise PreconditionViolatedError when broken beyond tolerance.
    """
    grid = check_same_grid(c, d, e)
    if not (c.finite_mask.all() and d.finite_mask.all()):
        raise PreconditionViolatedError("c and d must be finite everywhere")
    scale = 1.0 + max(abs(float(x)) for x in (c.sample_max_abs(), d.sample_max_abs(), e.sample_max_abs()))
    tol = rtol * scale
    try:
        ConvexGridFunction(d)
    except Exception as exc:
        raise PreconditionViolatedError(f"d is not convex on the grid: {exc}") from exc
    fin = e.finite_mask
    pre = float((d.values - c.values - e.values)[fin].max(initial=-math.inf))
    if pre > tol:
        raise PreconditionViolatedError(f"d - c <= e fails by {pre:.3e}")

    shifted = GridFunction(grid, np.where(fin, e.values + c.values, math.inf))
    env = convex_envelope(shifted)
    mid = env.values - c.values
    lower_violation = float((d.values - c.values - mid).max(initial=0.0))
    upper_violation = float((mid - e.values)[fin].max(initial=0.0))
    return SqueezeReport(
        lower_violation=max(lower_violation, 0.0),
        upper_violation=max(upper_violation, 0.0),
        tolerance=tol,
    )


def distance_to_set(grid: Grid, mask: np.ndarray, kernel: Kernel) -> GridFunction:
    """Distance (in the kernel's norm) from each node to the masked node set."""
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != grid.size:
        raise InvalidValueError(f"mask has {mask.size} entries for a {grid.size}-node grid")
    if not mask.any():
        raise EmptySetError("distance target set is empty")
    pts = grid.points
    targets = pts[mask]
    out = np.empty(grid.size)
    block = max(1, _BLOCK_ENTRIES // max(1, len(targets)))
    for start in range(0, grid.size, block):
        chunk = pts[start : start + block]
        diffs = chunk[:, None, :] - targets[None, :, :]
        out[start : start + len(chunk)] = _norms(kernel.norm, diffs).min(axis=1)
    return GridFunction(grid, out)


def distance_regularize(
    grid: Grid, mask: np.ndarray, kernel: Kernel, n: float
) -> tuple[DeltaConvexFunction, GridFunction]:
    """Smooth the distance function of a node set; its zero set is the set.

    Returns (pipeline output, distance function).
    """
    dist = distance_to_set(grid, mask, kernel)
    return delta_regularize(dist, kernel, n), dist


def extend_regularize(f: GridFunction, kernel: Kernel, n: float) -> DeltaConvexFunction:
    """Smooth a function given only on part of the grid (+inf elsewhere) into
    a finite-everywhere difference of convex parts."""
    return delta_regularize(f, kernel, n)


def on_set_gap(f: GridFunction, delta: DeltaConvexFunction) -> float:
    """max over finite nodes of f - value: how far the smoothing sits below
    the data on its own domain."""
    fin = f.finite_mask
    return float((f.values - delta.value.values)[fin].max())


@dataclass(frozen=True, eq=False)
class ScaleStage:
    """Everything the pipeline produced at one scale."""

    scale: float
    inf_smooth: GridFunction
    iterated: GridFunction
    shifted: GridFunction
    delta: DeltaConvexFunction


@dataclass(frozen=True, eq=False)
class RegularizationRun:
    """A schedule of pipeline outputs for one source function and kernel."""

    source: GridFunction
    kernel: Kernel
    schedule: tuple[float, ...]
    stages: tuple[ScaleStage, ...]


def default_schedule(max_power: int = 6) -> tuple[float, ...]:
    return tuple(float(2**k) for k in range(max_power + 1))


def run_regularization(
    f: GridFunction, kernel: Kernel, schedule: tuple[float, ...] | None = None
) -> RegularizationRun:
    """Run the pipeline over a strictly increasing schedule of scales."""
    if schedule is None:
        schedule = default_schedule()
    schedule = tuple(float(n) for n in schedule)
    if not schedule:
        raise InvalidValueError("schedule must be nonempty")
    for n in schedule:
        _check_scale(n)
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidValueError(f"schedule must be strictly increasing, got {schedule}")
    stages = []
    for n in schedule:
        If = inf_convolve(f, kernel, n)
        IIf = inf_convolve(If, kernel, n)
        delta = _delta_from_parts(f, If, IIf, kernel, n)
        shifted = GridFunction(f.grid, If.values + delta.minus.values)
        stages.append(
            ScaleStage(scale=n, inf_smooth=If, iterated=IIf, shifted=shifted, delta=delta)
        )
    return RegularizationRun(source=f, kernel=kernel, schedule=schedule, stages=tuple(stages))
