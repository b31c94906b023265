"""l_p norms and the power-type smoothing kernels built from them.

Two kernel families are provided.  The general family with exponent p > 1 is

    K(x, y) = 2^(p-1) ||x||^p + 2^(p-1) ||y||^p - ||x + y||^p,

which is nonnegative, symmetric, vanishes on the diagonal, and splits as
K(x, y) = c(x) - d(x, y) with c(x) = 2^(p-1) ||x||^p and
d(x, y) = ||x + y||^p - 2^(p-1) ||y||^p, where d(., y) is convex for every y.
The quadratic Euclidean member (p = 2, l_2) collapses to ||x - y||^2 by the
parallelogram law; the "hilbert" kind evaluates that squared distance
directly and decomposes as c(x) = ||x||^2, d(x, y) = 2<x, y> - ||y||^2.

Growth and separation constants are estimated by sampling, with every claimed
bound re-verified on the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValueError, VerificationFailureError

#: ladder of candidate eta values for the growth-constant search
ETA_LADDER = (2.0, 3.0, 4.0, 8.0, 16.0, 32.0)

#: relative tolerance for clamping tiny negative kernel values to zero
KERNEL_CLAMP_RTOL = 1e-12


@dataclass(frozen=True)
class NormSpec:
    """An l_p norm on R^dim.  p_norm may be math.inf (max norm)."""

    dim: int
    p_norm: float = 2.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidValueError(f"norm dimension must be 1 or 2, got {self.dim}")
        p = float(self.p_norm)
        if math.isnan(p) or p < 1.0:
            raise InvalidValueError(f"p_norm must be in [1, inf], got {p}")
        object.__setattr__(self, "p_norm", p)

    @property
    def smoothness_power(self) -> float | None:
        """Declared modulus-of-smoothness power min(p, 2); None outside (1, inf)."""
        if 1.0 < self.p_norm < math.inf:
            return min(self.p_norm, 2.0)
        return None

    @property
    def convexity_power(self) -> float | None:
        """Declared modulus-of-convexity power max(p, 2); None for the max norm."""
        if self.p_norm < math.inf:
            return max(self.p_norm, 2.0)
        return None


def norm_eval(spec: NormSpec, x) -> float:
    """Norm of a single point (scalar or length-dim sequence)."""
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.shape != (spec.dim,):
        raise InvalidValueError(f"point has shape {v.shape}, expected ({spec.dim},)")
    return float(_norms(spec, v.reshape(1, -1))[0])


def _norms(spec: NormSpec, pts: np.ndarray) -> np.ndarray:
    """Vectorized norms of an (..., dim) coordinate array."""
    a = np.abs(pts)
    p = spec.p_norm
    if p == math.inf:
        return a.max(axis=-1)
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=-1))
    return (a**p).sum(axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class Kernel:
    """A smoothing kernel over a normed space.

    kind "kp" is the general power family with the given exponent; kind
    "hilbert" is the squared Euclidean distance and requires an l_2 norm and
    exponent 2.
    """

    norm: NormSpec
    exponent: float = 2.0
    kind: str = "kp"

    def __post_init__(self):
        p = float(self.exponent)
        if math.isnan(p) or not p > 1.0 or p == math.inf:
            raise InvalidValueError(f"kernel exponent must be in (1, inf), got {p}")
        object.__setattr__(self, "exponent", p)
        if self.kind not in ("kp", "hilbert"):
            raise InvalidValueError(f"kernel kind must be 'kp' or 'hilbert', got {self.kind!r}")
        if self.kind == "hilbert" and (self.norm.p_norm != 2.0 or p != 2.0):
            raise InvalidValueError("hilbert kernel requires an l_2 norm and exponent 2")

    @property
    def dim(self) -> int:
        return self.norm.dim

    def is_quadratic_euclidean(self) -> bool:
        """True when the kernel equals squared Euclidean distance (up to fp)."""
        return self.exponent == 2.0 and self.norm.p_norm == 2.0


def _as_points(kernel: Kernel, x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim <= 1:
        v = np.atleast_1d(v).reshape(1, -1)
    if v.shape[-1] != kernel.dim:
        raise InvalidValueError(f"points have shape {v.shape}, expected (*, {kernel.dim})")
    return v


def kernel_c(kernel: Kernel, x) -> np.ndarray:
    """Weight part c(x); convex, vanishes at 0.  Accepts (m, dim) arrays."""
    pts = _as_points(kernel, x)
    n = _norms(kernel.norm, pts)
    if kernel.kind == "hilbert":
        return n * n
    p = kernel.exponent
    return 2.0 ** (p - 1.0) * n**p


def kernel_d(kernel: Kernel, x, y) -> np.ndarray:
    """Pairwise d part, shape (len x, len y); d(., y) is convex for each y."""
    P, Q = _as_points(kernel, x), _as_points(kernel, y)
    if kernel.kind == "hilbert":
        return 2.0 * (P @ Q.T) - (Q * Q).sum(axis=1)[None, :]
    p = kernel.exponent
    s = _norms(kernel.norm, P[:, None, :] + Q[None, :, :])
    return s**p - (2.0 ** (p - 1.0)) * _norms(kernel.norm, Q)[None, :] ** p


def kernel_matrix(kernel: Kernel, x, y) -> np.ndarray:
    """Pairwise kernel values K(x_i, y_j), shape (len x, len y).

    Values are clamped to 0 where fp cancellation makes them barely negative;
    a negative value beyond the clamp tolerance raises, since the kernel is
    nonnegative by construction.  Bitwise-equal point pairs are forced to
    exactly 0 so that node-wise dominance of inf-convolutions is exact.
    """
    P, Q = _as_points(kernel, x), _as_points(kernel, y)
    if kernel.kind == "hilbert":
        diff = P[:, None, :] - Q[None, :, :]
        return (diff * diff).sum(axis=-1)
    p = kernel.exponent
    np_p = _norms(kernel.norm, P) ** p
    nq_p = _norms(kernel.norm, Q) ** p
    w = 2.0 ** (p - 1.0)
    K = w * np_p[:, None] + w * nq_p[None, :] - _norms(kernel.norm, P[:, None, :] + Q[None, :, :]) ** p
    floor = -KERNEL_CLAMP_RTOL * (1.0 + np_p[:, None] + nq_p[None, :])
    if (K < floor).any():
        i, j = np.unravel_index(int((K - floor).argmin()), K.shape)
        raise VerificationFailureError(
            f"kernel value {K[i, j]} at pair ({P[i]}, {Q[j]}) is negative beyond tolerance"
        )
    np.maximum(K, 0.0, out=K)
    equal = np.ones(K.shape, dtype=bool)
    for d in range(kernel.dim):
        equal &= P[:, None, d] == Q[None, :, d]
    K[equal] = 0.0
    return K


def kernel_eval(kernel: Kernel, x, y) -> float:
    """K(x, y) for single points; exactly 0.0 when x == y bitwise."""
    return float(kernel_matrix(kernel, _as_points(kernel, x), _as_points(kernel, y))[0, 0])


def kernel_decompose(kernel: Kernel, x, y) -> tuple[float, float]:
    """(c(x), d(x, y)) for single points; c(x) - d(x, y) equals K(x, y) up to fp."""
    return (
        float(kernel_c(kernel, x)[0]),
        float(kernel_d(kernel, _as_points(kernel, x), _as_points(kernel, y))[0, 0]),
    )


@dataclass(frozen=True)
class GrowthEstimate:
    """Result of the far-field growth search: K(x, y) >= gamma ||y||^p whenever
    ||y|| >= eta ||x||, verified on `samples` random pairs."""

    gamma: float
    eta: float
    worst_margin: float
    samples: int


def estimate_growth_constants(
    kernel: Kernel, *, samples: int = 2000, radius: float = 1.0, seed: int = 0
) -> GrowthEstimate:
    """Pick the first ladder eta with gamma = 2^(p-1) - (1 + 1/eta)^p > 0 and
    verify the growth bound on sampled admissible pairs.

    Raises VerificationFailureError if no ladder entry works for this exponent
    or if a sampled pair violates the bound beyond 1e-9 relative.
    """
    p = kernel.exponent
    gamma = eta = None
    for candidate in ETA_LADDER:
        g = 2.0 ** (p - 1.0) - (1.0 + 1.0 / candidate) ** p
        if g > 0.0:
            gamma, eta = g, candidate
            break
    if gamma is None:
        raise VerificationFailureError(
            f"no ladder eta in {ETA_LADDER} gives a positive growth constant for exponent {p}"
        )

    rng = np.random.default_rng(seed)
    d = kernel.dim
    xs = rng.uniform(-radius, radius, size=(samples, d))
    dirs = rng.normal(size=(samples, d))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    # stretch each y to ||y|| >= eta ||x|| in the kernel's norm
    nx = _norms(kernel.norm, xs)
    ys = dirs * (eta * np.maximum(nx, 1e-6) * (1.0 + rng.uniform(0.0, 3.0, size=samples)))[:, None]
    ny = _norms(kernel.norm, ys)
    keep = ny >= np.maximum(eta * np.maximum(nx, 1e-6), 1e-12)
    xs, ys, ny = xs[keep], ys[keep], ny[keep]

    vals = _pair_kernel(kernel, xs, ys)
    bound = gamma * ny**p
    margin = vals - bound
    tol = 1e-9 * (1.0 + np.abs(bound))
    worst = float(margin.min()) if len(margin) else 0.0
    if (margin < -tol).any():
        k = int(margin.argmin())
        raise VerificationFailureError(
            f"growth bound violated at x={xs[k]}, y={ys[k]}: K={vals[k]} < gamma*||y||^p={bound[k]}"
        )
    return GrowthEstimate(gamma=float(gamma), eta=float(eta), worst_margin=worst, samples=int(len(xs)))


def _pair_kernel(kernel: Kernel, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """K(P_i, Q_i) elementwise for aligned point arrays."""
    if kernel.kind == "hilbert":
        diff = P - Q
        return (diff * diff).sum(axis=-1)
    p = kernel.exponent
    w = 2.0 ** (p - 1.0)
    vals = (
        w * _norms(kernel.norm, P) ** p
        + w * _norms(kernel.norm, Q) ** p
        - _norms(kernel.norm, P + Q) ** p
    )
    return np.maximum(vals, 0.0)


@dataclass(frozen=True)
class SeparationEstimate:
    """Sampled lower envelope of K(x, y) / ||x - y||^p over admissible pairs.

    This is an empirical estimate (deterministic stencil plus seeded random
    pairs), not a proven tight constant.
    """

    constant: float
    samples: int
    radius: float
    min_distance: float


def estimate_separation_constant(
    kernel: Kernel,
    *,
    radius: float = 1.0,
    min_distance: float = 1e-3,
    samples: int = 4000,
    seed: int = 0,
) -> SeparationEstimate:
    """min over sampled pairs with ||x|| <= radius, ||x - y|| >= min_distance
    of K(x, y) / ||x - y||^p.

    The stencil includes axis-aligned pairs such as (t e_i, t e_j), which hit
    the flat faces of polyhedral norms (for the l_1 norm in 2D the ratio is
    exactly 0 there).
    """
    if not (radius > 0 and min_distance > 0):
        raise InvalidValueError("radius and min_distance must be positive")
    d = kernel.dim
    pairs_x: list[np.ndarray] = []
    pairs_y: list[np.ndarray] = []

    # deterministic stencil: axis pairs at several magnitudes
    ts = [min_distance / 2.0, min_distance, 2.0 * min_distance, radius / 2.0, radius]
    axes = np.eye(d)
    for t in ts:
        for i in range(d):
            for j in range(d):
                for sx in (1.0, -1.0):
                    for sy in (1.0, -1.0):
                        pairs_x.append(sx * t * axes[i])
                        pairs_y.append(sy * t * axes[j])
    rng = np.random.default_rng(seed)
    rx = rng.uniform(-radius, radius, size=(samples, d))
    offs = rng.normal(size=(samples, d))
    offs /= np.maximum(np.linalg.norm(offs, axis=1, keepdims=True), 1e-300)
    rr = min_distance + rng.exponential(scale=radius, size=samples)
    ry = rx + offs * rr[:, None]

    X = np.concatenate([np.asarray(pairs_x).reshape(-1, d), rx], axis=0)
    Y = np.concatenate([np.asarray(pairs_y).reshape(-1, d), ry], axis=0)
    nx = _norms(kernel.norm, X)
    dist = _norms(kernel.norm, X - Y)
    keep = (nx <= radius) & (dist >= min_distance)
    X, Y, dist = X[keep], Y[keep], dist[keep]
    if len(X) == 0:
        raise VerificationFailureError("no admissible pairs sampled for the separation constant")
    ratios = _pair_kernel(kernel, X, Y) / dist**kernel.exponent
    return SeparationEstimate(
        constant=float(ratios.min()),
        samples=int(len(X)),
        radius=float(radius),
        min_distance=float(min_distance),
    )
