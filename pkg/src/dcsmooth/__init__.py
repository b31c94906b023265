"""Difference-of-convex smoothing of grid functions.

Smooth a (possibly +inf-extended) function sampled on a uniform grid by
inf-convolution against a coercive kernel, then split the result into a
difference of two certified convex parts whose gap to the original shrinks
as the scale grows — while the minimum value and the minimizing nodes are
preserved exactly.
"""

from .config import CheckSettings, RunConfig, load as load_config, parse_domain
from .diagnostics import (
    CheckResult,
    DiagnosticsReport,
    StageView,
    build_report,
    stage_views,
)
from .envelope import (
    ConvexGridFunction,
    HolderEstimate,
    SlopeFunction,
    SlopeGrid,
    convex_envelope,
    convexity_violation,
    legendre_biconjugate,
    legendre_transform,
    second_difference_holder,
)
from .errors import (
    ConfigError,
    DcsmoothError,
    DegenerateHullError,
    EmptySetError,
    ExpressionError,
    GridMismatchError,
    ImproperFunctionError,
    InfiniteValueInSupError,
    InvalidValueError,
    NotConvexError,
    PreconditionViolatedError,
    ScaleOrderError,
    SlopeRangeTooNarrowError,
    UnsupportedKernelError,
    VerificationFailureError,
)
from .expr import compile_expression, evaluate, parse, pretty
from .grid import (
    Grid,
    GridFunction,
    argmin_set,
    infimum,
    make_grid_function,
    read_csv,
    write_csv,
)
from .infconv import (
    OmegaSet,
    fast_quadratic_inf_convolve,
    inf_convolve,
    iterated_smooth,
    lasry_lions,
    omega_set,
    sup_convolve,
)
from .norms import (
    GrowthEstimate,
    Kernel,
    NormSpec,
    SeparationEstimate,
    estimate_growth_constants,
    estimate_separation_constant,
    kernel_decompose,
    kernel_eval,
    kernel_matrix,
)
from .regularize import (
    DeltaConvexFunction,
    RegularizationRun,
    ScaleStage,
    SqueezeReport,
    default_schedule,
    delta_regularize,
    distance_regularize,
    distance_to_set,
    dual_part,
    extend_regularize,
    on_set_gap,
    run_regularization,
    smooth_plus_weight,
    squeeze_check,
)
from .runner import diagnose, run

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "CheckSettings",
    "ConfigError",
    "ConvexGridFunction",
    "DcsmoothError",
    "DegenerateHullError",
    "DeltaConvexFunction",
    "DiagnosticsReport",
    "EmptySetError",
    "ExpressionError",
    "Grid",
    "GridFunction",
    "GridMismatchError",
    "GrowthEstimate",
    "HolderEstimate",
    "ImproperFunctionError",
    "InfiniteValueInSupError",
    "InvalidValueError",
    "Kernel",
    "NormSpec",
    "NotConvexError",
    "OmegaSet",
    "PreconditionViolatedError",
    "RegularizationRun",
    "RunConfig",
    "ScaleOrderError",
    "ScaleStage",
    "SeparationEstimate",
    "SlopeFunction",
    "SlopeGrid",
    "SlopeRangeTooNarrowError",
    "SqueezeReport",
    "StageView",
    "UnsupportedKernelError",
    "VerificationFailureError",
    "argmin_set",
    "build_report",
    "compile_expression",
    "convex_envelope",
    "convexity_violation",
    "default_schedule",
    "delta_regularize",
    "diagnose",
    "distance_regularize",
    "distance_to_set",
    "dual_part",
    "estimate_growth_constants",
    "estimate_separation_constant",
    "evaluate",
    "extend_regularize",
    "fast_quadratic_inf_convolve",
    "inf_convolve",
    "infimum",
    "iterated_smooth",
    "kernel_decompose",
    "kernel_eval",
    "kernel_matrix",
    "lasry_lions",
    "legendre_biconjugate",
    "legendre_transform",
    "load_config",
    "make_grid_function",
    "omega_set",
    "on_set_gap",
    "parse",
    "parse_domain",
    "pretty",
    "read_csv",
    "run",
    "run_regularization",
    "second_difference_holder",
    "smooth_plus_weight",
    "squeeze_check",
    "stage_views",
    "sup_convolve",
    "write_csv",
]
