"""Run configuration: a TOML file (or equivalent dict) describing the source
function, grid, kernel, scale schedule and check thresholds."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .grid import Grid

_REQUIRED = object()


def parse_domain(text: str) -> Grid:
    """Parse "lo:hi:nodes" (1D) or "lo:hi:nodes,lo:hi:nodes" (2D)."""
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(f"domain must be a nonempty string, got {text!r}")
    axes = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 3:
            raise ConfigError(f"domain axis {part!r} is not of the form lo:hi:nodes")
        try:
            lo, hi = float(pieces[0]), float(pieces[1])
            nodes = int(pieces[2])
        except ValueError as exc:
            raise ConfigError(f"domain axis {part!r}: {exc}") from exc
        axes.append((lo, hi, nodes))
    if len(axes) == 1:
        (lo, hi, nodes), = axes
        return Grid.line(lo, hi, nodes)
    if len(axes) == 2:
        return Grid.box(
            (axes[0][0], axes[1][0]),
            (axes[0][1], axes[1][1]),
            (axes[0][2], axes[1][2]),
        )
    raise ConfigError(f"domain {text!r} has {len(axes)} axes; only 1 or 2 are supported")


@dataclass(frozen=True)
class CheckSettings:
    sandwich_rtol: float = 1e-9
    inf_gap_tol: float = 1e-9
    argmin_tol: float = 0.0
    final_gap_target: float | None = None
    boundary_mask_width: int = 1
    holder_alpha: float | None = None
    curvature_headroom: float = 1.05
    include_omega: bool = True
    include_growth: bool = False
    separation_floor: float | None = None

    def to_dict(self) -> dict:
        return {
            "sandwich_rtol": self.sandwich_rtol,
            "inf_gap_tol": self.inf_gap_tol,
            "argmin_tol": self.argmin_tol,
            "final_gap_target": self.final_gap_target,
            "boundary_mask_width": self.boundary_mask_width,
            "holder_alpha": self.holder_alpha,
            "curvature_headroom": self.curvature_headroom,
            "include_omega": self.include_omega,
            "include_growth": self.include_growth,
            "separation_floor": self.separation_floor,
        }


@dataclass(frozen=True)
class RunConfig:
    domain: str
    expression: str | None = None
    csv: str | None = None
    norm_p: float = 2.0
    exponent_p: float = 2.0
    kind: str = "kp"
    scales: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    seed: int = 0
    output_dir: str = "out"
    checks: CheckSettings = field(default_factory=CheckSettings)

    def __post_init__(self):
        if (self.expression is None) == (self.csv is None):
            raise ConfigError("exactly one of function.expression and function.csv is required")
        parse_domain(self.domain)
        if self.kind not in ("kp", "hilbert"):
            raise ConfigError(f"kernel.kind must be 'kp' or 'hilbert', got {self.kind!r}")
        if not self.exponent_p > 1.0:
            raise ConfigError(f"kernel.exponent_p must be > 1, got {self.exponent_p!r}")
        if not self.norm_p >= 1.0:
            raise ConfigError(f"kernel.norm_p must be >= 1, got {self.norm_p!r}")
        if not self.scales:
            raise ConfigError("schedule.scales must be nonempty")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError(f"schedule.scales must be strictly increasing, got {list(self.scales)}")
        if any(not n > 0 for n in self.scales):
            raise ConfigError("schedule.scales must be positive")

    def grid(self) -> Grid:
        return parse_domain(self.domain)

    def to_dict(self) -> dict:
        return {
            "function": {"expression": self.expression, "csv": self.csv},
            "grid": {"domain": self.domain},
            "kernel": {"norm_p": self.norm_p, "exponent_p": self.exponent_p, "kind": self.kind},
            "schedule": {"scales": list(self.scales)},
            "output": {"directory": self.output_dir},
            "checks": self.checks.to_dict(),
            "seed": self.seed,
        }


def _take(section: dict, key: str, types, where: str, default=_REQUIRED):
    if key not in section:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {where}.{key}")
        return default
    value = section.pop(key)
    if value is None and default is not _REQUIRED:
        return default
    allowed = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool) and bool not in allowed:
        raise ConfigError(f"{where}.{key} has the wrong type: {value!r}")
    if float in allowed and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, allowed):
        raise ConfigError(f"{where}.{key} has the wrong type: {value!r}")
    return value


def _reject_unknown(section: dict, where: str):
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"unknown key {where}.{key}")


def from_dict(data: dict, base_dir: str = ".") -> RunConfig:
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}

    function = data.pop("function", {})
    if not isinstance(function, dict):
        raise ConfigError("function must be a table")
    expression = _take(function, "expression", str, "function", default=None)
    csv = _take(function, "csv", str, "function", default=None)
    _reject_unknown(function, "function")
    if csv is not None:
        csv = os.path.normpath(os.path.join(base_dir, csv))

    grid_sec = data.pop("grid", {})
    if not isinstance(grid_sec, dict):
        raise ConfigError("grid must be a table")
    domain = _take(grid_sec, "domain", str, "grid")
    _reject_unknown(grid_sec, "grid")

    kernel = data.pop("kernel", {})
    if not isinstance(kernel, dict):
        raise ConfigError("kernel must be a table")
    norm_p = _take(kernel, "norm_p", float, "kernel", default=2.0)
    exponent_p = _take(kernel, "exponent_p", float, "kernel", default=2.0)
    kind = _take(kernel, "kind", str, "kernel", default="kp")
    _reject_unknown(kernel, "kernel")

    schedule = data.pop("schedule", {})
    if not isinstance(schedule, dict):
        raise ConfigError("schedule must be a table")
    scales_raw = _take(schedule, "scales", list, "schedule", default=None)
    _reject_unknown(schedule, "schedule")
    if scales_raw is None:
        scales = RunConfig.__dataclass_fields__["scales"].default
    else:
        try:
            scales = tuple(float(v) for v in scales_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"schedule.scales must be a list of numbers: {exc}") from exc

    output = data.pop("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output must be a table")
    output_dir = _take(output, "directory", str, "output", default="out")
    _reject_unknown(output, "output")

    checks_sec = data.pop("checks", {})
    if not isinstance(checks_sec, dict):
        raise ConfigError("checks must be a table")
    defaults = CheckSettings()
    checks = CheckSettings(
        sandwich_rtol=_take(checks_sec, "sandwich_rtol", float, "checks", default=defaults.sandwich_rtol),
        inf_gap_tol=_take(checks_sec, "inf_gap_tol", float, "checks", default=defaults.inf_gap_tol),
        argmin_tol=_take(checks_sec, "argmin_tol", float, "checks", default=defaults.argmin_tol),
        final_gap_target=_take(checks_sec, "final_gap_target", (float, type(None)), "checks", default=None),
        boundary_mask_width=_take(checks_sec, "boundary_mask_width", int, "checks", default=defaults.boundary_mask_width),
        holder_alpha=_take(checks_sec, "holder_alpha", (float, type(None)), "checks", default=None),
        curvature_headroom=_take(checks_sec, "curvature_headroom", float, "checks", default=defaults.curvature_headroom),
        include_omega=_take(checks_sec, "include_omega", bool, "checks", default=defaults.include_omega),
        include_growth=_take(checks_sec, "include_growth", bool, "checks", default=defaults.include_growth),
        separation_floor=_take(checks_sec, "separation_floor", (float, type(None)), "checks", default=None),
    )
    _reject_unknown(checks_sec, "checks")

    seed = _take(data, "seed", int, "top level", default=0)
    _reject_unknown(data, "top level")

    return RunConfig(
        domain=domain,
        expression=expression,
        csv=csv,
        norm_p=norm_p,
        exponent_p=exponent_p,
        kind=kind,
        scales=scales,
        seed=seed,
        output_dir=output_dir,
        checks=checks,
    )


def load(path: str) -> RunConfig:
    """Load and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
