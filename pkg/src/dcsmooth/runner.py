"""Execute a run configuration end to end and write its artifacts.

A run directory contains one CSV per scale (columns: coordinates, f, I_f,
II_f, g_n, co_g_n, delta) plus report.json holding the configuration echo,
the stage file list and every check verdict.  Output is deterministic: the
same configuration produces byte-identical artifacts, and `diagnose` can
rebuild the full report from the artifacts alone.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .config import CheckSettings, RunConfig, from_dict
from .diagnostics import (
    DiagnosticsReport,
    StageView,
    build_report,
    format_checks,
    stage_view_from_columns,
    stage_views,
)
from .errors import ConfigError, DcsmoothError
from .expr import compile_expression
from .grid import GridFunction, make_grid_function, read_csv, write_csv
from .norms import Kernel, NormSpec
from .regularize import RegularizationRun, run_regularization

STAGE_COLUMNS = ("f", "I_f", "II_f", "g_n", "co_g_n", "delta")
REPORT_NAME = "report.json"


def _atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_source(config: RunConfig) -> GridFunction:
    grid = config.grid()
    if config.expression is not None:
        sampler = compile_expression(config.expression, grid.dim)
        return make_grid_function(grid, sampler)
    fn, _ = read_csv(config.csv)
    if fn.grid != grid:
        raise ConfigError(
            f"CSV grid {fn.grid} does not match the configured domain {config.domain!r}"
        )
    return fn


def build_kernel(config: RunConfig) -> Kernel:
    grid = config.grid()
    norm = NormSpec(dim=grid.dim, p_norm=config.norm_p)
    return Kernel(norm=norm, exponent=config.exponent_p, kind=config.kind)


def stage_filename(index: int, scale: float) -> str:
    return f"stage_{index:02d}_n{scale:g}.csv"


def write_stage_csv(path: str, run: RegularizationRun, index: int) -> None:
    st = run.stages[index]
    columns = {
        "f": run.source.values,
        "I_f": st.inf_smooth.values,
        "II_f": st.iterated.values,
        "g_n": st.shifted.values,
        "co_g_n": st.delta.plus.values,
        "delta": st.delta.value.values,
    }
    write_csv(run.source, path, columns=columns)


def _report_document(config: RunConfig, report: DiagnosticsReport, stage_files: list[dict]) -> str:
    doc = {
        "config": config.to_dict(),
        "stages": stage_files,
        "report": report.to_dict(),
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _settings_kwargs(checks: CheckSettings) -> dict:
    return {
        "sandwich_rtol": checks.sandwich_rtol,
        "inf_gap_tol": checks.inf_gap_tol,
        "argmin_tol": checks.argmin_tol,
        "final_gap_target": checks.final_gap_target,
        "boundary_mask_width": checks.boundary_mask_width,
        "holder_alpha": checks.holder_alpha,
        "curvature_headroom": checks.curvature_headroom,
        "include_omega": checks.include_omega,
        "include_growth": checks.include_growth,
        "separation_floor": checks.separation_floor,
    }


def run(config: RunConfig, *, quiet: bool = False) -> int:
    """Run the pipeline, write artifacts, print one line per check.

    Returns 0 when every check passes, 1 otherwise.
    """
    source = load_source(config)
    kernel = build_kernel(config)
    reg = run_regularization(source, kernel, config.scales)
    report = build_report(
        source,
        kernel,
        stage_views(reg),
        seed=config.seed,
        **_settings_kwargs(config.checks),
    )

    os.makedirs(config.output_dir, exist_ok=True)
    stage_files = []
    for i, st in enumerate(reg.stages):
        name = stage_filename(i, st.scale)
        write_stage_csv(os.path.join(config.output_dir, name), reg, i)
        stage_files.append({"file": name, "scale": st.scale})
    _atomic_write_text(
        os.path.join(config.output_dir, REPORT_NAME),
        _report_document(config, report, stage_files),
    )

    if not quiet:
        print(format_checks(report.checks))
        failed = sum(1 for c in report.checks if c.status != "PASS")
        print("ALL CHECKS PASSED" if failed == 0 else f"{failed} CHECK(S) FAILED")
        print(f"artifacts written to {config.output_dir}")
    return 0 if report.all_passed else 1


def _load_stage(path: str, scale: float) -> tuple[GridFunction, StageView]:
    fn, columns = read_csv(path)
    missing = [c for c in STAGE_COLUMNS if c not in columns]
    if missing:
        raise ConfigError(f"{path} is missing stage columns {missing}")
    grid = fn.grid
    as_fn = {name: GridFunction(grid, np.asarray(vals)) for name, vals in columns.items()}
    view = stage_view_from_columns(scale, as_fn)
    return as_fn["f"], view


def diagnose(run_dir: str, *, quiet: bool = False) -> int:
    """Rebuild the report from a run directory's artifacts and re-verify.

    Returns 0 when all recomputed checks pass and match the stored verdicts,
    1 when a check fails or a verdict changed.
    """
    report_path = os.path.join(run_dir, REPORT_NAME)
    try:
        with open(report_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"no {REPORT_NAME} in {run_dir}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{report_path} is not valid JSON: {exc}") from exc
    try:
        config = from_dict(doc["config"], base_dir=run_dir)
        stage_entries = doc["stages"]
        stored = {c["name"]: c["status"] for c in doc["report"]["checks"]}
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{report_path} is missing expected fields: {exc}") from exc

    source = None
    views = []
    for entry in stage_entries:
        f_col, view = _load_stage(os.path.join(run_dir, entry["file"]), float(entry["scale"]))
        views.append(view)
        source = f_col if source is None else source
    if source is None:
        raise ConfigError(f"{report_path} lists no stages")

    kernel = build_kernel(config)
    report = build_report(
        source,
        kernel,
        tuple(views),
        seed=config.seed,
        **_settings_kwargs(config.checks),
    )

    mismatches = []
    for check in report.checks:
        if stored.get(check.name) is not None and stored[check.name] != check.status:
            mismatches.append(f"{check.name}: stored {stored[check.name]}, recomputed {check.status}")
    if not quiet:
        print(format_checks(report.checks))
        for line in mismatches:
            print(f"VERDICT MISMATCH {line}")
        failed = sum(1 for c in report.checks if c.status != "PASS")
        print(
            "ALL CHECKS PASSED"
            if failed == 0 and not mismatches
            else f"{failed} CHECK(S) FAILED, {len(mismatches)} verdict mismatch(es)"
        )
    return 0 if report.all_passed and not mismatches else 1


__all__ = [
    "DcsmoothError",
    "STAGE_COLUMNS",
    "REPORT_NAME",
    "load_source",
    "build_kernel",
    "run",
    "diagnose",
    "stage_filename",
]
