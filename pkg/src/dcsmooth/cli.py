"""Command line interface.

Subcommands:
  regularize   run the full pipeline from a TOML config or inline flags
  moreau       quadratic-kernel smoothing of a function (fast path)
  envelope     convex envelope of grid samples
  lasry-lions  two-scale smooth-then-fill regularization
  kernel-check sampled kernel constants (growth, separation, quadratic identity)
  diagnose     re-verify a run directory from its artifacts

Exit codes: 0 all checks pass, 1 a check fails, 2 bad input or config.
"""

from __future__ import annotations

import argparse
import dataclasses
import re
import sys

import numpy as np

from . import config as config_mod
from .config import CheckSettings, RunConfig, parse_domain
from .diagnostics import format_checks, check_growth, check_parallelogram, check_separation
from .envelope import SlopeGrid, convex_envelope, legendre_biconjugate
from .errors import DcsmoothError
from .expr import compile_expression
from .grid import GridFunction, make_grid_function, read_csv, write_csv
from .infconv import fast_quadratic_inf_convolve, inf_convolve, lasry_lions
from .norms import Kernel, NormSpec, estimate_growth_constants, estimate_separation_constant
from .runner import diagnose as run_diagnose
from .runner import run as run_pipeline


def _add_source_args(p: argparse.ArgumentParser, *, domain_required: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", help="expression in x (and y in 2D), e.g. 'abs(x)'")
    src.add_argument("--csv", help="CSV file with columns x[,y],value")
    p.add_argument(
        "--domain",
        required=domain_required,
        help="grid as lo:hi:nodes (1D) or lo:hi:nodes,lo:hi:nodes (2D)",
    )


def _load_source(args) -> GridFunction:
    if args.csv is not None:
        fn, _ = read_csv(args.csv)
        if args.domain:
            grid = parse_domain(args.domain)
            if grid != fn.grid:
                raise DcsmoothError(f"CSV grid {fn.grid} does not match --domain {args.domain!r}")
        return fn
    grid = parse_domain(args.domain)
    sampler = compile_expression(args.fn, grid.dim)
    return make_grid_function(grid, sampler)


def _kernel_from_args(args, dim: int) -> Kernel:
    norm = NormSpec(dim=dim, p_norm=args.norm_p)
    return Kernel(norm=norm, exponent=args.exponent_p, kind=args.kind)


def _add_kernel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--norm-p", type=float, default=2.0, help="norm exponent (1 <= p <= inf; default 2)")
    p.add_argument("--exponent-p", type=float, default=2.0, help="kernel growth exponent (> 1; default 2)")
    p.add_argument("--kind", choices=("kp", "hilbert"), default="kp", help="kernel family")


def _write_result(source: GridFunction, values: np.ndarray, out: str | None, label: str) -> None:
    if out:
        write_csv(source, out, columns={"f": source.values, label: values})
        print(f"wrote {out}")
    else:
        fin = source.finite_mask
        gap = float((source.values[fin] - values[fin]).max(initial=0.0))
        print(
            f"{label}: min={float(values.min())!r} max={float(values.max())!r} "
            f"worst_gap_below_f={gap!r}"
        )


def _cmd_regularize(args) -> int:
    if args.config is not None:
        cfg = config_mod.load(args.config)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output_dir=args.out)
        return run_pipeline(cfg)
    if args.fn is None and args.csv is None:
        raise DcsmoothError("regularize needs --config or a source (--fn/--csv with --domain)")
    if args.domain is None:
        raise DcsmoothError("--domain is required when running without --config")
    scales = tuple(float(s) for s in args.scales.split(","))
    checks = CheckSettings(
        final_gap_target=args.final_gap_target,
        boundary_mask_width=args.mask_width,
        argmin_tol=args.argmin_tol,
    )
    cfg = RunConfig(
        domain=args.domain,
        expression=args.fn,
        csv=args.csv,
        norm_p=args.norm_p,
        exponent_p=args.exponent_p,
        kind=args.kind,
        scales=scales,
        seed=args.seed,
        output_dir=args.out or "out",
        checks=checks,
    )
    return run_pipeline(cfg)


def _cmd_moreau(args) -> int:
    source = _load_source(args)
    fast = fast_quadratic_inf_convolve(source, args.n)
    _write_result(source, fast.values, args.out, "value")
    if args.check:
        norm = NormSpec(dim=source.grid.dim, p_norm=2.0)
        kernel = Kernel(norm=norm, exponent=2.0, kind="hilbert")
        direct = inf_convolve(source, kernel, args.n)
        scale = 1.0 + float(np.abs(direct.values).max())
        worst = float(np.abs(fast.values - direct.values).max()) / scale
        ok = worst <= 1e-9
        print(f"{'PASS' if ok else 'FAIL'} fast-matches-direct (worst={worst:.6g}, tol=1e-09)")
        return 0 if ok else 1
    return 0


def _cmd_envelope(args) -> int:
    source = _load_source(args)
    env = convex_envelope(source)
    _write_result(source, env.values, args.out, "value")
    if args.check_dual:
        if source.grid.dim == 1:
            slopes = SlopeGrid.pairwise_for(source)
        else:
            n0, n1 = source.grid.nodes
            lines = tuple(sorted({0, n0 // 2, n0 - 1, n1 // 2, n1 - 1}))
            slopes = SlopeGrid.pairwise_for(source, lines=lines)
        bic = legendre_biconjugate(source, slopes)
        fin = np.isfinite(env.values)
        scale = 1.0 + float(np.abs(env.values[fin]).max(initial=0.0))
        worst = float(np.abs(env.values[fin] - bic.values[fin]).max(initial=0.0)) / scale
        ok = worst <= 1e-6
        print(f"{'PASS' if ok else 'FAIL'} hull-matches-biconjugate (worst={worst:.6g}, tol=1e-06)")
        return 0 if ok else 1
    return 0


def _cmd_lasry_lions(args) -> int:
    source = _load_source(args)
    kernel = _kernel_from_args(args, source.grid.dim)
    out = lasry_lions(source, kernel, args.n, args.m, enforce_scale_order=args.strict_order)
    _write_result(source, out.values, args.out, "value")
    return 0


def _cmd_kernel_check(args) -> int:
    norm = NormSpec(dim=args.dim, p_norm=args.norm_p)
    kernel = Kernel(norm=norm, exponent=args.exponent_p, kind=args.kind)
    checks = [check_growth(kernel, seed=args.seed)]
    try:
        growth = estimate_growth_constants(kernel, seed=args.seed)
        print(f"growth: eta={growth.eta:g} gamma={growth.gamma!r} samples={growth.samples}")
    except DcsmoothError as exc:
        print(f"growth: none found ({exc})")
    sep = estimate_separation_constant(kernel, seed=args.seed)
    print(f"separation: constant={sep.constant!r} samples={sep.samples}")
    checks.append(check_separation(kernel, args.min_separation, seed=args.seed))
    para = check_parallelogram(kernel, seed=args.seed)
    if para is not None:
        checks.append(para)
    print(format_checks(tuple(checks)))
    return 0 if all(c.status == "PASS" for c in checks) else 1


def _cmd_diagnose(args) -> int:
    return run_diagnose(args.dir)


class _ArgumentParser(argparse.ArgumentParser):
    # Domain specs like "-2:2:401" start with a dash; widen argparse's idea
    # of "looks like a negative number" so they are consumed as option values
    # rather than mistaken for flags.
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d|^-\.\d")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="dcsmooth",
        description="difference-of-convex smoothing of grid functions",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("regularize", help="run the full pipeline and write artifacts")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--fn", help="expression source (inline mode)")
    p.add_argument("--csv", help="CSV source (inline mode)")
    p.add_argument("--domain", help="grid as lo:hi:nodes[,lo:hi:nodes] (inline mode)")
    _add_kernel_args(p)
    p.add_argument("--scales", default="1,2,4,8,16,32,64", help="comma-separated increasing scales")
    p.add_argument("--out", help="output directory (default 'out')")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--final-gap-target", type=float, default=None)
    p.add_argument("--mask-width", type=int, default=1)
    p.add_argument("--argmin-tol", type=float, default=0.0)
    p.set_defaults(handler=_cmd_regularize)

    p = sub.add_parser("moreau", help="quadratic-kernel smoothing (fast path)")
    _add_source_args(p)
    p.add_argument("--n", type=float, required=True, help="scale (kernel weight)")
    p.add_argument("--out", help="write x[,y],f,value CSV here")
    p.add_argument("--check", action="store_true", help="cross-check against the direct reduction")
    p.set_defaults(handler=_cmd_moreau)

    p = sub.add_parser("envelope", help="convex envelope of grid samples")
    _add_source_args(p)
    p.add_argument("--out", help="write x[,y],f,value CSV here")
    p.add_argument(
        "--check-dual",
        action="store_true",
        help="cross-check the hull against the double Legendre transform",
    )
    p.set_defaults(handler=_cmd_envelope)

    p = sub.add_parser("lasry-lions", help="smooth at scale n, then fill at scale m")
    _add_source_args(p)
    _add_kernel_args(p)
    p.add_argument("--n", type=float, required=True, help="smoothing scale")
    p.add_argument("--m", type=float, required=True, help="filling scale")
    p.add_argument("--strict-order", action="store_true", help="require m > n")
    p.add_argument("--out", help="write x[,y],f,value CSV here")
    p.set_defaults(handler=_cmd_lasry_lions)

    p = sub.add_parser("kernel-check", help="sampled kernel constants and identities")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)
    _add_kernel_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--min-separation",
        type=float,
        default=1e-6,
        help="fail when the sampled separation constant drops below this",
    )
    p.set_defaults(handler=_cmd_kernel_check)

    p = sub.add_parser("diagnose", help="re-verify a run directory from its artifacts")
    p.add_argument("--dir", required=True, help="run directory containing report.json")
    p.set_defaults(handler=_cmd_diagnose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except DcsmoothError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
