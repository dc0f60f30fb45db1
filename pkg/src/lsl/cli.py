"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
or input errors.
"""
from __future__ import annotations

import os
import sys

_threads = os.environ.get("LSL_THREADS")
if _threads is not None and _threads.strip().isdigit() and int(_threads) > 0:
    # BLAS pools read these at import time, so set them before numpy loads
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads.strip())

import argparse  # noqa: E402
import json  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .surface_core import (  # noqa: E402
    Cylinder,
    LambdaParams,
    Plane,
    SurfaceError,
    canonical_lambda,
    descriptor_from_json,
    sample_surface,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _read_descriptor(path: str):
    try:
        return descriptor_from_json(_read_json(path))
    except (SurfaceError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"{path}: invalid surface descriptor: {exc}") from exc


def _lambda_for(desc, given):
    if given is not None:
        return LambdaParams(given, desc.n)
    try:
        return LambdaParams(canonical_lambda(desc), desc.n)
    except (SurfaceError, ValueError) as exc:
        raise UsageError(f"--lambda is required for this surface ({exc})") from exc


def _parse_ids(text: str):
    try:
        ids = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError as exc:
        raise UsageError(f"--only expects comma-separated criterion numbers, got {text!r}") from exc
    if not ids or any(i < 1 or i > 10 for i in ids):
        raise UsageError("criterion numbers must lie in 1..10")
    return ids


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_reproduce(args) -> int:
    from .acceptance import run_all

    ids = _parse_ids(args.only) if args.only else None
    results = run_all(ids)
    for r in results:
        print(r.line())
    report = {
        "version": __version__,
        "criteria": [r.to_json() for r in results],
        "all_pass": all(r.passed for r in results),
    }
    Path(args.out).write_text(_dump_json(report))
    return EXIT_OK if report["all_pass"] else EXIT_FAIL


def cmd_stability_scan(args) -> int:
    from .stability import threshold_scan

    try:
        scan = threshold_scan(args.n, args.r_min, args.r_max, args.step, args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(scan.to_csv(), args.out)
    for lo, hi in scan.transitions:
        print(f"transition between r={_fmt(lo)} and r={_fmt(hi)}", file=sys.stderr)
    return EXIT_FAIL if scan.disagreements() else EXIT_OK


def cmd_identities_check(args) -> int:
    from .functionals import NotALambdaSurface, drift_identity_residuals, integral_identity_residuals

    desc = _read_descriptor(args.input)
    params = _lambda_for(desc, args.lam)
    s = sample_surface(desc)
    try:
        reports = drift_identity_residuals(s, params, args.drift_tol) + integral_identity_residuals(
            s, params, args.integral_tol
        )
    except NotALambdaSurface as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(_dump_json([r.to_json() for r in reports]), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_variation_fd_check(args) -> int:
    from .variations import (
        VariationError,
        fd_check_first_variation,
        fd_check_second_variation,
        load_battery,
        variation_battery,
    )

    desc = _read_descriptor(args.input)
    params = _lambda_for(desc, args.lam)
    s = sample_surface(desc)
    if args.battery:
        try:
            battery = load_battery(json.dumps(_read_json(args.battery)), s.dim)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"{args.battery}: invalid battery: {exc}") from exc
    else:
        battery = variation_battery(args.seed, s.dim, args.count)
    rows = []
    ok = True
    for i, var in enumerate(battery):
        try:
            if args.order == "first":
                rep = fd_check_first_variation(s, None, params, var)
            else:
                rep = fd_check_second_variation(s, params, var)
        except VariationError as exc:
            raise UsageError(str(exc)) from exc
        good = rep.converged and rep.check_error <= args.tol
        ok &= good
        rows.append({"case": i, **rep.to_json(), "pass": good})
    _emit(_dump_json(rows), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_flow_run(args) -> int:
    from .flow import run

    desc = _read_descriptor(args.input)
    try:
        trace = run(desc, args.dt, args.steps, args.scheme, args.trace_stride, args.redistribute_every)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    _emit(trace.to_csv(), args.out)
    if trace.halted:
        print(f"flow halted: {trace.halted}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _growth_descriptor(args):
    if args.input:
        return _read_descriptor(args.input)
    if args.surface == "cylinder":
        if args.k is None or args.r0 is None:
            raise UsageError("cylinder needs --k and --r0")
        return Cylinder(args.k, args.n, args.r0)
    return Plane(args.n)


def cmd_growth_probe(args) -> int:
    from .growth import growth_exponent

    try:
        prof = growth_exponent(_growth_descriptor(args), args.r_min, args.r_max, args.samples)
    except (SurfaceError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    _emit(prof.to_csv(), args.out)
    print(f"fitted_exponent {_fmt(prof.fitted_exponent)} bound_exponent {_fmt(prof.bound_exponent)}", file=sys.stderr)
    return EXIT_OK if abs(prof.fitted_exponent - prof.bound_exponent) <= args.tol else EXIT_FAIL


def cmd_growth_annulus(args) -> int:
    from .growth import annulus_check

    try:
        rep = annulus_check(_growth_descriptor(args), args.t_min, args.t_max)
    except (SurfaceError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    _emit(rep.to_csv(), args.out)
    print(f"ratio_bound {_fmt(rep.ratio_bound)} doubling_onset {rep.doubling_onset}", file=sys.stderr)
    return EXIT_OK if np.isfinite(rep.ratio_bound) and rep.doubling_onset is not None else EXIT_FAIL


def cmd_growth_logsobolev(args) -> int:
    from .growth import log_sobolev_check

    desc = _read_descriptor(args.input)
    params = _lambda_for(desc, args.lam)
    rep = log_sobolev_check(sample_surface(desc), params)
    rows = {
        "lambda": params.lam,
        "minimal_c1": rep.minimal_c1,
        "minimal_c1_general": rep.minimal_c1_general,
        "cases": [
            {"label": c.label, "lhs": c.lhs, "gradient_term": c.gradient_term, "minimal_c1": c.minimal_c1}
            for c in rep.cases
        ],
    }
    _emit(_dump_json(rows), args.out)
    return EXIT_OK if np.isfinite(rep.minimal_c1) else EXIT_FAIL


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lsl", description="Numerical checks for lambda-hypersurfaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    rp = sub.add_parser("reproduce", help="run the acceptance matrix")
    rp.add_argument("--out", required=True, help="report JSON path")
    rp.add_argument("--only", help="comma-separated criterion numbers")
    rp.set_defaults(func=cmd_reproduce)

    st = sub.add_parser("stability", help="sphere stability").add_subparsers(dest="action", parser_class=_Parser)
    sc = st.add_parser("scan", help="classify spheres over a radius grid")
    sc.add_argument("--n", type=int, required=True)
    sc.add_argument("--mode", choices=("f", "weak"), default="f")
    sc.add_argument("--r-min", type=float, required=True)
    sc.add_argument("--r-max", type=float, required=True)
    sc.add_argument("--step", type=float, default=1e-3)
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_stability_scan)

    idn = sub.add_parser("identities", help="identity residuals").add_subparsers(dest="action", parser_class=_Parser)
    ic = idn.add_parser("check", help="drift and integral identities on a surface")
    ic.add_argument("--input", required=True, help="surface descriptor JSON")
    ic.add_argument("--lambda", dest="lam", type=float)
    ic.add_argument("--drift-tol", type=float, default=1e-8)
    ic.add_argument("--integral-tol", type=float, default=1e-6)
    ic.add_argument("--out")
    ic.set_defaults(func=cmd_identities_check)

    va = sub.add_parser("variation", help="variation formulas").add_subparsers(dest="action", parser_class=_Parser)
    fd = va.add_parser("fd-check", help="compare variation formulas with finite differences")
    fd.add_argument("--input", required=True, help="surface descriptor JSON")
    fd.add_argument("--battery", help="variation battery JSON")
    fd.add_argument("--order", choices=("first", "second"), default="first")
    fd.add_argument("--lambda", dest="lam", type=float)
    fd.add_argument("--seed", type=int, default=0)
    fd.add_argument("--count", type=int, default=6)
    fd.add_argument("--tol", type=float, default=1e-5)
    fd.add_argument("--out")
    fd.set_defaults(func=cmd_variation_fd_check)

    fl = sub.add_parser("flow", help="weighted volume-preserving flow").add_subparsers(dest="action", parser_class=_Parser)
    fr = fl.add_parser("run", help="integrate the flow from a curve or sphere")
    fr.add_argument("--input", required=True, help="surface descriptor JSON")
    fr.add_argument("--dt", type=float, default=1e-4)
    fr.add_argument("--steps", type=int, default=100)
    fr.add_argument("--scheme", choices=("rk4", "euler"), default="rk4")
    fr.add_argument("--trace-stride", type=int, default=1)
    fr.add_argument("--redistribute-every", type=int, default=0)
    fr.add_argument("--out")
    fr.set_defaults(func=cmd_flow_run)

    gr = sub.add_parser("growth", help="area growth").add_subparsers(dest="action", parser_class=_Parser)

    def surface_args(q):
        q.add_argument("--input", help="surface descriptor JSON (overrides --surface)")
        q.add_argument("--surface", choices=("cylinder", "plane"), default="cylinder")
        q.add_argument("--k", type=int)
        q.add_argument("--n", type=int, default=2)
        q.add_argument("--r0", type=float)
        q.add_argument("--out")

    gp = gr.add_parser("probe", help="ball areas and fitted growth exponent")
    surface_args(gp)
    gp.add_argument("--r-min", type=float, default=2.0)
    gp.add_argument("--r-max", type=float, default=64.0)
    gp.add_argument("--samples", type=int, default=32)
    gp.add_argument("--tol", type=float, default=0.05)
    gp.set_defaults(func=cmd_growth_probe)

    ga = gr.add_parser("annulus", help="annulus ratios and doubling flags")
    surface_args(ga)
    ga.add_argument("--t-min", type=int, default=1)
    ga.add_argument("--t-max", type=int, default=64)
    ga.set_defaults(func=cmd_growth_annulus)

    gl = gr.add_parser("logsobolev", help="minimal log-Sobolev constant on a compact surface")
    gl.add_argument("--input", required=True, help="surface descriptor JSON")
    gl.add_argument("--lambda", dest="lam", type=float)
    gl.add_argument("--out")
    gl.set_defaults(func=cmd_growth_logsobolev)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if _threads is not None and not (_threads.strip().isdigit() and int(_threads) > 0):
        print(f"lsl: error: LSL_THREADS must be a positive integer, got {_threads!r}", file=sys.stderr)
        return EXIT_USAGE
    if not argv:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lsl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
