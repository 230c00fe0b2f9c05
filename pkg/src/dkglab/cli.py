"""Command-line interface.

Subcommands: linear-solve (exact operator on a grid), simulate (one
finite-difference run with trace and report), sweep (eps ladder, fits,
report files), sequences (iteration tables as CSV), verify (property
suites with exit code 0/1).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__, stepping
from .errors import DomainError, GridConfigError, ValidationError
from .kernels import LinearParams, poly_bump, quad_gl, solve_linear_ivp
from .selfcheck import run_suite
from .sequences import (
    FrameConstants,
    critical_sequences,
    default_frame_constants,
    sequence_table,
    subcritical_sequences,
    theta,
)
from .simulate import InitialDataSpec, ModelParams, NumericsConfig, simulate

_USER_ERRORS = (ValidationError, DomainError, GridConfigError, OSError)


def _cmd_linear_solve(args) -> int:
    params = LinearParams(b=args.b, m2=args.m2)
    if args.profile != "bump":
        raise ValidationError(f"unknown profile {args.profile!r} (available: bump)")
    f = poly_bump(args.R)
    half = math.ceil((args.R + args.t + 1.0) / args.grid)
    xs = (np.arange(2 * half + 1) - half) * args.grid
    values = [solve_linear_ivp(f, None, None, params, args.t, float(x)) for x in xs]
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, u in zip(xs, values):
            w.writerow([repr(float(x)), repr(float(u))])
    print(f"wrote {args.out} ({xs.size} rows, t={args.t}, b={args.b}, m2={args.m2})")
    return 0


def _cmd_simulate(args) -> int:
    params = ModelParams(
        n=args.n, p=args.p, q=args.q, b=args.b, m2=args.m2, R=args.R, eps=args.eps
    )
    spec = InitialDataSpec(R=args.R)
    numerics = NumericsConfig(hx=args.hx, t_max=args.tmax, cfl=args.cfl)
    traj, trace, report = simulate(params, spec, numerics)

    os.makedirs(args.out, exist_ok=True)
    traj_path = os.path.join(args.out, "trajectory.csv")
    trace_path = os.path.join(args.out, "trace.csv")
    report_path = os.path.join(args.out, "report.json")
    traj.to_csv(traj_path, x_stride=max(1, traj.xs.size // 400))
    trace.to_csv(trace_path)
    payload = {
        "params": {
            "n": params.n, "p": params.p, "q": params.q, "b": params.b,
            "m2": params.m2, "R": params.R, "eps": params.eps,
        },
        "numerics": {
            "hx": numerics.hx, "t_max": numerics.t_max, "cfl": numerics.cfl,
            "threshold_factor": numerics.threshold_factor,
        },
        "steps": traj.steps,
        "t_end": traj.t_end,
        "report": report.to_dict(),
        "backend": stepping.BACKEND,
        "version": __version__,
    }
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    if report.blew_up:
        print(
            f"blow-up at t_num={report.t_num:.6g} (trigger {report.trigger}, "
            f"insensitive={report.insensitive})"
        )
    else:
        print(f"no blow-up through t_max={numerics.t_max}")
    print(f"wrote {traj_path}, {trace_path}, {report_path}")
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import (
        bound_consistency_check,
        emit_report,
        fit_critical_law,
        fit_power_law,
        parse_sweep_config,
        run_sweep,
        _sequences_for,
    )

    config = parse_sweep_config(args.config)
    records = run_sweep(config)
    seqs = _sequences_for(config)
    idx = theta(config.n, config.p, config.q)

    fits = {}
    fit_errors = {}
    try:
        fits["power"] = fit_power_law(records)
    except ValidationError as exc:
        fit_errors["power"] = str(exc)
    if idx.classification == "critical":
        try:
            fits["critical"] = fit_critical_law(records, config.p * config.q)
        except ValidationError as exc:
            fit_errors["critical"] = str(exc)

    checks = {"bound_consistency": bound_consistency_check(records, seqs.eps0)}
    if "power" in fits:
        s = fits["power"].coef
        limit = (1.0 / idx.value + 0.5) if idx.value > 1e-14 else None
        checks["fit_sanity"] = {
            "slope": s,
            "slope_nonpositive": s <= 0,
            "abs_slope_limit": limit,
            "within_limit": (abs(s) <= limit) if limit is not None else None,
        }
    if fit_errors:
        checks["fit_errors"] = fit_errors

    paths = emit_report(records, fits, checks, config, outdir=args.out)
    blown = sum(1 for r in records if r.blew_up)
    print(f"{len(records)} runs, {blown} blew up")
    if "power" in fits:
        ref = f", reference {-1.0 / idx.value:.3f}" if idx.value > 1e-14 else ""
        print(f"fitted slope {fits['power'].coef:.4f}{ref}")
    for name, path in paths.items():
        print(f"wrote {path}")
    ok = checks["bound_consistency"]["ok"]
    if not ok:
        print("bound consistency violated", file=sys.stderr)
    return 0 if ok else 1


def _cmd_sequences(args) -> int:
    params = ModelParams(
        n=args.n, p=args.p, q=args.q, b=args.b, m2=args.m2, R=args.R, eps=args.eps
    )
    if (args.frame_c is None) != (args.frame_k is None):
        raise ValidationError("give both --frame-c and --frame-k or neither")
    if args.frame_c is not None:
        frame = FrameConstants(C=args.frame_c, K=args.frame_k)
    else:
        frame = default_frame_constants(params)
    v1 = poly_bump(args.R, amplitude=args.amp_v1, power=args.power)
    m_value = 0.5 * quad_gl(v1, v1.lo, v1.hi)
    if args.mode == "subcritical":
        seqs = subcritical_sequences(params, frame, m_value)
    else:
        seqs = critical_sequences(params, frame, m_value)
    rows = sequence_table(seqs, args.jmax)

    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(list(rows[0].keys()))
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
    finally:
        if out is not sys.stdout:
            out.close()
            print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def _cmd_verify(args) -> int:
    ok, lines = run_suite(args.which)
    for line in lines:
        print(line)
    print(f"suite {args.which}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dkglab",
        description=(
            "Coupled damped/undamped semilinear wave system: exact linear "
            "operators, finite-difference blow-up experiments, and "
            "lifespan-bound tooling."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("linear-solve", help="evaluate the exact linear solution on a grid")
    ls.add_argument("--b", type=float, required=True, help="damping coefficient")
    ls.add_argument("--m2", type=float, required=True, help="squared mass")
    ls.add_argument("--t", type=float, required=True, help="evaluation time")
    ls.add_argument("--profile", default="bump", help="initial-position profile (bump)")
    ls.add_argument("--R", type=float, default=1.0, help="data support radius")
    ls.add_argument("--grid", type=float, default=0.05, help="spatial step of the output grid")
    ls.add_argument("--out", required=True, help="output CSV path")
    ls.set_defaults(fn=_cmd_linear_solve)

    sim = sub.add_parser("simulate", help="one finite-difference run")
    sim.add_argument("--n", type=int, default=1)
    sim.add_argument("--p", type=float, required=True)
    sim.add_argument("--q", type=float, required=True)
    sim.add_argument("--b", type=float, required=True)
    sim.add_argument("--m2", type=float, default=0.0)
    sim.add_argument("--R", type=float, default=1.0)
    sim.add_argument("--eps", type=float, required=True)
    sim.add_argument("--tmax", type=float, required=True)
    sim.add_argument("--hx", type=float, required=True)
    sim.add_argument("--cfl", type=float, default=0.9)
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(fn=_cmd_simulate)

    sw = sub.add_parser("sweep", help="eps ladder, scaling fits, report files")
    sw.add_argument("--config", required=True, help="key = value config file")
    sw.add_argument("--out", required=True, help="output directory")
    sw.set_defaults(fn=_cmd_sweep)

    sq = sub.add_parser("sequences", help="iteration sequence tables as CSV")
    sq.add_argument("--mode", choices=("subcritical", "critical"), required=True)
    sq.add_argument("--jmax", type=int, required=True)
    sq.add_argument("--n", type=int, default=1)
    sq.add_argument("--p", type=float, required=True)
    sq.add_argument("--q", type=float, required=True)
    sq.add_argument("--b", type=float, required=True)
    sq.add_argument("--m2", type=float, default=0.0)
    sq.add_argument("--R", type=float, default=1.0)
    sq.add_argument("--eps", type=float, default=0.3)
    sq.add_argument("--amp-v1", type=float, default=1.0, dest="amp_v1")
    sq.add_argument("--power", type=int, default=3)
    sq.add_argument("--frame-c", type=float, default=None, dest="frame_c")
    sq.add_argument("--frame-k", type=float, default=None, dest="frame_k")
    sq.add_argument("--out", default=None, help="output CSV path (default stdout)")
    sq.set_defaults(fn=_cmd_sequences)

    ver = sub.add_parser("verify", help="run a property suite; exit 0/1")
    ver.add_argument(
        "--which",
        choices=("bessel", "kernel", "frame", "closed-forms"),
        required=True,
    )
    ver.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
