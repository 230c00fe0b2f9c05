#!/usr/bin/env python3
"""Throughput benchmark: compiled stepping kernel vs the numpy fallback.

Runs the identical leapfrog workload through ``dkglab._stepper`` (Cython)
and ``dkglab._stepper_py`` (numpy), reports cell-steps per second, and
cross-checks that the sup-norm monitors agree bitwise.

Usage:
    python3 benchmarks/bench_stepper.py [--hx H] [--steps N] [--repeats K]
"""

from __future__ import annotations

import argparse
import math
import statistics
import time

import numpy as np

from dkglab import _stepper_py
from dkglab.kernels import poly_bump

try:
    from dkglab import _stepper
except ImportError:
    _stepper = None


def build_state(hx: float, width: float, eps: float) -> dict:
    half = math.ceil(width / hx)
    xs = (np.arange(2 * half + 1) - half) * hx
    bump = poly_bump(1.0, amplitude=eps, power=3)
    return {
        "xs": xs,
        "hx": hx,
        "ht": 0.9 * hx,
        "u0": bump(xs),
        "du0": 0.5 * bump(xs),
        "v0": np.zeros_like(xs),
        "dv0": bump(xs),
    }


def run_once(impl, state: dict, n_steps: int) -> tuple[float, list[np.ndarray]]:
    ht = state["ht"]
    up = state["u0"].copy()
    uc = state["u0"] + ht * state["du0"]
    vp = state["v0"].copy()
    vc = state["v0"] + ht * state["dv0"]
    du = state["du0"].copy()
    dv = state["dv0"].copy()
    mons = [np.zeros(n_steps) for _ in range(6)]
    tr_u = np.full(n_steps, math.nan)
    tr_v = np.full(n_steps, math.nan)
    t0 = time.perf_counter()
    done, status = impl.run_steps(
        up, uc, vp, vc, du, dv, np.abs(state["xs"]), float(state["xs"][0]),
        state["hx"], ht, 1.0, 0.0, 2.0, 2.0, 1.0,
        1, n_steps, True, 2, math.inf, 1.0,
        *mons, tr_u, tr_v,
    )
    elapsed = time.perf_counter() - t0
    assert done == n_steps and status == _stepper_py.STATUS_OK
    return elapsed, mons


def bench(impl, state: dict, n_steps: int, repeats: int):
    run_once(impl, state, min(n_steps, 64))  # warmup
    times = []
    mons: list[np.ndarray] = []
    for _ in range(repeats):
        elapsed, mons = run_once(impl, state, n_steps)
        times.append(elapsed)
    return min(times), statistics.median(times), mons


def main() -> int:
    ap = argparse.ArgumentParser(
        description="benchmark the compiled stepper against the numpy fallback"
    )
    ap.add_argument("--hx", type=float, default=0.01, help="grid spacing")
    ap.add_argument("--width", type=float, default=8.0, help="grid half-width")
    ap.add_argument("--steps", type=int, default=1500, help="time steps per run")
    ap.add_argument("--repeats", type=int, default=5, help="timed repetitions")
    args = ap.parse_args()

    state = build_state(args.hx, args.width, eps=0.5)
    nx = state["xs"].size
    cells = nx * args.steps
    print(f"grid {nx} points, {args.steps} steps, {args.repeats} repeats")

    results: dict[str, tuple[float, list[np.ndarray]]] = {}
    for name, impl in (("python", _stepper_py), ("compiled", _stepper)):
        if impl is None:
            print(f"{name:>9}: extension not built, skipped")
            continue
        best, med, mons = bench(impl, state, args.steps, args.repeats)
        results[name] = (best, mons)
        rate = cells / best / 1e6
        print(
            f"{name:>9}: best {best * 1e3:8.2f} ms"
            f"  median {med * 1e3:8.2f} ms  {rate:8.1f} Mcell-steps/s"
        )

    if len(results) == 2:
        speedup = results["python"][0] / results["compiled"][0]
        agree = all(
            np.array_equal(a, b)
            for a, b in zip(results["python"][1][:4], results["compiled"][1][:4])
        )
        print(f"  speedup: compiled is {speedup:.1f}x faster")
        print(f"    check: sup-norm monitors bitwise equal: {agree}")
        if not agree:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
