"""Property suites behind the ``verify`` CLI subcommand.

Each check_* function returns (ok, lines) where lines are human-readable
pass/fail records.  The pytest suite contains deeper versions of these
checks; the CLI variants are self-contained and quick.
"""

from __future__ import annotations

import math

import numpy as np

from .bessel import bessel_i0, bessel_i1, bessel_j0, bessel_j1, i1_over_z, j1_over_z
from .errors import ValidationError
from .kernels import (
    LinearParams,
    SourceFn,
    apply_S,
    apply_dS_dt,
    constant_profile,
    poly_bump,
    quad_gl,
    solve_linear_ivp,
)
from .sequences import (
    critical_sequences,
    default_frame_constants,
    lifespan_bound,
    subcritical_sequences,
    verify_closed_forms,
)
from .simulate import (
    InitialDataSpec,
    ModelParams,
    NumericsConfig,
    first_lower_bound_check,
    make_initial_data,
    simulate,
)

__all__ = [
    "fd_derivatives",
    "i0_ode_residual",
    "j0_ode_residual",
    "check_bessel",
    "check_kernels",
    "check_frame",
    "check_closed_forms",
    "run_suite",
]

_FD_H = 1e-2
# independent-series probes are used at and below this point; it sits far
# enough above the evaluation crossover that FD stencils never straddle it
_PROBE_SPLIT = 15.5


def fd_derivatives(f, x: np.ndarray, h: float = _FD_H) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order centered first and second derivatives of a callable."""
    fm2, fm1, f0, fp1, fp2 = (f(x + k * h) for k in (-2.0, -1.0, 0.0, 1.0, 2.0))
    d1 = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
    d2 = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h)
    return d1, d2


def _series_d012(x: float, sign: float) -> tuple[float, float, float]:
    """(f, f', f'') for f(x) = sum_k sign^k (x^2/4)^k / (k!)^2.

    sign +1 gives I0, sign -1 gives J0.  The derivative sums use their own
    differentiated coefficients, so this is an oracle independent of the
    production evaluation path.
    """
    w = 0.25 * x * x
    term = 1.0
    s0, s1, s2 = 1.0, 0.0, 0.0
    for k in range(1, 400):
        term *= sign * w / (k * k)
        s0 += term
        s1 += k * term
        s2 += k * (2 * k - 1) * term
        if abs(term) * (k * (2 * k + 1)) < 1e-18 * (abs(s0) + 1.0):
            break
    return s0, (2.0 / x) * s1, (2.0 / (x * x)) * s2


def i0_ode_residual(x: np.ndarray) -> np.ndarray:
    """Residual of I0'' + I0'/x - I0 = 0, kept O(1) at every scale.

    Below the probe split the derivatives come from independently
    differentiated series and the residual is normalized by I0 (all terms
    grow like e^x).  Above it, finite differences act on the bounded
    scaled function g = e^{-x} I0, for which the equation reads
    g'' + 2 g' + (g + g')/x = 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    low = x <= _PROBE_SPLIT
    for i in np.flatnonzero(low):
        f0, d1, d2 = _series_d012(float(x[i]), 1.0)
        out[i] = (d2 + d1 / x[i] - f0) / f0

    if np.any(~low):
        def g(t: np.ndarray) -> np.ndarray:
            return np.exp(-t) * bessel_i0(t)

        xh = x[~low]
        d1, d2 = fd_derivatives(g, xh)
        out[~low] = d2 + 2.0 * d1 + (g(xh) + d1) / xh
    return out


def j0_ode_residual(x: np.ndarray) -> np.ndarray:
    """Residual of J0'' + J0'/x + J0 = 0 (all terms O(1)).

    Independently differentiated series below the probe split; finite
    differences on the asymptotic branch above it, where evaluation is
    cancellation-free.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    low = x <= _PROBE_SPLIT
    for i in np.flatnonzero(low):
        f0, d1, d2 = _series_d012(float(x[i]), -1.0)
        out[i] = d2 + d1 / x[i] + f0
    if np.any(~low):
        xh = x[~low]
        d1, d2 = fd_derivatives(bessel_j0, xh)
        out[~low] = d2 + d1 / xh + bessel_j0(xh)
    return out


def _line(ok: bool, text: str) -> str:
    return f"{'ok  ' if ok else 'FAIL'} {text}"


def check_bessel() -> tuple[bool, list[str]]:
    lines: list[str] = []
    results: list[bool] = []

    def record(ok: bool, text: str) -> None:
        results.append(ok)
        lines.append(_line(ok, text))

    rng = np.random.default_rng(20260825)
    xs = rng.uniform(0.05, 30.0, size=100)
    r_i0 = float(np.max(np.abs(i0_ode_residual(xs))))
    record(r_i0 <= 1e-8, f"I0 ODE residual max {r_i0:.3e} on 100 points in (0,30] (tol 1e-8)")
    r_j0 = float(np.max(np.abs(j0_ode_residual(xs))))
    record(r_j0 <= 1e-8, f"J0 ODE residual max {r_j0:.3e} on 100 points in (0,30] (tol 1e-8)")

    record(bessel_i0(0.0) == 1.0, "I0(0) == 1 exactly")
    record(i1_over_z(0.0) == 0.5, "i1_over_z(0) == 1/2 exactly")
    record(bessel_j0(0.0) == 1.0, "J0(0) == 1 exactly")
    record(j1_over_z(0.0) == 0.5, "j1_over_z(0) == 1/2 exactly")
    record(bessel_i1(0.0) == 0.0, "I1(0) == 0 exactly")

    grid = np.linspace(0.0, 30.0, 1000)
    record(bool(np.all(bessel_i0(grid) >= 1.0)), "I0 >= 1 on a 1000-point grid")
    record(bool(np.all(bessel_i1(grid) >= 0.5 * grid)), "I1(x) >= x/2 on a 1000-point grid")

    # The alternating series loses ~eps * I0(15) ~ 5e-12 absolute accuracy to
    # cancellation at the crossover, so 5e-11 is an honest continuity budget.
    seam_ok = True
    worst = 0.0
    for f in (bessel_i0, bessel_i1, i1_over_z, bessel_j0, bessel_j1, j1_over_z):
        lo, hi = f(15.0 - 1e-12), f(15.0 + 1e-12)
        rel = abs(hi - lo) / max(1.0, abs(lo))
        worst = max(worst, rel)
        seam_ok &= rel <= 5e-11
    record(seam_ok, f"series/asymptotic seam continuous at x=15 (worst rel jump {worst:.3e})")

    probe = np.array([0.5, 5.0, 20.0])
    rel = np.max(np.abs(bessel_i1(probe) / probe - i1_over_z(probe)) / i1_over_z(probe))
    record(float(rel) <= 1e-13, f"I1(x)/x consistent with i1_over_z (worst rel {rel:.3e})")

    return all(results), lines


def check_kernels() -> tuple[bool, list[str]]:
    lines: list[str] = []
    results: list[bool] = []

    def record(ok: bool, text: str) -> None:
        results.append(ok)
        lines.append(_line(ok, text))

    xs = [-0.7, -0.2, 0.0, 0.4, 0.9]
    bump = poly_bump(1.0)

    for b, m2, name in ((1.0, 0.0, "damping"), (2.0, 1.0, "balanced"), (1.0, 1.0, "mass")):
        lp = LinearParams(b=b, m2=m2)
        ok = all(apply_S(0.0, lp, bump, x) == 0.0 for x in xs) and all(
            apply_dS_dt(0.0, lp, bump, x) == float(bump(x)) for x in xs
        )
        record(ok, f"t=0 contract (S=0, dS/dt=h) in {name} regime")

    lp = LinearParams(b=2.0, m2=1.0)
    c = 1.3
    f = constant_profile(c, 6.0)
    force = SourceFn(lambda t, ys: np.full_like(ys, lp.m2 * c), hi=6.0)
    err = max(abs(solve_linear_ivp(f, None, force, lp, 2.0, x) - c) for x in xs)
    record(err <= 1e-8, f"stationary solution preserved to {err:.3e} (tol 1e-8)")

    t, x = 1.0, 0.25
    bal = apply_S(t, LinearParams(b=2.0, m2=1.0), bump, x)
    for sign, name in ((-1.0, "damping->balanced"), (1.0, "mass->balanced")):
        gap = abs(apply_S(t, LinearParams(b=2.0, m2=(4.0 + sign * 1e-6) / 4.0), bump, x) - bal)
        record(gap <= 1e-8, f"regime seam continuity {name}: gap {gap:.3e} (tol 1e-8)")
        small = abs(apply_S(t, LinearParams(b=2.0, m2=(4.0 + sign * 1e-7) / 4.0), bump, x) - bal)
        ok = small <= 0.2 * gap or gap == 0.0
        record(ok, f"seam gap scales linearly in b^2-4m^2 ({name}: {gap:.3e} -> {small:.3e})")

    s_out = apply_S(1.0, LinearParams(b=1.0, m2=0.0), bump, 2.5)
    record(s_out == 0.0, "finite propagation speed: S h vanishes outside |x| <= R + t")

    bump2 = poly_bump(1.0, amplitude=2.0)
    lp_d = LinearParams(b=1.0, m2=0.0)
    rel = max(
        abs(apply_S(1.2, lp_d, bump2, x) - 2.0 * apply_S(1.2, lp_d, bump, x))
        / max(1e-300, abs(apply_S(1.2, lp_d, bump2, x)))
        for x in xs
    )
    record(rel <= 1e-13, f"linearity S(2h) = 2 S(h) (worst rel {rel:.3e})")

    return all(results), lines


def _standard_setup(eps: float = 0.3):
    params = ModelParams(n=1, p=2.0, q=2.0, b=1.0, m2=0.0, R=1.0, eps=eps)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    return params, spec


def check_frame(hx: float = 0.02, t_max: float = 10.0) -> tuple[bool, list[str]]:
    from .experiments import verify_iteration_frame

    lines: list[str] = []
    results: list[bool] = []

    def record(ok: bool, text: str) -> None:
        results.append(ok)
        lines.append(_line(ok, text))

    params, spec = _standard_setup()
    numerics = NumericsConfig(hx=hx, t_max=t_max)
    traj, trace, report = simulate(params, spec, numerics)
    if report.blew_up and report.t_num:
        trace = trace.restricted(0.9 * report.t_num)
    lines.append(
        f"     standard run: steps={traj.steps}, blew_up={report.blew_up}, "
        f"t_num={report.t_num}"
    )

    v1 = make_initial_data(spec, params)[3]
    fb = first_lower_bound_check(trace, params, v1)
    record(
        fb.ok,
        f"first lower bound v >= 0.95 M eps: worst {fb.worst_value:.6g} vs "
        f"bound {fb.bound:.6g} at t={fb.worst_t:.3f}",
    )

    frame = default_frame_constants(params)
    m_value = fb.bound / params.eps if params.eps > 0 else 0.0
    seqs = subcritical_sequences(params, frame, m_value)
    fr = verify_iteration_frame(trace, params, frame, seqs=seqs)
    record(
        fr.ok_u,
        f"frame inequality for U at {fr.n_samples} samples "
        f"(worst z={fr.worst_u.z:.3f}: lhs {fr.worst_u.lhs:.6g} vs rhs {fr.worst_u.rhs:.6g})",
    )
    record(
        fr.ok_v,
        f"frame inequality for V at {fr.n_samples} samples "
        f"(worst z={fr.worst_v.z:.3f}: lhs {fr.worst_v.lhs:.6g} vs rhs {fr.worst_v.rhs:.6g})",
    )
    record(fr.ok_envelope, "envelope domination for j = 0..5 on each slice domain")

    return all(results), lines


def check_closed_forms(j_max: int = 200) -> tuple[bool, list[str]]:
    lines: list[str] = []
    results: list[bool] = []

    def record(ok: bool, text: str) -> None:
        results.append(ok)
        lines.append(_line(ok, text))

    params, spec = _standard_setup()
    frame = default_frame_constants(params)
    v1 = poly_bump(params.R, amplitude=spec.amp_v1, power=spec.power)
    m_value = 0.5 * quad_gl(v1, v1.lo, v1.hi)

    sub = subcritical_sequences(params, frame, m_value)
    rep = verify_closed_forms(sub, j_max)
    record(
        rep.ok,
        f"subcritical recursions/identities/log-bounds up to j={j_max} "
        f"({len(rep.failures)} failures)",
    )
    for msg in rep.failures[:5]:
        lines.append(f"       {msg}")

    crit_params = ModelParams(n=3, p=math.sqrt(2.0), q=math.sqrt(2.0), b=1.0, m2=0.0, R=1.0, eps=0.3)
    crit = critical_sequences(crit_params, frame, m_value)
    rep_c = verify_closed_forms(crit, j_max)
    record(
        rep_c.ok,
        f"critical recursions/identities/log-bounds up to j={j_max} "
        f"({len(rep_c.failures)} failures)",
    )
    for msg in rep_c.failures[:5]:
        lines.append(f"       {msg}")

    lb1 = lifespan_bound(0.01, params, sub)
    lb2 = lifespan_bound(0.02, params, sub)
    ratio = lb1.bound / lb2.bound
    expect = 2.0 ** (1.0 / sub.theta.value)
    ok = abs(ratio - expect) <= 1e-9 * expect
    record(ok, f"subcritical bound homogeneity: halving eps multiplies T by 2^(1/theta)")

    return all(results), lines


_SUITES = {
    "bessel": check_bessel,
    "kernel": check_kernels,
    "frame": check_frame,
    "closed-forms": check_closed_forms,
}


def run_suite(which: str) -> tuple[bool, list[str]]:
    try:
        fn = _SUITES[which]
    except KeyError:
        raise ValidationError(
            f"unknown suite {which!r}; choose from {sorted(_SUITES)}"
        ) from None
    return fn()
