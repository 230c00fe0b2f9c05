"""Finite-difference simulation of the coupled system

    d2u/dt2 - d2u/dx2 + b du/dt + m2 u = |dv/dt|^p
    d2v/dt2 - d2v/dx2                  = |du/dt|^q

in one space dimension with compactly supported data (eps u0, eps u1) and
(eps v0, eps v1), plus blow-up detection, the characteristic-line trace
(u, v) sampled on t - x = R, and the first lower-bound check
v(R+z, z) >= M eps with M = (1/2) * integral of the v-velocity data.

Scheme: explicit three-level leapfrog, second order in space and time.
The damping term is discretized centrally, (u^{k+1} - u^{k-1}) / (2 h_t),
which keeps the update explicit; the velocity-coupled sources are
evaluated at the current level through a fixed number of Picard passes
(backward-difference predictor, centered corrector).  Compact support is
enforced exactly by masking outside |x| <= R + t + 2 h_x; the spatial
domain is sized so the light cone never reaches the boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import stepping
from .errors import GridConfigError, ValidationError
from .kernels import Profile, poly_bump, quad_gl

__all__ = [
    "ModelParams",
    "InitialDataSpec",
    "NumericsConfig",
    "GridState",
    "Trajectory",
    "MonitorHistory",
    "CharacteristicTrace",
    "BlowupPolicy",
    "BlowupReport",
    "FirstBoundReport",
    "make_initial_data",
    "simulate",
    "detect_blowup",
    "first_lower_bound_check",
]


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: dimension, exponents, damping, mass, data radius
    and amplitude.

    The simulator itself runs for any valid combination; the blow-up
    machinery additionally requires b^2 >= 4 m2 and a nonnegative
    criticality index, which the iteration module enforces.
    """

    n: int
    p: float
    q: float
    b: float
    m2: float
    R: float
    eps: float

    def __post_init__(self) -> None:
        if self.n < 1 or int(self.n) != self.n:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        if not (self.p > 1 and self.q > 1):
            raise ValidationError(f"exponents must exceed 1, got p={self.p}, q={self.q}")
        if not self.b > 0:
            raise ValidationError(f"damping b must be positive, got {self.b}")
        if self.m2 < 0:
            raise ValidationError(f"squared mass must be nonnegative, got {self.m2}")
        if not self.R > 0:
            raise ValidationError(f"support radius must be positive, got {self.R}")
        # eps = 0 is admitted as the degenerate zero-data case; the
        # iteration module insists on eps > 0 where the theory needs it
        if self.eps < 0 or not math.isfinite(self.eps):
            raise ValidationError(f"amplitude eps must be finite and >= 0, got {self.eps}")


@dataclass(frozen=True)
class InitialDataSpec:
    """Data profiles: per-component amplitudes of a common polynomial bump
    amplitude * (1 - (x/R)^2)_+^power, supported in [-R, R].

    power >= 3 keeps the positions twice and the velocities once
    continuously differentiable, as the well-posedness class requires.
    """

    R: float
    amp_u0: float = 0.0
    amp_u1: float = 0.0
    amp_v0: float = 0.0
    amp_v1: float = 1.0
    family: str = "poly_bump"
    power: int = 3

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise ValidationError(f"support radius must be positive, got {self.R}")
        for name in ("amp_u0", "amp_u1", "amp_v0", "amp_v1"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.family != "poly_bump":
            raise ValidationError(f"unknown profile family {self.family!r}")
        if self.power < 3:
            raise ValidationError("power >= 3 is required for C^2 positions")


def make_initial_data(
    spec: InitialDataSpec, params: ModelParams, require_v1: bool = True
) -> tuple[Profile, Profile, Profile, Profile]:
    """The four eps-scaled data profiles (u0, u1, v0, v1).

    With require_v1 (the blow-up setting) a vanishing v-velocity amplitude
    is rejected; pass False for generic runs such as zero-data checks.
    """
    if not math.isclose(spec.R, params.R, rel_tol=1e-12):
        raise ValidationError(
            f"data support radius {spec.R} disagrees with params.R = {params.R}"
        )
    if require_v1 and spec.amp_v1 == 0:
        raise ValidationError("v1 must be nontrivial for blow-up experiments")
    amps = (spec.amp_u0, spec.amp_u1, spec.amp_v0, spec.amp_v1)
    return tuple(
        poly_bump(spec.R, amplitude=params.eps * a, power=spec.power) for a in amps
    )


@dataclass(frozen=True)
class NumericsConfig:
    """Grid, CFL, threshold, and scheme knobs for one run."""

    hx: float
    t_max: float
    cfl: float = 0.9
    threshold_factor: float = 1e6
    picard_iters: int = 2
    nonlinear: bool = True
    snapshot_count: int = 8
    chunk_steps: int = 512
    domain_pad: float = 1.0

    def __post_init__(self) -> None:
        if not self.hx > 0:
            raise GridConfigError(f"hx must be positive, got {self.hx}")
        if not (0 < self.cfl <= 0.9):
            raise GridConfigError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise GridConfigError(f"t_max must be positive and finite, got {self.t_max}")
        if self.threshold_factor <= 1:
            raise ValidationError("threshold_factor must exceed 1")
        if self.picard_iters < 1:
            raise ValidationError("picard_iters must be at least 1")
        if self.snapshot_count < 1:
            raise ValidationError("snapshot_count must be at least 1")
        if self.chunk_steps < 1:
            raise ValidationError("chunk_steps must be at least 1")
        if self.domain_pad <= 0:
            raise GridConfigError("domain_pad must be positive")


@dataclass
class GridState:
    """One time level: fields u, v and centered time derivatives on the grid."""

    t: float
    step: int
    x0: float
    hx: float
    u: np.ndarray
    v: np.ndarray
    dudt: np.ndarray
    dvdt: np.ndarray


@dataclass
class MonitorHistory:
    """Per-step maxima and L2 norms; row k belongs to time k*h_t.

    The derivative rows are the centered time derivatives one level behind
    the fields (the freshest centered value available at that step).
    """

    t: np.ndarray
    u_inf: np.ndarray
    v_inf: np.ndarray
    dudt_inf: np.ndarray
    dvdt_inf: np.ndarray
    u_l2: np.ndarray
    v_l2: np.ndarray
    initial_max: float

    def series(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("max|u|", self.u_inf),
            ("max|v|", self.v_inf),
            ("max|dudt|", self.dudt_inf),
            ("max|dvdt|", self.dvdt_inf),
        ]


@dataclass
class CharacteristicTrace:
    """u and v sampled along the characteristic line t - x = R."""

    R: float
    t: np.ndarray
    u_char: np.ndarray
    v_char: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.t - self.R

    def restricted(self, t_max: float) -> "CharacteristicTrace":
        """The sub-trace with t <= t_max (e.g. cut below blow-up)."""
        keep = self.t <= t_max
        return CharacteristicTrace(
            R=self.R, t=self.t[keep], u_char=self.u_char[keep], v_char=self.v_char[keep]
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "U_char", "V_char"])
            for ti, ui, vi in zip(self.t, self.u_char, self.v_char):
                w.writerow([repr(float(ti)), repr(float(ui)), repr(float(vi))])


@dataclass(frozen=True)
class BlowupPolicy:
    """Threshold policy: the base threshold is threshold_factor x the
    initial data maximum, and a detection is trusted only when the time at
    insensitivity_factor x that threshold agrees to insensitivity_rtol."""

    threshold_factor: float = 1e6
    insensitivity_factor: float = 10.0
    insensitivity_rtol: float = 0.02


@dataclass
class BlowupReport:
    blew_up: bool
    t_num: float | None
    trigger: str | None
    threshold: float
    threshold_factor: float
    t_num_high: float | None
    insensitive: bool | None
    resolution_limited: bool
    final_values: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "blew_up": self.blew_up,
            "t_num": self.t_num,
            "trigger": self.trigger,
            "threshold": self.threshold,
            "threshold_factor": self.threshold_factor,
            "t_num_high": self.t_num_high,
            "insensitive": self.insensitive,
            "resolution_limited": self.resolution_limited,
            "final_values": self.final_values,
        }


@dataclass
class Trajectory:
    params: ModelParams
    numerics: NumericsConfig
    xs: np.ndarray
    snapshots: list[GridState] = field(default_factory=list)
    final: GridState | None = None
    status: int = stepping.STATUS_OK
    steps: int = 0
    t_end: float = 0.0

    def to_csv(self, path, x_stride: int = 1) -> None:
        """Decimated snapshot table with columns t, x, u, v, dudt, dvdt."""
        states = list(self.snapshots)
        if self.final is not None:
            states.append(self.final)
        sel = slice(None, None, max(1, x_stride))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "u", "v", "dudt", "dvdt"])
            for st in states:
                for x, u, v, du, dv in zip(
                    self.xs[sel], st.u[sel], st.v[sel], st.dudt[sel], st.dvdt[sel]
                ):
                    w.writerow(
                        [
                            repr(float(st.t)),
                            repr(float(x)),
                            repr(float(u)),
                            repr(float(v)),
                            repr(float(du)),
                            repr(float(dv)),
                        ]
                    )


def _sup(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def _l2(arr: np.ndarray, hx: float) -> float:
    return math.sqrt(hx * float(np.dot(arr, arr)))


def _second_diff(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    out[1:-1] = arr[2:] - 2.0 * arr[1:-1] + arr[:-2]
    return out


def simulate(
    params: ModelParams, spec: InitialDataSpec, numerics: NumericsConfig
) -> tuple[Trajectory, CharacteristicTrace, BlowupReport]:
    """Run one initial-value problem to t_max or to a blow-up trigger.

    Returns the trajectory (decimated snapshots plus the final level with
    centered derivatives), the characteristic trace on t - x = R, and the
    blow-up report produced by detect_blowup under the default policy with
    the configured threshold factor.

    The first level is started by a second-order Taylor step from the
    exact data derivatives.  Early stops leave backward-difference
    derivatives in the final state; completed runs take one extra
    throwaway step so the final derivatives are centered.
    """
    if params.n != 1:
        raise ValidationError("the simulator is one-dimensional; n must be 1")
    profiles = make_initial_data(spec, params, require_v1=False)

    hx = numerics.hx
    ht = numerics.cfl * hx
    n_total = max(1, math.ceil(numerics.t_max / ht - 1e-12))
    ht = numerics.t_max / n_total
    while ht > numerics.cfl * hx * (1.0 + 1e-12):
        n_total += 1
        ht = numerics.t_max / n_total

    half = math.ceil((params.R + numerics.t_max + numerics.domain_pad) / hx)
    nx = 2 * half + 1
    xs = (np.arange(nx) - half) * hx
    xs_abs = np.abs(xs)
    x0 = float(xs[0])

    u0 = profiles[0](xs)
    du0 = profiles[1](xs)
    v0 = profiles[2](xs)
    dv0 = profiles[3](xs)

    initial_max = max(_sup(u0), _sup(du0), _sup(v0), _sup(dv0))
    threshold = numerics.threshold_factor * initial_max if initial_max > 0 else math.inf
    # run far enough past the base threshold that the 10x crossing is seen
    stop_value = 50.0 * threshold if math.isfinite(threshold) else math.inf

    # second-order Taylor start from the exact data derivatives
    if numerics.nonlinear:
        src_u = np.abs(dv0) ** params.p
        src_v = np.abs(du0) ** params.q
    else:
        src_u = 0.0
        src_v = 0.0
    acc_u = _second_diff(u0) / hx**2 - params.b * du0 - params.m2 * u0 + src_u
    acc_v = _second_diff(v0) / hx**2 + src_v
    u1 = u0 + ht * du0 + 0.5 * ht * ht * acc_u
    v1 = v0 + ht * dv0 + 0.5 * ht * ht * acc_v
    outside = xs_abs > params.R + ht + 2.0 * hx
    u1[outside] = 0.0
    v1[outside] = 0.0

    up, uc = u0.copy(), u1
    vp, vc = v0.copy(), v1
    du, dv = du0.copy(), dv0.copy()

    rows = n_total + 1
    mon = {
        name: np.zeros(rows)
        for name in ("u_inf", "v_inf", "dudt_inf", "dvdt_inf", "u_l2", "v_l2")
    }
    trace_u = np.full(rows, math.nan)
    trace_v = np.full(rows, math.nan)

    mon["u_inf"][0], mon["v_inf"][0] = _sup(u0), _sup(v0)
    mon["dudt_inf"][0], mon["dvdt_inf"][0] = _sup(du0), _sup(dv0)
    mon["u_l2"][0], mon["v_l2"][0] = _l2(u0, hx), _l2(v0, hx)
    mon["u_inf"][1], mon["v_inf"][1] = _sup(u1), _sup(v1)
    mon["dudt_inf"][1], mon["dvdt_inf"][1] = _sup(du0), _sup(dv0)
    mon["u_l2"][1], mon["v_l2"][1] = _l2(u1, hx), _l2(v1, hx)
    trace_u[0] = float(np.interp(-params.R, xs, u0))
    trace_v[0] = float(np.interp(-params.R, xs, v0))
    trace_u[1] = float(np.interp(ht - params.R, xs, u1))
    trace_v[1] = float(np.interp(ht - params.R, xs, v1))

    stride = max(1, n_total // numerics.snapshot_count)
    snap_levels = list(range(stride, n_total, stride))
    snapshots = [
        GridState(0.0, 0, x0, hx, u0.copy(), v0.copy(), du0.copy(), dv0.copy())
    ]

    status = stepping.STATUS_OK
    k = 1  # head level
    ptr = 0
    while k < n_total and status == stepping.STATUS_OK:
        while ptr < len(snap_levels) and snap_levels[ptr] < k:
            ptr += 1
        chunk = min(numerics.chunk_steps, n_total - k)
        if ptr < len(snap_levels):
            chunk = min(chunk, snap_levels[ptr] + 1 - k)
        done, status = stepping.run_steps(
            up,
            uc,
            vp,
            vc,
            du,
            dv,
            xs_abs,
            x0,
            hx,
            ht,
            params.b,
            params.m2,
            params.p,
            params.q,
            params.R,
            k,
            chunk,
            numerics.nonlinear,
            numerics.picard_iters,
            stop_value,
            params.R,
            mon["u_inf"][k + 1 : k + 1 + chunk],
            mon["v_inf"][k + 1 : k + 1 + chunk],
            mon["dudt_inf"][k + 1 : k + 1 + chunk],
            mon["dvdt_inf"][k + 1 : k + 1 + chunk],
            mon["u_l2"][k + 1 : k + 1 + chunk],
            mon["v_l2"][k + 1 : k + 1 + chunk],
            trace_u[k + 1 : k + 1 + chunk],
            trace_v[k + 1 : k + 1 + chunk],
        )
        k += done
        if ptr < len(snap_levels) and k - 1 == snap_levels[ptr]:
            snapshots.append(
                GridState(
                    (k - 1) * ht, k - 1, x0, hx, up.copy(), vp.copy(), du.copy(), dv.copy()
                )
            )
            ptr += 1

    t_end = k * ht
    if status == stepping.STATUS_OK and k == n_total:
        # one throwaway step to land centered derivatives on the last level
        scratch = [np.zeros(1) for _ in range(8)]
        stepping.run_steps(
            up, uc, vp, vc, du, dv, xs_abs, x0, hx, ht,
            params.b, params.m2, params.p, params.q, params.R,
            k, 1, numerics.nonlinear, numerics.picard_iters, math.inf, params.R,
            *scratch,
        )
        final = GridState(t_end, k, x0, hx, up.copy(), vp.copy(), du.copy(), dv.copy())
    else:
        final = GridState(
            t_end, k, x0, hx, uc.copy(), vc.copy(), (uc - up) / ht, (vc - vp) / ht
        )

    t_rows = np.arange(k + 1) * ht
    monitors = MonitorHistory(
        t=t_rows,
        u_inf=mon["u_inf"][: k + 1],
        v_inf=mon["v_inf"][: k + 1],
        dudt_inf=mon["dudt_inf"][: k + 1],
        dvdt_inf=mon["dvdt_inf"][: k + 1],
        u_l2=mon["u_l2"][: k + 1],
        v_l2=mon["v_l2"][: k + 1],
        initial_max=initial_max,
    )
    trace = CharacteristicTrace(
        R=params.R, t=t_rows, u_char=trace_u[: k + 1], v_char=trace_v[: k + 1]
    )
    report = detect_blowup(
        monitors, BlowupPolicy(threshold_factor=numerics.threshold_factor)
    )
    traj = Trajectory(
        params=params,
        numerics=numerics,
        xs=xs,
        snapshots=snapshots,
        final=final,
        status=status,
        steps=k,
        t_end=t_end,
    )
    return traj, trace, report


def _first_crossing(monitors: MonitorHistory, level: float) -> tuple[int, str] | None:
    best: tuple[int, str] | None = None
    for name, series in monitors.series():
        hits = np.flatnonzero(series >= level)
        if hits.size and (best is None or hits[0] < best[0]):
            best = (int(hits[0]), name)
    return best


def detect_blowup(monitors: MonitorHistory, policy: BlowupPolicy) -> BlowupReport:
    """Classify a monitor history against the threshold policy.

    Blow-up is declared at the first crossing of the base threshold, or at
    the first non-finite sample if that comes sooner (trigger
    "non-finite").  A threshold detection is cross-checked at
    insensitivity_factor x the threshold; if the two times differ by more
    than insensitivity_rtol, or the higher threshold was never reached,
    the run is flagged resolution-limited.
    """
    if monitors.t.size == 0:
        raise ValidationError("monitor history is empty")
    threshold = (
        policy.threshold_factor * monitors.initial_max
        if monitors.initial_max > 0
        else math.inf
    )
    finite = np.ones(monitors.t.size, dtype=bool)
    for _, series in monitors.series():
        finite &= np.isfinite(series)
    bad = np.flatnonzero(~finite)
    nonfinite_idx = int(bad[0]) if bad.size else None

    final_values = {name: float(series[-1]) for name, series in monitors.series()}
    base = _first_crossing(monitors, threshold)

    if nonfinite_idx is not None and (base is None or nonfinite_idx < base[0]):
        t_num = float(monitors.t[nonfinite_idx])
        return BlowupReport(
            blew_up=True,
            t_num=t_num,
            trigger="non-finite",
            threshold=threshold,
            threshold_factor=policy.threshold_factor,
            t_num_high=t_num,
            insensitive=None,
            resolution_limited=False,
            final_values=final_values,
        )
    if base is None:
        return BlowupReport(
            blew_up=False,
            t_num=None,
            trigger=None,
            threshold=threshold,
            threshold_factor=policy.threshold_factor,
            t_num_high=None,
            insensitive=None,
            resolution_limited=False,
            final_values=final_values,
        )
    idx, trigger = base
    t_num = float(monitors.t[idx])
    high = _first_crossing(monitors, policy.insensitivity_factor * threshold)
    if high is None:
        return BlowupReport(
            blew_up=True,
            t_num=t_num,
            trigger=trigger,
            threshold=threshold,
            threshold_factor=policy.threshold_factor,
            t_num_high=None,
            insensitive=None,
            resolution_limited=True,
            final_values=final_values,
        )
    t_high = float(monitors.t[high[0]])
    insensitive = (t_high - t_num) <= policy.insensitivity_rtol * t_num
    return BlowupReport(
        blew_up=True,
        t_num=t_num,
        trigger=trigger,
        threshold=threshold,
        threshold_factor=policy.threshold_factor,
        t_num_high=t_high,
        insensitive=insensitive,
        resolution_limited=not insensitive,
        final_values=final_values,
    )


@dataclass(frozen=True)
class FirstBoundReport:
    ok: bool
    bound: float
    tol: float
    worst_value: float
    worst_t: float
    n_samples: int


def first_lower_bound_check(
    trace: CharacteristicTrace,
    params: ModelParams,
    v1_data: Profile,
    tol: float = 0.05,
) -> FirstBoundReport:
    """Check v(t, t - R) >= (1 - tol) * (1/2) * integral(v1_data) on t >= 2R.

    v1_data is the eps-scaled velocity profile actually fed to the run, so
    the computed bound equals M eps with M = (1/2) * integral of the
    unscaled data.  Samples past a non-finite value (blow-up) are skipped.
    tol absorbs discretization error.
    """
    if not 0 <= tol < 1:
        raise ValidationError(f"tol must lie in [0, 1), got {tol}")
    zmask = trace.t >= 2.0 * params.R - 1e-12
    if not np.any(zmask):
        raise ValidationError("trace does not reach t >= 2R; run longer")
    bound = 0.5 * quad_gl(v1_data, v1_data.lo, v1_data.hi)
    vals = trace.v_char[zmask]
    ts = trace.t[zmask]
    keep = np.isfinite(vals)
    vals, ts = vals[keep], ts[keep]
    if vals.size == 0:
        raise ValidationError("no finite trace samples at t >= 2R")
    worst = int(np.argmin(vals))
    return FirstBoundReport(
        ok=bool(np.all(vals >= (1.0 - tol) * bound)),
        bound=bound,
        tol=tol,
        worst_value=float(vals[worst]),
        worst_t=float(ts[worst]),
        n_samples=int(vals.size),
    )
