"""Experiment harness: eps-sweeps, lifespan-scaling fits, iteration-frame
verification against simulation, and reproducible report emission.

The sweep runs one simulation per amplitude on a geometric eps ladder,
records numerical blow-up times with their threshold-sensitivity flags,
compares them against the constructive lifespan upper bound, and fits the
scaling shape (power law in the subcritical regime, exponential in the
critical one).  The scaling experiment tests consistency with an upper
bound, not sharpness: the fitted exponent is reported for information.

Config files are flat key = value text (see SWEEP_CONFIG_KEYS; '#' starts
a comment).  Reports are sweep.csv, report.json (stable key order), and a
self-contained matplotlib script plot_sweep.py.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import stepping
from .errors import ValidationError
from .kernels import poly_bump, quad_gl
from .sequences import (
    CriticalSequences,
    FrameConstants,
    SubcriticalSequences,
    critical_sequences,
    default_frame_constants,
    lifespan_bound,
    log_lower_bound_envelope,
    subcritical_sequences,
    theta,
)
from .simulate import (
    CharacteristicTrace,
    InitialDataSpec,
    ModelParams,
    NumericsConfig,
    simulate,
)

__all__ = [
    "SweepConfig",
    "SweepRecord",
    "FitResult",
    "FrameReport",
    "parse_sweep_config",
    "run_sweep",
    "fit_power_law",
    "fit_critical_law",
    "verify_iteration_frame",
    "bound_consistency_check",
    "emit_report",
]

# time-unit cap below which the lifespan bound is considered reachable at
# desk scale; the t_max invariant is only enforced against bounds under it
RUNTIME_CAP = 1.0e4


@dataclass(frozen=True)
class SweepConfig:
    """One eps-sweep: base model parameters, a geometric amplitude ladder
    eps_start * eps_ratio^i (i < eps_count), shared numerics, and output
    location.  The seed is recorded for reproducibility; the current
    experiments draw no random numbers."""

    p: float
    q: float
    b: float
    R: float
    hx: float
    t_max: float
    eps_start: float
    n: int = 1
    m2: float = 0.0
    cfl: float = 0.9
    eps_ratio: float = 2.0**-0.5
    eps_count: int = 6
    threshold_factor: float = 1e6
    picard_iters: int = 2
    power: int = 3
    amp_u0: float = 0.0
    amp_u1: float = 0.0
    amp_v0: float = 0.0
    amp_v1: float = 1.0
    seed: int = 0
    outdir: str | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.eps_ratio < 1.0):
            raise ValidationError(f"eps_ratio must lie in (0, 1), got {self.eps_ratio}")
        if self.eps_count < 4:
            raise ValidationError(f"eps_count must be at least 4, got {self.eps_count}")
        if self.eps_start <= 0:
            raise ValidationError(f"eps_start must be positive, got {self.eps_start}")
        if self.amp_v1 <= 0:
            raise ValidationError("amp_v1 must be positive: the theory needs nontrivial v1")

    def eps_ladder(self) -> list[float]:
        return [self.eps_start * self.eps_ratio**i for i in range(self.eps_count)]

    def model_params(self, eps: float) -> ModelParams:
        return ModelParams(
            n=self.n, p=self.p, q=self.q, b=self.b, m2=self.m2, R=self.R, eps=eps
        )

    def data_spec(self) -> InitialDataSpec:
        return InitialDataSpec(
            R=self.R,
            amp_u0=self.amp_u0,
            amp_u1=self.amp_u1,
            amp_v0=self.amp_v0,
            amp_v1=self.amp_v1,
            power=self.power,
        )

    def numerics(self) -> NumericsConfig:
        return NumericsConfig(
            hx=self.hx,
            t_max=self.t_max,
            cfl=self.cfl,
            threshold_factor=self.threshold_factor,
            picard_iters=self.picard_iters,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "b": self.b,
            "m2": self.m2,
            "R": self.R,
            "hx": self.hx,
            "cfl": self.cfl,
            "t_max": self.t_max,
            "eps_start": self.eps_start,
            "eps_ratio": self.eps_ratio,
            "eps_count": self.eps_count,
            "threshold_factor": self.threshold_factor,
            "picard_iters": self.picard_iters,
            "power": self.power,
            "amp_u0": self.amp_u0,
            "amp_u1": self.amp_u1,
            "amp_v0": self.amp_v0,
            "amp_v1": self.amp_v1,
            "seed": self.seed,
            "outdir": self.outdir,
        }


_INT_KEYS = {"n", "eps_count", "picard_iters", "power", "seed"}
_STR_KEYS = {"outdir"}
SWEEP_CONFIG_KEYS = (
    "p q b R hx t_max eps_start n m2 cfl eps_ratio eps_count threshold_factor "
    "picard_iters power amp_u0 amp_u1 amp_v0 amp_v1 seed outdir"
).split()


def parse_sweep_config(path) -> SweepConfig:
    """Read a flat key = value config file ('#' comments, blank lines ok)."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in SWEEP_CONFIG_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _STR_KEYS:
                values[key] = val
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = float(val)
    missing = [k for k in ("p", "q", "b", "R", "hx", "t_max", "eps_start") if k not in values]
    if missing:
        raise ValidationError(f"{path}: missing required keys: {', '.join(missing)}")
    return SweepConfig(**values)


@dataclass
class SweepRecord:
    eps: float
    t_num: float | None
    blew_up: bool
    bound: float
    bound_warning: bool
    insensitive: bool | None
    resolution_limited: bool
    hx: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "t_num": self.t_num,
            "blew_up": self.blew_up,
            "bound": self.bound,
            "bound_warning": self.bound_warning,
            "insensitive": self.insensitive,
            "resolution_limited": self.resolution_limited,
            "hx": self.hx,
            "error": self.error,
        }


def _sequences_for(config: SweepConfig):
    """Sequence object (subcritical or critical) for the sweep's base setup."""
    params = config.model_params(config.eps_start)
    idx = theta(params.n, params.p, params.q)
    if not idx.in_scope:
        raise ValidationError(
            f"theta = {idx.value} < 0: no lifespan bound applies to this sweep"
        )
    frame = default_frame_constants(params)
    v1 = poly_bump(config.R, amplitude=config.amp_v1, power=config.power)
    m_value = 0.5 * quad_gl(v1, v1.lo, v1.hi)
    if idx.classification == "critical":
        return critical_sequences(params, frame, m_value)
    return subcritical_sequences(params, frame, m_value)


def run_sweep(config: SweepConfig) -> list[SweepRecord]:
    """One simulation per ladder amplitude, largest eps first.

    Per-run failures are stored in the record's error field and never
    abort the sweep.  Runs are independent and deterministic; they execute
    sequentially here, which fixes the floating-point reduction order.
    """
    if config.n != 1:
        raise ValidationError("sweeps simulate in one dimension; n must be 1")
    seqs = _sequences_for(config)
    spec_data = config.data_spec()
    numerics = config.numerics()

    first_bound = lifespan_bound(config.eps_start, config.model_params(config.eps_start), seqs)
    if first_bound.bound <= RUNTIME_CAP and config.t_max < first_bound.bound:
        raise ValidationError(
            f"t_max = {config.t_max} cannot reach the lifespan bound "
            f"{first_bound.bound} at eps_start; raise t_max"
        )

    records: list[SweepRecord] = []
    for eps in config.eps_ladder():
        params = config.model_params(eps)
        lsb = lifespan_bound(eps, params, seqs)
        try:
            _, _, report = simulate(params, spec_data, numerics)
            records.append(
                SweepRecord(
                    eps=eps,
                    t_num=report.t_num,
                    blew_up=report.blew_up,
                    bound=lsb.bound,
                    bound_warning=lsb.warning,
                    insensitive=report.insensitive,
                    resolution_limited=report.resolution_limited,
                    hx=config.hx,
                )
            )
        except Exception as exc:  # noqa: BLE001 - recorded, never aborts the sweep
            records.append(
                SweepRecord(
                    eps=eps,
                    t_num=None,
                    blew_up=False,
                    bound=lsb.bound,
                    bound_warning=lsb.warning,
                    insensitive=None,
                    resolution_limited=False,
                    hx=config.hx,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of the lifespan scaling in transformed coordinates.

    kind "power": log T = intercept + coef * log eps (coef is the slope s).
    kind "critical": log T = intercept + coef * eps^{-(pq-1)}.
    """

    kind: str
    intercept: float
    coef: float
    rms: float
    eps_range: tuple[float, float]
    n_points: int


def _usable(records: list[SweepRecord]) -> list[SweepRecord]:
    return [
        r
        for r in records
        if r.blew_up and r.t_num is not None and math.isfinite(r.t_num) and r.t_num > 0
    ]


def _least_squares(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    A = np.column_stack([np.ones_like(x), x])
    coeffs, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coeffs
    return float(coeffs[0]), float(coeffs[1]), float(np.sqrt(np.mean(resid**2)))


def fit_power_law(records: list[SweepRecord]) -> FitResult:
    """Fit log T = a + s log eps over the blown-up records."""
    usable = _usable(records)
    if len(usable) < 4:
        raise ValidationError(f"power-law fit needs >= 4 blown-up records, got {len(usable)}")
    x = np.log([r.eps for r in usable])
    y = np.log([r.t_num for r in usable])
    a, s, rms = _least_squares(x, y)
    eps_vals = [r.eps for r in usable]
    return FitResult(
        kind="power",
        intercept=a,
        coef=s,
        rms=rms,
        eps_range=(min(eps_vals), max(eps_vals)),
        n_points=len(usable),
    )


def fit_critical_law(records: list[SweepRecord], pq: float) -> FitResult:
    """Fit log T = a + c * eps^{-(pq-1)} over the blown-up records."""
    usable = _usable(records)
    if len(usable) < 4:
        raise ValidationError(f"critical fit needs >= 4 blown-up records, got {len(usable)}")
    x = np.array([r.eps ** -(pq - 1.0) for r in usable])
    y = np.log([r.t_num for r in usable])
    a, c, rms = _least_squares(x, y)
    eps_vals = [r.eps for r in usable]
    return FitResult(
        kind="critical",
        intercept=a,
        coef=c,
        rms=rms,
        eps_range=(min(eps_vals), max(eps_vals)),
        n_points=len(usable),
    )


@dataclass
class FrameViolation:
    which: str
    z: float
    lhs: float
    rhs: float


@dataclass
class FrameReport:
    ok: bool
    ok_u: bool
    ok_v: bool
    ok_envelope: bool
    n_samples: int
    allowance: float
    worst_u: FrameViolation | None
    worst_v: FrameViolation | None
    violations: list[FrameViolation] = field(default_factory=list)

    def to_dict(self) -> dict:
        def _v(v):
            return None if v is None else {"which": v.which, "z": v.z, "lhs": v.lhs, "rhs": v.rhs}

        return {
            "ok": self.ok,
            "ok_u": self.ok_u,
            "ok_v": self.ok_v,
            "ok_envelope": self.ok_envelope,
            "n_samples": self.n_samples,
            "allowance": self.allowance,
            "worst_u": _v(self.worst_u),
            "worst_v": _v(self.worst_v),
            "n_violations": len(self.violations),
        }


def verify_iteration_frame(
    trace: CharacteristicTrace,
    params: ModelParams,
    frame: FrameConstants,
    seqs: SubcriticalSequences | CriticalSequences | None = None,
    allowance: float = 0.05,
    envelope_j: int = 5,
) -> FrameReport:
    """Check both integral inequalities of the iteration frame on a trace.

    For every sampled z in [R, z_max] the right-hand sides

      rhs_u(z) = C * int_R^z exp(-(b/2)(z-y)) (R+y)^{-(n-1)(p-1)/2} |V(y)|^p dy
      rhs_v(z) = K * int_R^z             (R+y)^{-(n-1)(q-1)/2} |U(y)|^q dy

    are computed from the trace by cumulative trapezoid quadrature, and
    U(z) >= (1 - allowance) rhs_u(z), V(z) >= (1 - allowance) rhs_v(z) are
    asserted.  When a sequence object is supplied, envelope domination
    V(z) >= (1 - allowance) * lower_bound_envelope(z, j) is checked for
    j = 0..envelope_j on each slice domain.  Non-finite samples (at or
    past blow-up) are cut off.
    """
    z_all = trace.z
    u_all = trace.u_char
    v_all = trace.v_char
    finite = np.isfinite(u_all) & np.isfinite(v_all)
    cut = np.argmax(~finite) if np.any(~finite) else z_all.size
    keep = (z_all >= params.R - 1e-12) & (np.arange(z_all.size) < cut)
    z = z_all[keep]
    u = u_all[keep]
    v = v_all[keep]
    if z.size < 8:
        raise ValidationError("trace has too few samples with z >= R for quadrature")

    wp = (params.R + z) ** (-0.5 * (params.n - 1) * (params.p - 1.0))
    wq = (params.R + z) ** (-0.5 * (params.n - 1) * (params.q - 1.0))
    # factored convolution: exp(-(b/2) z) * cumtrapz(exp((b/2) y) w |v|^p)
    gu = np.exp(0.5 * params.b * z) * wp * np.abs(v) ** params.p
    gv = wq * np.abs(u) ** params.q
    dz = np.diff(z)
    cum_u = np.concatenate([[0.0], np.cumsum(0.5 * (gu[1:] + gu[:-1]) * dz)])
    cum_v = np.concatenate([[0.0], np.cumsum(0.5 * (gv[1:] + gv[:-1]) * dz)])
    rhs_u = frame.C * np.exp(-0.5 * params.b * z) * cum_u
    rhs_v = frame.K * cum_v

    scale = 1.0 - allowance
    violations: list[FrameViolation] = []
    margin_u = u - scale * rhs_u
    margin_v = v - scale * rhs_v
    ok_u = bool(np.all(margin_u >= 0))
    ok_v = bool(np.all(margin_v >= 0))
    iu = int(np.argmin(margin_u))
    iv = int(np.argmin(margin_v))
    worst_u = FrameViolation("frame-u", float(z[iu]), float(u[iu]), float(rhs_u[iu]))
    worst_v = FrameViolation("frame-v", float(z[iv]), float(v[iv]), float(rhs_v[iv]))
    if not ok_u:
        violations.extend(
            FrameViolation("frame-u", float(z[i]), float(u[i]), float(rhs_u[i]))
            for i in np.flatnonzero(margin_u < 0)[:20]
        )
    if not ok_v:
        violations.extend(
            FrameViolation("frame-v", float(z[i]), float(v[i]), float(rhs_v[i]))
            for i in np.flatnonzero(margin_v < 0)[:20]
        )

    ok_env = True
    if seqs is not None:
        for j in range(envelope_j + 1):
            if isinstance(seqs, SubcriticalSequences):
                zmin = seqs.L(j) * params.R
            else:
                zmin = seqs.Lambda(j) * params.R
            sel = z >= zmin * (1.0 + 1e-12)
            for zi, vi in zip(z[sel], v[sel]):
                env = math.exp(
                    min(log_lower_bound_envelope(float(zi), j, seqs), 700.0)
                )
                if vi < scale * env:
                    ok_env = False
                    violations.append(FrameViolation(f"envelope-j{j}", float(zi), float(vi), env))
    return FrameReport(
        ok=ok_u and ok_v and ok_env,
        ok_u=ok_u,
        ok_v=ok_v,
        ok_envelope=ok_env,
        n_samples=int(z.size),
        allowance=allowance,
        worst_u=worst_u,
        worst_v=worst_v,
        violations=violations,
    )


def bound_consistency_check(records: list[SweepRecord], eps0: float) -> dict:
    """Theorem-consistency: no blown-up record with eps <= eps0 may exceed
    its lifespan bound; records above eps0 are compared informationally."""
    violations = []
    informational = []
    for r in records:
        if not (r.blew_up and r.t_num is not None):
            continue
        entry = {"eps": r.eps, "t_num": r.t_num, "bound": r.bound}
        if r.t_num > r.bound:
            (violations if r.eps <= eps0 else informational).append(entry)
    return {
        "eps0": eps0,
        "ok": not violations,
        "violations": violations,
        "informational_excesses": informational,
    }


_PLOT_TEMPLATE = '''"""Render the sweep scaling plot from sweep.csv (same directory)."""

import csv
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
eps, t_num = [], []
with open(os.path.join(here, "sweep.csv"), newline="") as fh:
    for row in csv.DictReader(fh):
        if row["blew_up"] == "true" and row["t_num"]:
            eps.append(float(row["eps"]))
            t_num.append(float(row["t_num"]))

if not eps:
    raise SystemExit("no blown-up records to plot")

fig, ax = plt.subplots(figsize=(6, 4.5))
ax.loglog(eps, t_num, "o", label="T_num")
xs = sorted(eps)
fit_a = {fit_intercept!r}
fit_s = {fit_coef!r}
ax.loglog(xs, [math.exp(fit_a) * x**fit_s for x in xs], "-",
          label=f"fit: slope {{fit_s:.3f}}")
ref_s = {ref_slope!r}
if ref_s is not None:
    anchor = math.exp(fit_a) * xs[0] ** fit_s
    ax.loglog(xs, [anchor * (x / xs[0]) ** ref_s for x in xs], "--",
              label=f"reference slope {{ref_s:.3f}}")
ax.set_xlabel("eps")
ax.set_ylabel("numerical blow-up time")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "sweep.png"), dpi=150)
print("wrote", os.path.join(here, "sweep.png"))
'''


def emit_report(
    records: list[SweepRecord],
    fits: dict[str, FitResult],
    checks: dict,
    config: SweepConfig,
    outdir: str | None = None,
) -> dict[str, str]:
    """Write sweep.csv, report.json, and plot_sweep.py into outdir.

    CSV uses '.' decimals, LF line endings, and repr-exact floats, so
    identical inputs reproduce the file byte for byte.  report.json is
    UTF-8 with sorted keys and round-trips the records exactly.
    """
    if not records:
        raise ValidationError("no records: nothing to report")
    outdir = outdir or config.outdir
    if not outdir:
        raise ValidationError("no output directory given (config.outdir or argument)")
    os.makedirs(outdir, exist_ok=True)

    def _cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    columns = [
        "eps",
        "t_num",
        "blew_up",
        "bound",
        "bound_warning",
        "insensitive",
        "resolution_limited",
        "hx",
        "error",
    ]
    csv_path = os.path.join(outdir, "sweep.csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in records:
        d = r.to_dict()
        writer.writerow([_cell(d[c]) for c in columns])
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())

    theta_val = theta(config.n, config.p, config.q).value
    ref_slope = -1.0 / theta_val if theta_val > 1e-14 else None
    report = {
        "config": config.to_dict(),
        "records": [r.to_dict() for r in records],
        "fits": {
            name: {
                "kind": f.kind,
                "intercept": f.intercept,
                "coef": f.coef,
                "rms": f.rms,
                "eps_range": list(f.eps_range),
                "n_points": f.n_points,
            }
            for name, f in fits.items()
        },
        "checks": checks,
        "theta": theta_val,
        "reference_slope": ref_slope,
        "versions": {
            "package": _package_version(),
            "numpy": np.__version__,
            "python": sys.version.split()[0],
            "backend": stepping.BACKEND,
        },
    }
    json_path = os.path.join(outdir, "report.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")

    power = fits.get("power")
    plot_path = os.path.join(outdir, "plot_sweep.py")
    with open(plot_path, "w", encoding="utf-8") as fh:
        fh.write(
            _PLOT_TEMPLATE.format(
                fit_intercept=power.intercept if power else 0.0,
                fit_coef=power.coef if power else 0.0,
                ref_slope=ref_slope,
            )
        )
    return {"sweep_csv": csv_path, "report_json": json_path, "plot_script": plot_path}


def _package_version() -> str:
    from . import __version__

    return __version__
