"""Tests for the finite-difference simulator and blow-up detection.

Dual routes: the undamped component is checked against the d'Alembert
closed form (the data antiderivative is polynomial, so the exact solution
is available everywhere), and the damped component against the
quadrature-based representation-formula solver.  Detection logic is
exercised on synthetic monitor histories with hand-placed crossings.
"""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dkglab.errors import GridConfigError, ValidationError
from dkglab.kernels import LinearParams, quad_gl, solve_linear_ivp
from dkglab.simulate import (
    BlowupPolicy,
    CharacteristicTrace,
    InitialDataSpec,
    ModelParams,
    MonitorHistory,
    NumericsConfig,
    detect_blowup,
    first_lower_bound_check,
    make_initial_data,
    simulate,
)
from dkglab import stepping

from conftest import STANDARD


def _params(**overrides) -> ModelParams:
    kw = dict(STANDARD, eps=0.3)
    kw.update(overrides)
    return ModelParams(**kw)


def _free_wave_exact(x, t: float, amplitude: float):
    """d'Alembert solution of w_tt = w_xx, w(0) = 0, w_t(0) = bump.

    For the cubic bump amplitude * (1 - s^2)^3 on [-1, 1] the velocity
    antiderivative is polynomial, so the solution is
    (amplitude / 2) * (G(x + t) - G(x - t)) with G clamped outside the
    support.
    """

    def G(s):
        s = np.clip(s, -1.0, 1.0)
        return s - s**3 + 0.6 * s**5 - s**7 / 7.0

    return 0.5 * amplitude * (G(np.asarray(x) + t) - G(np.asarray(x) - t))


def _history(u_inf, t_step: float = 0.01, initial_max: float = 1.0) -> MonitorHistory:
    """A monitor history with the given max|u| row and quiet companions."""
    u = np.asarray(u_inf, dtype=float)
    quiet = np.full(u.size, 0.5)
    return MonitorHistory(
        t=np.arange(u.size) * t_step,
        u_inf=u,
        v_inf=quiet.copy(),
        dudt_inf=quiet.copy(),
        dvdt_inf=quiet.copy(),
        u_l2=quiet.copy(),
        v_l2=quiet.copy(),
        initial_max=initial_max,
    )


# ---------------------------------------------------------------------------
# validation


def test_model_params_validation():
    for bad in (
        dict(n=0),
        dict(n=2.5),
        dict(p=1.0),
        dict(q=0.5),
        dict(b=0.0),
        dict(m2=-1.0),
        dict(R=0.0),
        dict(eps=-0.1),
        dict(eps=math.nan),
    ):
        with pytest.raises(ValidationError):
            _params(**bad)
    # the degenerate zero-amplitude case is allowed
    assert _params(eps=0.0).eps == 0.0


def test_initial_data_validation():
    with pytest.raises(ValidationError):
        InitialDataSpec(R=1.0, power=2)
    with pytest.raises(ValidationError):
        InitialDataSpec(R=1.0, amp_v1=-1.0)
    with pytest.raises(ValidationError):
        InitialDataSpec(R=1.0, family="gaussian")
    with pytest.raises(ValidationError):
        InitialDataSpec(R=0.0)
    spec = InitialDataSpec(R=1.0)
    with pytest.raises(ValidationError):
        make_initial_data(spec, _params(R=2.0))
    with pytest.raises(ValidationError):
        make_initial_data(InitialDataSpec(R=1.0, amp_v1=0.0), _params())
    # generic runs may drop the nontrivial-velocity requirement
    profiles = make_initial_data(
        InitialDataSpec(R=1.0, amp_u0=1.0, amp_v1=0.0), _params(), require_v1=False
    )
    assert np.all(profiles[3](np.linspace(-1.0, 1.0, 9)) == 0.0)
    assert profiles[0](0.0) == pytest.approx(0.3)


def test_numerics_validation():
    with pytest.raises(GridConfigError):
        NumericsConfig(hx=0.0, t_max=1.0)
    with pytest.raises(GridConfigError):
        NumericsConfig(hx=0.1, t_max=1.0, cfl=0.95)
    with pytest.raises(GridConfigError):
        NumericsConfig(hx=0.1, t_max=math.inf)
    with pytest.raises(ValidationError):
        NumericsConfig(hx=0.1, t_max=1.0, threshold_factor=1.0)
    with pytest.raises(ValidationError):
        NumericsConfig(hx=0.1, t_max=1.0, picard_iters=0)


def test_simulate_rejects_higher_dimensions():
    spec = InitialDataSpec(R=1.0)
    numerics = NumericsConfig(hx=0.1, t_max=1.0)
    with pytest.raises(ValidationError):
        simulate(_params(n=3), spec, numerics)


# ---------------------------------------------------------------------------
# exact solutions


def test_zero_data_is_a_fixed_point():
    params = _params(eps=0.0)
    spec = InitialDataSpec(R=1.0)
    traj, trace, report = simulate(params, spec, NumericsConfig(hx=0.05, t_max=2.0))
    assert np.all(traj.final.u == 0.0)
    assert np.all(traj.final.v == 0.0)
    assert np.all(traj.final.dudt == 0.0)
    assert np.all(trace.v_char == 0.0)
    assert not report.blew_up
    assert report.threshold == math.inf
    assert report.final_values["max|u|"] == 0.0


def test_undamped_component_matches_dalembert():
    """With zero u-data and the nonlinearity off, v solves the free wave
    equation and must match the closed form on the whole grid."""
    params = _params(eps=0.7)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    numerics = NumericsConfig(hx=0.02, t_max=3.0, nonlinear=False)
    traj, trace, report = simulate(params, spec, numerics)

    exact = _free_wave_exact(traj.xs, traj.t_end, params.eps)
    assert np.max(np.abs(traj.final.v - exact)) <= 2e-4
    # u has zero data and no source, so it stays exactly zero
    assert np.all(traj.final.u == 0.0)
    assert report.final_values["max|u|"] == 0.0

    # the characteristic sample agrees at every recorded time
    char_exact = np.array(
        [_free_wave_exact(ti - params.R, ti, params.eps) for ti in trace.t]
    )
    assert np.max(np.abs(trace.v_char - char_exact)) <= 2e-4
    # far along the line the trace saturates at eps * 16/35
    tail = trace.v_char[trace.t >= 2.5]
    assert np.max(np.abs(tail - params.eps * 16.0 / 35.0)) <= 2e-4


def test_undamped_component_converges_at_second_order():
    params = _params(eps=0.7)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    errs = []
    for hx in (0.08, 0.04, 0.02):
        numerics = NumericsConfig(hx=hx, t_max=3.0, nonlinear=False)
        traj, _, _ = simulate(params, spec, numerics)
        exact = _free_wave_exact(traj.xs, traj.t_end, params.eps)
        errs.append(float(np.max(np.abs(traj.final.v - exact))))
    assert errs[0] > errs[1] > errs[2]
    order = 0.5 * math.log2(errs[0] / errs[2])
    assert 1.5 <= order <= 2.5


def test_damped_component_matches_representation_formula():
    """Linear run with zero v-data: u obeys the damped Klein-Gordon
    equation, for which the quadrature solver is an independent oracle."""
    params = _params(eps=1.0, b=1.0, m2=0.5)
    spec = InitialDataSpec(R=1.0, amp_u0=1.0, amp_u1=0.5, amp_v0=0.0, amp_v1=0.0)
    numerics = NumericsConfig(hx=0.05, t_max=2.0, nonlinear=False)
    traj, _, _ = simulate(params, spec, numerics)

    f, g, _, _ = make_initial_data(spec, params, require_v1=False)
    lin = LinearParams(b=params.b, m2=params.m2)
    for xq in (-1.5, -0.5, 0.0, 0.8, 2.2):
        exact = solve_linear_ivp(f, g, None, lin, traj.t_end, xq)
        approx = float(np.interp(xq, traj.xs, traj.final.u))
        assert approx == pytest.approx(exact, abs=2e-3)
    # v has zero data and no source here
    assert np.all(traj.final.v == 0.0)


# ---------------------------------------------------------------------------
# grid mechanics


def test_compact_support_masking_is_exact():
    params = _params(eps=0.5)
    spec = InitialDataSpec(R=1.0, amp_u0=1.0, amp_v1=1.0)
    numerics = NumericsConfig(hx=0.05, t_max=2.0)
    traj, _, _ = simulate(params, spec, numerics)
    outside = np.abs(traj.xs) > params.R + traj.t_end + 2.0 * numerics.hx
    assert np.any(outside)
    assert np.all(traj.final.u[outside] == 0.0)
    assert np.all(traj.final.v[outside] == 0.0)
    inside = np.abs(traj.xs) <= params.R + traj.t_end
    assert np.max(np.abs(traj.final.v[inside])) > 0.0


def test_time_step_divides_t_max():
    params = _params(eps=0.2)
    spec = InitialDataSpec(R=1.0)
    numerics = NumericsConfig(hx=0.03, t_max=1.7)
    traj, trace, report = simulate(params, spec, numerics)
    assert traj.status == stepping.STATUS_OK
    assert math.isclose(traj.t_end, numerics.t_max, rel_tol=1e-12)
    ht = traj.t_end / traj.steps
    assert ht <= numerics.cfl * numerics.hx * (1.0 + 1e-12)
    assert trace.t.size == traj.steps + 1
    assert math.isclose(trace.t[-1], traj.t_end, rel_tol=1e-12)


def test_snapshot_schedule():
    params = _params(eps=0.2)
    spec = InitialDataSpec(R=1.0)
    numerics = NumericsConfig(hx=0.05, t_max=2.0, snapshot_count=5)
    traj, _, _ = simulate(params, spec, numerics)
    assert 2 <= len(traj.snapshots) <= 7
    times = [s.t for s in traj.snapshots]
    assert times[0] == 0.0
    assert all(a < b for a, b in zip(times, times[1:]))
    ht = traj.t_end / traj.steps
    for s in traj.snapshots:
        assert math.isclose(s.t, s.step * ht, rel_tol=0, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# blow-up detection


def test_simulate_detects_blowup():
    params = _params(eps=2.0)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    numerics = NumericsConfig(hx=0.04, t_max=8.0)
    traj, trace, report = simulate(params, spec, numerics)
    assert report.blew_up
    assert report.insensitive
    assert not report.resolution_limited
    assert report.trigger in {"max|u|", "max|v|", "max|dudt|", "max|dvdt|"}
    assert report.threshold == pytest.approx(1e6 * 2.0)
    assert report.t_num is not None and report.t_num_high is not None
    assert report.t_num <= report.t_num_high
    assert traj.status == stepping.STATUS_THRESHOLD
    assert traj.t_end < numerics.t_max
    # characteristic samples stay finite up to the detection time
    kept = trace.restricted(report.t_num)
    assert np.all(np.isfinite(kept.v_char))


def test_detect_blowup_threshold_crossing():
    u = np.full(200, 1.0)
    u[100] = 1.1e6
    u[101:] = 2e7
    report = detect_blowup(_history(u), BlowupPolicy())
    assert report.blew_up
    assert report.trigger == "max|u|"
    assert report.t_num == pytest.approx(1.00)
    assert report.t_num_high == pytest.approx(1.01)
    assert report.insensitive
    assert not report.resolution_limited
    assert report.final_values["max|u|"] == 2e7


def test_detect_blowup_sensitivity_flag():
    u = np.full(200, 1.0)
    u[100:] = 1.1e6
    u[150:] = 2e7  # 10x crossing 50% later than the base crossing
    report = detect_blowup(_history(u), BlowupPolicy())
    assert report.blew_up
    assert report.insensitive is False
    assert report.resolution_limited


def test_detect_blowup_high_threshold_never_reached():
    u = np.full(200, 1.0)
    u[100:] = 2e6
    report = detect_blowup(_history(u), BlowupPolicy())
    assert report.blew_up
    assert report.t_num_high is None
    assert report.insensitive is None
    assert report.resolution_limited


def test_detect_blowup_nonfinite_wins_when_earlier():
    u = np.full(200, 1.0)
    u[50] = math.nan
    u[100:] = 2e7
    report = detect_blowup(_history(u), BlowupPolicy())
    assert report.blew_up
    assert report.trigger == "non-finite"
    assert report.t_num == pytest.approx(0.50)
    assert not report.resolution_limited


def test_detect_blowup_no_crossing():
    report = detect_blowup(_history(np.full(50, 1.0)), BlowupPolicy())
    assert not report.blew_up
    assert report.t_num is None
    assert report.trigger is None


def test_detect_blowup_zero_data_threshold_is_infinite():
    report = detect_blowup(_history(np.zeros(50), initial_max=0.0), BlowupPolicy())
    assert report.threshold == math.inf
    assert not report.blew_up


def test_detect_blowup_empty_history():
    with pytest.raises(ValidationError):
        detect_blowup(_history(np.zeros(0)), BlowupPolicy())


@settings(max_examples=30, deadline=None)
@given(
    e1=st.floats(min_value=1.0, max_value=12.0),
    e2=st.floats(min_value=1.0, max_value=12.0),
)
def test_detection_time_monotone_in_threshold(e1, e2):
    """On a growing history the detection time is nondecreasing in the
    threshold factor."""
    u = np.exp(0.1 * np.arange(400))
    history = _history(u)
    lo, hi = sorted((10.0**e1, 10.0**e2))
    r_lo = detect_blowup(history, BlowupPolicy(threshold_factor=lo))
    r_hi = detect_blowup(history, BlowupPolicy(threshold_factor=hi))
    assert r_lo.blew_up and r_hi.blew_up
    assert r_lo.t_num <= r_hi.t_num


# ---------------------------------------------------------------------------
# characteristic trace and first lower bound


def test_trace_z_and_restriction():
    t = np.linspace(0.0, 5.0, 11)
    trace = CharacteristicTrace(R=1.0, t=t, u_char=t * 0.1, v_char=t * 0.2)
    assert np.allclose(trace.z, t - 1.0)
    cut = trace.restricted(2.5)
    assert cut.t.max() <= 2.5
    assert cut.t.size == 6
    assert np.allclose(cut.v_char, cut.t * 0.2)


def test_first_lower_bound_on_short_run():
    params = _params(eps=0.3)
    spec = InitialDataSpec(R=1.0, amp_v1=1.0)
    numerics = NumericsConfig(hx=0.04, t_max=6.0)
    _, trace, _ = simulate(params, spec, numerics)
    v1 = make_initial_data(spec, params)[3]
    report = first_lower_bound_check(trace, params, v1)
    assert report.ok
    assert report.bound == pytest.approx(params.eps * 16.0 / 35.0, rel=1e-12)
    assert report.worst_value >= 0.95 * report.bound
    assert report.worst_t >= 2.0 * params.R
    assert report.n_samples > 100

    with pytest.raises(ValidationError):
        first_lower_bound_check(trace, params, v1, tol=1.0)
    with pytest.raises(ValidationError):
        first_lower_bound_check(trace.restricted(1.0), params, v1)


def test_first_lower_bound_uses_scaled_data():
    # the bound is half the integral of the supplied velocity profile
    params = _params(eps=0.3)
    v1 = make_initial_data(InitialDataSpec(R=1.0, amp_v1=1.0), params)[3]
    assert quad_gl(v1, v1.lo, v1.hi) == pytest.approx(
        params.eps * 32.0 / 35.0, rel=1e-12
    )


# ---------------------------------------------------------------------------
# serialization


def test_trace_csv_roundtrip(tmp_path):
    t = np.array([0.0, 0.1, 0.2])
    trace = CharacteristicTrace(
        R=1.0, t=t, u_char=np.array([0.0, 1.0 / 3.0, 0.3]),
        v_char=np.array([0.5, math.pi, 0.0]),
    )
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "U_char", "V_char"]
    assert len(rows) == 4
    for k, row in enumerate(rows[1:]):
        assert float(row[0]) == t[k]
        assert float(row[1]) == trace.u_char[k]
        assert float(row[2]) == trace.v_char[k]


def test_trajectory_csv(tmp_path):
    params = _params(eps=0.2)
    spec = InitialDataSpec(R=1.0)
    numerics = NumericsConfig(hx=0.1, t_max=1.0, snapshot_count=2)
    traj, _, _ = simulate(params, spec, numerics)
    path = tmp_path / "traj.csv"
    traj.to_csv(path, x_stride=10)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "u", "v", "dudt", "dvdt"]
    n_x = traj.xs[::10].size
    n_states = len(traj.snapshots) + 1
    assert len(rows) == 1 + n_x * n_states
    assert float(rows[1][0]) == 0.0
    assert float(rows[-1][0]) == pytest.approx(traj.t_end, rel=1e-12)


# ---------------------------------------------------------------------------
# backends


def test_backends_agree_bitwise():
    """The compiled stepper and the pure-numpy fallback must produce
    identical monitors, traces, and fields on the same inputs."""
    from dkglab import _stepper_py

    try:
        from dkglab import _stepper
    except ImportError:
        pytest.skip("compiled stepper not built")

    hx = 0.05
    ht = 0.9 * hx
    half = 120
    xs = (np.arange(2 * half + 1) - half) * hx
    xs_abs = np.abs(xs)
    params = _params(eps=0.5)
    spec = InitialDataSpec(R=1.0, amp_u0=1.0, amp_u1=0.5, amp_v0=0.25, amp_v1=1.0)
    u0, du0, v0, dv0 = (prof(xs) for prof in make_initial_data(spec, params))

    n_steps = 80
    results = []
    for impl in (_stepper, _stepper_py):
        up, uc = u0.copy(), u0 + ht * du0
        vp, vc = v0.copy(), v0 + ht * dv0
        du, dv = du0.copy(), dv0.copy()
        mons = [np.zeros(n_steps) for _ in range(6)]
        tr_u = np.full(n_steps, math.nan)
        tr_v = np.full(n_steps, math.nan)
        done, status = impl.run_steps(
            up, uc, vp, vc, du, dv, xs_abs, float(xs[0]), hx, ht,
            params.b, params.m2, params.p, params.q, params.R,
            1, n_steps, True, 2, math.inf, params.R,
            *mons, tr_u, tr_v,
        )
        results.append((done, status, up, uc, vp, vc, du, dv, mons, tr_u, tr_v))

    (d1, s1, *arr1), (d2, s2, *arr2) = results
    assert (d1, s1) == (d2, s2) == (n_steps, stepping.STATUS_OK)
    for a, b in zip(arr1[:6], arr2[:6]):
        np.testing.assert_array_equal(a, b)
    # sup-norm monitors and traces are bitwise equal; the L2 rows may
    # differ by an ulp because np.dot sums pairwise while the compiled
    # loop accumulates sequentially
    for a, b in zip(arr1[6][:4], arr2[6][:4]):
        np.testing.assert_array_equal(a, b)
    for a, b in zip(arr1[6][4:], arr2[6][4:]):
        np.testing.assert_allclose(a, b, rtol=5e-15, atol=0.0)
    np.testing.assert_array_equal(arr1[7], arr2[7])
    np.testing.assert_array_equal(arr1[8], arr2[8])


def test_backend_label_is_consistent():
    assert stepping.BACKEND in {"compiled", "python"}
    if stepping.BACKEND == "compiled":
        from dkglab import _stepper

        assert stepping.run_steps is _stepper.run_steps
