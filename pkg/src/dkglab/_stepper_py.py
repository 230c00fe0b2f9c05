"""Pure-numpy time stepper: the fallback backend for the leapfrog core.

Semantics must match ``_stepper.pyx`` exactly; the test suite runs both
backends on identical inputs and asserts bitwise-close agreement.
"""

from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_THRESHOLD = 1
STATUS_NONFINITE = 2


def _interp(arr: np.ndarray, x0: float, hx: float, xq: float) -> float:
    nx = arr.shape[0]
    s = (xq - x0) / hx
    if s < 0.0 or s > nx - 1:
        return math.nan
    j = int(s)
    if j >= nx - 1:
        return float(arr[nx - 1])
    w = s - j
    return float((1.0 - w) * arr[j] + w * arr[j + 1])


def run_steps(
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
    b,
    m2,
    p,
    q,
    mask_R,
    k_start,
    n_steps,
    nonlinear,
    picard_iters,
    stop_value,
    trace_R,
    mon_uinf,
    mon_vinf,
    mon_duinf,
    mon_dvinf,
    mon_ul2,
    mon_vl2,
    trace_u,
    trace_v,
):
    """Advance the coupled leapfrog scheme by up to n_steps levels.

    State arrays (modified in place): up/vp hold level k_start-1, uc/vc
    level k_start; du/dv hold the centered time derivative at level
    k_start-1.  On return they hold the last two computed levels and the
    centered derivative one level behind the head.

    Per new level s (global level k_start+1+s) this fills monitor slot s
    with the sup and L2 norms of the new level and of the lagged centered
    derivatives, and the trace slot s with (u, v) interpolated at
    x = t - trace_R (NaN when outside the grid).

    Returns (steps_done, status) with status 0 = completed, 1 = a monitor
    reached stop_value, 2 = non-finite values appeared.  The offending
    level is included in the state and monitors either way.
    """
    up = np.asarray(up)
    uc = np.asarray(uc)
    vp = np.asarray(vp)
    vc = np.asarray(vc)
    du = np.asarray(du)
    dv = np.asarray(dv)
    xs_abs = np.asarray(xs_abs)

    nx = uc.shape[0]
    ht2 = ht * ht
    r2 = ht2 / (hx * hx)
    damp = 0.5 * b * ht
    denom = 1.0 + damp

    un = np.empty(nx)
    vn = np.empty(nx)
    lap_u = np.zeros(nx)
    lap_v = np.zeros(nx)
    dtu = np.empty(nx)
    dtv = np.empty(nx)

    status = STATUS_OK
    steps_done = 0
    for s in range(n_steps):
        k_new = k_start + s + 1
        t_new = k_new * ht

        # spatial second difference of the current level (ends stay zero;
        # the solution is masked to zero there by finite propagation speed)
        lap_u[1:-1] = uc[2:] - 2.0 * uc[1:-1] + uc[:-2]
        lap_v[1:-1] = vc[2:] - 2.0 * vc[1:-1] + vc[:-2]

        # predictor: backward-difference velocities at the current level
        np.subtract(uc, up, out=dtu)
        dtu /= ht
        np.subtract(vc, vp, out=dtv)
        dtv /= ht

        for _ in range(picard_iters):
            if nonlinear:
                su = np.abs(dtv) ** p
                sv = np.abs(dtu) ** q
            else:
                su = 0.0
                sv = 0.0
            un[:] = (
                2.0 * uc
                - up
                + damp * up
                + r2 * lap_u
                + ht2 * (su - m2 * uc)
            )
            un /= denom
            vn[:] = 2.0 * vc - vp + r2 * lap_v + ht2 * sv
            # corrector: centered velocities through the predicted level
            np.subtract(un, up, out=dtu)
            dtu /= 2.0 * ht
            np.subtract(vn, vp, out=dtv)
            dtv /= 2.0 * ht

        # exact compact support: the light cone plus a two-cell margin
        bound = mask_R + t_new + 2.0 * hx
        outside = xs_abs > bound
        un[outside] = 0.0
        vn[outside] = 0.0
        un[0] = un[nx - 1] = 0.0
        vn[0] = vn[nx - 1] = 0.0

        # centered derivative at the previous level, after masking
        np.subtract(un, up, out=du)
        du /= 2.0 * ht
        np.subtract(vn, vp, out=dv)
        dv /= 2.0 * ht

        u_inf = float(np.max(np.abs(un)))
        v_inf = float(np.max(np.abs(vn)))
        du_inf = float(np.max(np.abs(du)))
        dv_inf = float(np.max(np.abs(dv)))
        mon_uinf[s] = u_inf
        mon_vinf[s] = v_inf
        mon_duinf[s] = du_inf
        mon_dvinf[s] = dv_inf
        mon_ul2[s] = math.sqrt(hx * float(np.dot(un, un)))
        mon_vl2[s] = math.sqrt(hx * float(np.dot(vn, vn)))
        trace_u[s] = _interp(un, x0, hx, t_new - trace_R)
        trace_v[s] = _interp(vn, x0, hx, t_new - trace_R)

        # rotate levels: (prev, cur) <- (cur, new)
        up[:] = uc
        uc[:] = un
        vp[:] = vc
        vc[:] = vn
        steps_done = s + 1

        if not (
            math.isfinite(u_inf)
            and math.isfinite(v_inf)
            and math.isfinite(du_inf)
            and math.isfinite(dv_inf)
        ):
            status = STATUS_NONFINITE
            break
        if max(u_inf, v_inf, du_inf, dv_inf) >= stop_value:
            status = STATUS_THRESHOLD
            break

    return steps_done, status
