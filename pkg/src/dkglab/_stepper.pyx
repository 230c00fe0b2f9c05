# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled time stepper: the hot leapfrog core in typed C loops.

Must stay semantically identical to ``_stepper_py.run_steps``; the test
suite cross-checks both backends on the same inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, pow, sqrt

cnp.import_array()

cdef enum:
    _OK = 0
    _THRESHOLD = 1
    _NONFINITE = 2

STATUS_OK = _OK
STATUS_THRESHOLD = _THRESHOLD
STATUS_NONFINITE = _NONFINITE


cdef inline double _interp(double[::1] arr, double x0, double hx, double xq) nogil:
    cdef Py_ssize_t nx = arr.shape[0]
    cdef double s = (xq - x0) / hx
    cdef Py_ssize_t j
    cdef double w
    if s < 0.0 or s > nx - 1:
        return <double> 0.0 / 0.0  # NaN
    j = <Py_ssize_t> s
    if j >= nx - 1:
        return arr[nx - 1]
    w = s - j
    return (1.0 - w) * arr[j] + w * arr[j + 1]


def run_steps(
    double[::1] up,
    double[::1] uc,
    double[::1] vp,
    double[::1] vc,
    double[::1] du,
    double[::1] dv,
    double[::1] xs_abs,
    double x0,
    double hx,
    double ht,
    double b,
    double m2,
    double p,
    double q,
    double mask_R,
    long k_start,
    long n_steps,
    bint nonlinear,
    long picard_iters,
    double stop_value,
    double trace_R,
    double[::1] mon_uinf,
    double[::1] mon_vinf,
    double[::1] mon_duinf,
    double[::1] mon_dvinf,
    double[::1] mon_ul2,
    double[::1] mon_vl2,
    double[::1] trace_u,
    double[::1] trace_v,
):
    """See ``_stepper_py.run_steps`` for the full contract."""
    cdef Py_ssize_t nx = uc.shape[0]
    cdef double ht2 = ht * ht
    cdef double r2 = ht2 / (hx * hx)
    cdef double damp = 0.5 * b * ht
    cdef double denom = 1.0 + damp
    cdef double two_ht = 2.0 * ht

    scratch = np.empty((6, nx), dtype=np.float64)
    cdef double[::1] un = scratch[0]
    cdef double[::1] vn = scratch[1]
    cdef double[::1] lap_u = scratch[2]
    cdef double[::1] lap_v = scratch[3]
    cdef double[::1] dtu = scratch[4]
    cdef double[::1] dtv = scratch[5]
    lap_u[0] = lap_u[nx - 1] = 0.0
    lap_v[0] = lap_v[nx - 1] = 0.0

    cdef long s, k_new, it
    cdef Py_ssize_t i
    cdef double t_new, bound, su, sv
    cdef double u_inf, v_inf, du_inf, dv_inf, u_l2, v_l2, a
    cdef bint finite_ok
    cdef int status = _OK
    cdef long steps_done = 0

    with nogil:
        for s in range(n_steps):
            k_new = k_start + s + 1
            t_new = k_new * ht

            for i in range(1, nx - 1):
                lap_u[i] = uc[i + 1] - 2.0 * uc[i] + uc[i - 1]
                lap_v[i] = vc[i + 1] - 2.0 * vc[i] + vc[i - 1]

            for i in range(nx):
                dtu[i] = (uc[i] - up[i]) / ht
                dtv[i] = (vc[i] - vp[i]) / ht

            for it in range(picard_iters):
                for i in range(nx):
                    if nonlinear:
                        su = pow(fabs(dtv[i]), p)
                        sv = pow(fabs(dtu[i]), q)
                    else:
                        su = 0.0
                        sv = 0.0
                    un[i] = (
                        2.0 * uc[i]
                        - up[i]
                        + damp * up[i]
                        + r2 * lap_u[i]
                        + ht2 * (su - m2 * uc[i])
                    ) / denom
                    vn[i] = 2.0 * vc[i] - vp[i] + r2 * lap_v[i] + ht2 * sv
                for i in range(nx):
                    dtu[i] = (un[i] - up[i]) / two_ht
                    dtv[i] = (vn[i] - vp[i]) / two_ht

            bound = mask_R + t_new + 2.0 * hx
            for i in range(nx):
                if xs_abs[i] > bound:
                    un[i] = 0.0
                    vn[i] = 0.0
            un[0] = un[nx - 1] = 0.0
            vn[0] = vn[nx - 1] = 0.0

            u_inf = 0.0
            v_inf = 0.0
            du_inf = 0.0
            dv_inf = 0.0
            u_l2 = 0.0
            v_l2 = 0.0
            finite_ok = True
            for i in range(nx):
                du[i] = (un[i] - up[i]) / two_ht
                dv[i] = (vn[i] - vp[i]) / two_ht
                a = fabs(un[i])
                if a > u_inf:
                    u_inf = a
                a = fabs(vn[i])
                if a > v_inf:
                    v_inf = a
                a = fabs(du[i])
                if a > du_inf:
                    du_inf = a
                a = fabs(dv[i])
                if a > dv_inf:
                    dv_inf = a
                u_l2 += un[i] * un[i]
                v_l2 += vn[i] * vn[i]
                if not (
                    isfinite(un[i])
                    and isfinite(vn[i])
                    and isfinite(du[i])
                    and isfinite(dv[i])
                ):
                    finite_ok = False

            mon_uinf[s] = u_inf
            mon_vinf[s] = v_inf
            mon_duinf[s] = du_inf
            mon_dvinf[s] = dv_inf
            mon_ul2[s] = sqrt(hx * u_l2)
            mon_vl2[s] = sqrt(hx * v_l2)
            trace_u[s] = _interp(un, x0, hx, t_new - trace_R)
            trace_v[s] = _interp(vn, x0, hx, t_new - trace_R)

            for i in range(nx):
                up[i] = uc[i]
                uc[i] = un[i]
                vp[i] = vc[i]
                vc[i] = vn[i]
            steps_done = s + 1

            if not finite_ok:
                status = _NONFINITE
                break
            if (
                u_inf >= stop_value
                or v_inf >= stop_value
                or du_inf >= stop_value
                or dv_inf >= stop_value
            ):
                status = _THRESHOLD
                break

    return steps_done, status
