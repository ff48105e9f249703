# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled clearing kernels; same contract as ``xhold._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef enum:
    C_SS = 3
    C_SD = 1
    C_DS = 2
    C_DD = 0

SS, SD, DS, DD = C_SS, C_SD, C_DS, C_DD


def picard_batch(assets, eq_hold, debt_hold, debt, double tol, long max_iter, x0=None):
    cdef const double[:, ::1] A = np.ascontiguousarray(assets, dtype=np.float64)
    cdef const double[:, ::1] ms = np.ascontiguousarray(eq_hold, dtype=np.float64)
    cdef const double[:, ::1] md = np.ascontiguousarray(debt_hold, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(debt, dtype=np.float64)
    cdef Py_ssize_t N = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    X_arr = np.zeros((N, 2 * n))
    if x0 is not None:
        X_arr[:] = np.broadcast_to(np.asarray(x0, dtype=np.float64), (N, 2 * n))
    iters_arr = np.zeros(N, dtype=np.int64)
    conv_arr = np.zeros(N, dtype=np.uint8)
    cdef double[:, ::1] X = X_arr
    cdef long long[::1] iters = iters_arr
    cdef unsigned char[::1] conv = conv_arr
    cdef double[::1] cur = np.empty(2 * n)
    cdef double[::1] nxt = np.empty(2 * n)
    cdef Py_ssize_t p, i, j
    cdef long k
    cdef double v, step, diff, out_s, out_r

    with nogil:
        for p in range(N):
            for i in range(2 * n):
                cur[i] = X[p, i]
            for k in range(1, max_iter + 1):
                step = 0.0
                for i in range(n):
                    v = A[p, i]
                    for j in range(n):
                        v += ms[i, j] * cur[j] + md[i, j] * cur[n + j]
                    out_s = v - d[i]
                    if out_s < 0.0:
                        out_s = 0.0
                    out_r = v if v < d[i] else d[i]
                    nxt[i] = out_s
                    nxt[n + i] = out_r
                    diff = fabs(out_s - cur[i])
                    if diff > step:
                        step = diff
                    diff = fabs(out_r - cur[n + i])
                    if diff > step:
                        step = diff
                for i in range(2 * n):
                    cur[i] = nxt[i]
                iters[p] = k
                if step <= tol:
                    conv[p] = 1
                    break
            for i in range(2 * n):
                X[p, i] = cur[i]
    return X_arr, iters_arr, conv_arr.astype(bool)


def closed_form2_batch(assets, double m12s, double m21s, double m12d, double m21d,
                       double d1, double d2):
    cdef const double[:, ::1] A = np.ascontiguousarray(assets, dtype=np.float64)
    cdef Py_ssize_t N = A.shape[0]
    X_arr = np.empty((N, 4))
    region_arr = np.empty(N, dtype=np.int8)
    cdef double[:, ::1] X = X_arr
    cdef signed char[::1] region = region_arr
    cdef double den_ss = 1.0 - m12s * m21s
    cdef double den_sd = 1.0 - m12d * m21s
    cdef double den_ds = 1.0 - m12s * m21d
    cdef double den_dd = 1.0 - m12d * m21d
    cdef double a1, a2
    cdef double ss_s1, ss_s2, sd_s1, sd_r2, ds_s2, ds_r1, dd_r1, dd_r2
    cdef double viol[4]
    cdef double best
    cdef int c, choice
    cdef Py_ssize_t p

    with nogil:
        for p in range(N):
            a1 = A[p, 0]
            a2 = A[p, 1]
            ss_s1 = (a1 - d1 + m12d * d2 + m12s * (a2 - d2 + m21d * d1)) / den_ss
            ss_s2 = (a2 - d2 + m21d * d1 + m21s * (a1 - d1 + m12d * d2)) / den_ss
            if ss_s1 >= 0.0 and ss_s2 >= 0.0:
                X[p, 0] = ss_s1; X[p, 1] = ss_s2; X[p, 2] = d1; X[p, 3] = d2
                region[p] = C_SS
                continue
            sd_s1 = (a1 - d1 + m12d * a2 + m12d * m21d * d1) / den_sd
            sd_r2 = (a2 + m21d * d1 + m21s * (a1 - d1)) / den_sd
            if sd_s1 >= 0.0 and sd_r2 < d2:
                X[p, 0] = sd_s1; X[p, 1] = 0.0; X[p, 2] = d1; X[p, 3] = sd_r2
                region[p] = C_SD
                continue
            ds_s2 = (a2 - d2 + m21d * a1 + m21d * m12d * d2) / den_ds
            ds_r1 = (a1 + m12d * d2 + m12s * (a2 - d2)) / den_ds
            if ds_r1 < d1 and ds_s2 >= 0.0:
                X[p, 0] = 0.0; X[p, 1] = ds_s2; X[p, 2] = ds_r1; X[p, 3] = d2
                region[p] = C_DS
                continue
            dd_r1 = (a1 + m12d * a2) / den_dd
            dd_r2 = (a2 + m21d * a1) / den_dd
            if dd_r1 < d1 and dd_r2 < d2:
                X[p, 0] = 0.0; X[p, 1] = 0.0; X[p, 2] = dd_r1; X[p, 3] = dd_r2
                region[p] = C_DD
                continue
            # roundoff at a boundary: least-violating candidate, same scoring as the NumPy twin
            viol[0] = _pos(-ss_s1) + _pos(-ss_s2)
            viol[1] = _pos(-sd_s1) + _pos(sd_r2 - d2) + (1.0 if sd_r2 >= d2 else 0.0)
            viol[2] = _pos(ds_r1 - d1) + (1.0 if ds_r1 >= d1 else 0.0) + _pos(-ds_s2)
            viol[3] = (_pos(dd_r1 - d1) + (1.0 if dd_r1 >= d1 else 0.0)
                       + _pos(dd_r2 - d2) + (1.0 if dd_r2 >= d2 else 0.0))
            choice = 0
            best = viol[0]
            for c in range(1, 4):
                if viol[c] < best:
                    best = viol[c]
                    choice = c
            if choice == 0:
                X[p, 0] = ss_s1; X[p, 1] = ss_s2; X[p, 2] = d1; X[p, 3] = d2
                region[p] = C_SS
            elif choice == 1:
                X[p, 0] = sd_s1; X[p, 1] = 0.0; X[p, 2] = d1; X[p, 3] = sd_r2
                region[p] = C_SD
            elif choice == 2:
                X[p, 0] = 0.0; X[p, 1] = ds_s2; X[p, 2] = ds_r1; X[p, 3] = d2
                region[p] = C_DS
            else:
                X[p, 0] = 0.0; X[p, 1] = 0.0; X[p, 2] = dd_r1; X[p, 3] = dd_r2
                region[p] = C_DD
    return X_arr, region_arr


cdef inline double _pos(double x) nogil:
    return x if x > 0.0 else 0.0
