# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path integrator: one sample at a time, no Python objects in the loop."""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset
from libc.math cimport INFINITY
from cython.parallel cimport parallel, prange

import numpy as np


cdef inline void lag3(double u, double* l) noexcept nogil:
    l[0] = 2.0 * (u - 0.5) * (u - 1.0)
    l[1] = -4.0 * u * (u - 1.0)
    l[2] = 2.0 * u * (u - 0.5)


cdef inline void interp(const double* base, Py_ssize_t n, const double* l,
                        double* out) noexcept nogil:
    # node k of the interval sits at base + k*n
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = l[0] * base[i] + l[1] * base[n + i] + l[2] * base[2 * n + i]


cdef inline void affine(const double* Fm, const double* fv, const double* z,
                        int D, double* out) noexcept nogil:
    cdef int i, k
    cdef double acc
    for i in range(D):
        acc = fv[i]
        for k in range(D):
            acc += Fm[i * D + k] * z[k]
        out[i] = acc


cdef inline void quad_add(const double* Wm, const double* wv, const double* z,
                          int D, int A, double c, double* q) noexcept nogil:
    cdef int a, i, k
    cdef double acc, row
    for a in range(A):
        acc = 0.0
        for i in range(D):
            row = wv[a * D + i]
            for k in range(D):
                row += Wm[(a * D + i) * D + k] * z[k]
            acc += z[i] * row
        q[a] += c * acc


cdef void partial_step(const double* Fn, const double* fn, const double* Wn,
                       const double* wn, int D, int A, double ua, double ub,
                       double h, double* z, double* acc, double* buf) noexcept nogil:
    cdef int DD = D * D, ADD = A * D * D, AD = A * D
    cdef double* Fa = buf
    cdef double* Fm = Fa + DD
    cdef double* Fb = Fm + DD
    cdef double* fa = Fb + DD
    cdef double* fm = fa + D
    cdef double* fb = fm + D
    cdef double* Wa = fb + D
    cdef double* Wm = Wa + ADD
    cdef double* Wb = Wm + ADD
    cdef double* wa = Wb + ADD
    cdef double* wm = wa + AD
    cdef double* wb = wm + AD
    cdef double* k1 = wb + AD
    cdef double* k2 = k1 + D
    cdef double* k3 = k2 + D
    cdef double* k4 = k3 + D
    cdef double* zs = k4 + D
    cdef double* q = zs + D
    cdef double* l = q + A
    cdef double hs = (ub - ua) * h
    cdef int i
    lag3(ua, l)
    interp(Fn, DD, l, Fa); interp(fn, D, l, fa); interp(Wn, ADD, l, Wa); interp(wn, AD, l, wa)
    lag3(0.5 * (ua + ub), l)
    interp(Fn, DD, l, Fm); interp(fn, D, l, fm); interp(Wn, ADD, l, Wm); interp(wn, AD, l, wm)
    lag3(ub, l)
    interp(Fn, DD, l, Fb); interp(fn, D, l, fb); interp(Wn, ADD, l, Wb); interp(wn, AD, l, wb)
    memset(q, 0, A * sizeof(double))

    affine(Fa, fa, z, D, k1)
    quad_add(Wa, wa, z, D, A, 1.0, q)
    for i in range(D):
        zs[i] = z[i] + 0.5 * hs * k1[i]
    affine(Fm, fm, zs, D, k2)
    quad_add(Wm, wm, zs, D, A, 2.0, q)
    for i in range(D):
        zs[i] = z[i] + 0.5 * hs * k2[i]
    affine(Fm, fm, zs, D, k3)
    quad_add(Wm, wm, zs, D, A, 2.0, q)
    for i in range(D):
        zs[i] = z[i] + hs * k3[i]
    affine(Fb, fb, zs, D, k4)
    quad_add(Wb, wb, zs, D, A, 1.0, q)
    for i in range(D):
        z[i] += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    for i in range(A):
        acc[i] += hs / 6.0 * q[i]


def run_paths(model, z0, int g0, jt, jm, double T, bint record=False):
    """Compiled twin of ``_kernel_py.run_paths``."""
    cdef int lv = model.F.shape[0], p = model.F.shape[1]
    cdef int Lt = model.Lt, L = model.L
    cdef double h = model.h
    cdef int D = model.F.shape[5]
    cdef int A = model.W.shape[4]
    cdef Py_ssize_t nS = z0.shape[0]
    cdef int M = jt.shape[1]

    cdef double[:, :, :, :, ::1] F = np.ascontiguousarray(model.F.reshape(lv * p, Lt, 3, D, D))
    cdef double[:, :, :, ::1] f = np.ascontiguousarray(model.f.reshape(lv * p, Lt, 3, D))
    cdef double[:, :, :, :, :, ::1] W = np.ascontiguousarray(model.W.reshape(lv * p, Lt, 3, A, D, D))
    cdef double[:, :, :, :, ::1] w = np.ascontiguousarray(model.w.reshape(lv * p, Lt, 3, A, D))
    cdef double[:, :, :, :, :, ::1] J = np.ascontiguousarray(model.J.reshape(lv * p, p, Lt, 3, D, D))
    cdef double[:, :, :, :, ::1] b = np.ascontiguousarray(model.b.reshape(lv * p, p, Lt, 3, D))
    cdef double[:, :, :, ::1] R = np.ascontiguousarray(model.R.reshape(lv * p, Lt, D, D))
    cdef double[:, :, ::1] r = np.ascontiguousarray(model.r.reshape(lv * p, Lt, D))
    cdef double[:, :, :, :, ::1] S = np.ascontiguousarray(model.S.reshape(lv * p, Lt, A, D, D))
    cdef double[:, :, :, ::1] s = np.ascontiguousarray(model.s.reshape(lv * p, Lt, A, D))
    cdef double[:, :, ::1] sig = np.ascontiguousarray(model.sig.reshape(lv * p, Lt, A))
    cdef double[:, ::1] z0v = np.ascontiguousarray(z0, dtype=np.float64)
    cdef double[:, ::1] jtv = np.ascontiguousarray(jt, dtype=np.float64)
    cdef long long[:, ::1] jmv = np.ascontiguousarray(jm, dtype=np.int64)

    zT_arr = np.zeros((nS, D))
    done_arr = np.zeros(nS, dtype=np.uint8)
    acc_arr = np.zeros((nS, A))
    pre_arr = np.full((nS, M, D), np.nan)
    post_arr = np.full((nS, M, D), np.nan)
    snaps_arr = np.empty((nS, L + 1 if record else 1, D))
    cdef double[:, ::1] zT = zT_arr
    cdef double[:, ::1] accv = acc_arr
    cdef double[:, :, ::1] pre = pre_arr
    cdef double[:, :, ::1] post = post_arr
    cdef double[:, :, ::1] snaps = snaps_arr
    cdef unsigned char[::1] done = done_arr

    # per thread: scratch for partial_step (+3 Lagrange weights), then the sample state
    cdef int scratch = 3 * (D * D + D + A * D * D + A * D) + 5 * D + A + 3
    cdef int bufsize = scratch + 3 * D + D * D + A + 3
    cdef double* buf
    cdef double* z
    cdef double* zn
    cdef double* Jm
    cdef double* bm
    cdef double* acc
    cdef double* l
    cdef Py_ssize_t si
    cdef int j, ti, lvl, mode, key, th, i, k, a
    cdef double t0, t1, nxt, u, ub, val, row
    cdef bint last, inside

    with nogil, parallel():
        buf = <double*> malloc(bufsize * sizeof(double))
        z = buf + scratch
        zn = z + D
        Jm = zn + D
        bm = Jm + D * D
        acc = bm + D
        l = acc + A
        for si in prange(nS, schedule="static"):
            if buf == NULL:
                continue
            for i in range(D):
                z[i] = z0v[si, i]
            for a in range(A):
                acc[a] = 0.0
            lvl = 0
            mode = g0
            nxt = jtv[si, 0] if M > 0 else INFINITY
            if record:
                for i in range(D):
                    snaps[si, 0, i] = z[i]
            for j in range(L):
                ti = j if Lt > 1 else 0
                t0 = j * h
                t1 = (j + 1) * h
                last = j == L - 1
                key = lvl * p + mode
                inside = (nxt <= T) if last else (nxt < t1)
                if inside:
                    u = 0.0
                    while inside:
                        ub = (nxt - t0) / h
                        if ub < u:
                            ub = u
                        if ub > 1.0:
                            ub = 1.0
                        partial_step(&F[key, ti, 0, 0, 0], &f[key, ti, 0, 0],
                                     &W[key, ti, 0, 0, 0, 0], &w[key, ti, 0, 0, 0],
                                     D, A, u, ub, h, z, acc, buf)
                        th = <int> jmv[si, lvl]
                        lag3(ub, l)
                        interp(&J[key, th, ti, 0, 0, 0], D * D, l, Jm)
                        interp(&b[key, th, ti, 0, 0], D, l, bm)
                        for i in range(D):
                            pre[si, lvl, i] = z[i]
                        affine(Jm, bm, z, D, zn)
                        memcpy(z, zn, D * sizeof(double))
                        for i in range(D):
                            post[si, lvl, i] = z[i]
                        lvl = lvl + 1
                        mode = th
                        key = lvl * p + mode
                        u = ub
                        nxt = jtv[si, lvl] if lvl < M else INFINITY
                        inside = (nxt <= T) if last else (nxt < t1)
                    partial_step(&F[key, ti, 0, 0, 0], &f[key, ti, 0, 0],
                                 &W[key, ti, 0, 0, 0, 0], &w[key, ti, 0, 0, 0],
                                 D, A, u, 1.0, h, z, acc, buf)
                else:
                    for a in range(A):
                        val = sig[key, ti, a]
                        for i in range(D):
                            row = s[key, ti, a, i]
                            for k in range(D):
                                row = row + S[key, ti, a, i, k] * z[k]
                            val = val + row * z[i]
                        acc[a] += val
                    for i in range(D):
                        val = r[key, ti, i]
                        for k in range(D):
                            val = val + R[key, ti, i, k] * z[k]
                        zn[i] = val
                    memcpy(z, zn, D * sizeof(double))
                if record:
                    for i in range(D):
                        snaps[si, j + 1, i] = z[i]
            for i in range(D):
                zT[si, i] = z[i]
            for a in range(A):
                accv[si, a] = acc[a]
            done[si] = 1
        free(buf)
    if not done_arr.all():
        # a thread could not allocate its scratch space
        raise MemoryError("kernel scratch allocation failed")
    return zT_arr, acc_arr, pre_arr, post_arr, (snaps_arr if record else None)
