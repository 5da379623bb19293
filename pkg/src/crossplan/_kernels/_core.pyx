# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot evaluation kernels.

Mirrors ``_pure.py`` function for function; keep the two in sync.
"""
from libc.math cimport atan2, ceil, cos, exp, fabs, hypot, sin, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _EXP_CLIP = 60.0


def snake_velocity(int n, double ds, double v0, double a0, vp,
                   double lag, double offset, double s_l):
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double xs[5]
    cdef double fs[5]
    cdef int m = 1, k, i, seg = 0
    cdef double t, s, val
    xs[0] = 0.0
    fs[0] = v0
    for k in range(4):
        t = (k + 1) * s_l - offset
        if t > 0.0:
            xs[m] = t
            fs[m] = vp[k]
            m += 1
    for i in range(n):
        s = i * ds
        while seg < m - 1 and s > xs[seg + 1]:
            seg += 1
        if seg >= m - 1:
            val = fs[m - 1]
        else:
            val = fs[seg] + (fs[seg + 1] - fs[seg]) * (s - xs[seg]) / (xs[seg + 1] - xs[seg])
        if lag > 0.0 and s <= lag:
            val += (lag - s) * a0
        ov[i] = val
    return out


def gaussian_smooth(v, double ds, double sigma):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef int n = vv.shape[0]
    cdef int h = <int>ceil(4.0 * sigma / ds) if sigma > 0.0 else 0
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef int i, k, idx
    cdef double acc, wsum
    if h == 0:
        for i in range(n):
            ov[i] = vv[i]
        return out
    cdef double* w = <double*>malloc((2 * h + 1) * sizeof(double))
    if w == NULL:
        raise MemoryError()
    try:
        wsum = 0.0
        for k in range(-h, h + 1):
            w[k + h] = exp(-0.5 * (k * ds / sigma) * (k * ds / sigma))
            wsum += w[k + h]
        for k in range(2 * h + 1):
            w[k] /= wsum
        for i in range(n):
            acc = 0.0
            for k in range(-h, h + 1):
                idx = i + k
                if idx < 0:
                    idx = 0
                elif idx > n - 1:
                    idx = n - 1
                acc += w[k + h] * vv[idx]
            ov[i] = acc
    finally:
        free(w)
    return out


cdef void _derivative(double[::1] v, double ds, double[::1] out) nogil:
    cdef int n = v.shape[0]
    cdef int i
    out[0] = (v[1] - v[0]) / ds
    for i in range(1, n - 1):
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * ds)
    out[n - 1] = (v[n - 1] - v[n - 2]) / ds


def derivative(v, double ds):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(vv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    _derivative(vv, ds, ov)
    return out


cdef void _cumtrapz(double[::1] y, double ds, double[::1] out) nogil:
    cdef int n = y.shape[0]
    cdef int i
    cdef double acc = 0.0
    out[0] = 0.0
    for i in range(1, n):
        acc += 0.5 * ds * (y[i - 1] + y[i])
        out[i] = acc


def cumtrapz(y, double ds):
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(yy.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    _cumtrapz(yy, ds, ov)
    return out


cdef inline double _interp1(double pos, double step, double[::1] tab, int m) nogil:
    cdef double idx = pos / step
    cdef int i0
    cdef double f
    if idx < 0.0:
        idx = 0.0
    elif idx > m - 1.0:
        idx = m - 1.0
    i0 = <int>idx
    if i0 > m - 2:
        i0 = m - 2
    f = idx - i0
    return tab[i0] + (tab[i0 + 1] - tab[i0]) * f


def path_state(l, double step, xs, ys, headings, kappas):
    cdef double[::1] ll = np.ascontiguousarray(l, dtype=np.float64)
    cdef double[::1] xt = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] yt = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] ht = np.ascontiguousarray(headings, dtype=np.float64)
    cdef double[::1] kt = np.ascontiguousarray(kappas, dtype=np.float64)
    cdef int n = ll.shape[0], m = xt.shape[0], i
    cdef cnp.ndarray[double, ndim=1] x = np.empty(n), y = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] hh = np.empty(n), kk = np.empty(n)
    cdef double[::1] xv = x, yv = y, hv = hh, kv = kk
    for i in range(n):
        xv[i] = _interp1(ll[i], step, xt, m)
        yv[i] = _interp1(ll[i], step, yt, m)
        hv[i] = _interp1(ll[i], step, ht, m)
        kv[i] = _interp1(ll[i], step, kt, m)
    return x, y, hh, kk


def evaluate_profile(v, double ds, double l0,
                     double path_step, px, py, ph, pk,
                     double mass_ego,
                     ox, oy, ovx, ovy, ol, alpha, omass,
                     ext_sum, has_zone, exit_ego, exit_other,
                     double tau0, double tau_max_inv, double sig0, double sig_growth,
                     double ay_max, double sig_ay, double d0,
                     double bt, double bd, double bc, double bj,
                     double v_des, double dev_sign):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] phv = np.ascontiguousarray(ph, dtype=np.float64)
    cdef double[::1] pkv = np.ascontiguousarray(pk, dtype=np.float64)
    cdef double[:, ::1] oxv = np.ascontiguousarray(ox, dtype=np.float64)
    cdef double[:, ::1] oyv = np.ascontiguousarray(oy, dtype=np.float64)
    cdef double[:, ::1] ovxv = np.ascontiguousarray(ovx, dtype=np.float64)
    cdef double[:, ::1] ovyv = np.ascontiguousarray(ovy, dtype=np.float64)
    cdef double[:, ::1] olv = np.ascontiguousarray(ol, dtype=np.float64)
    cdef double[:, ::1] alv = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef double[::1] omv = np.ascontiguousarray(omass, dtype=np.float64)
    cdef double[::1] exv = np.ascontiguousarray(ext_sum, dtype=np.float64)
    cdef unsigned char[::1] hzv = np.ascontiguousarray(has_zone, dtype=np.uint8)
    cdef double[::1] ee = np.ascontiguousarray(exit_ego, dtype=np.float64)
    cdef double[::1] eo = np.ascontiguousarray(exit_other, dtype=np.float64)

    cdef int n = vv.shape[0], m = pxv.shape[0], nj = omv.shape[0]
    cdef int i, j
    cdef double* buf = <double*>malloc(11 * n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* a = buf
    cdef double* r = buf + n
    cdef double* l = buf + 2 * n
    cdef double* x = buf + 3 * n
    cdef double* y = buf + 4 * n
    cdef double* vx = buf + 5 * n
    cdef double* vy = buf + 6 * n
    cdef double* rate_tot = buf + 7 * n
    cdef double* risk_num = buf + 8 * n
    cdef double* kk = buf + 9 * n
    cdef double* sarr = buf + 10 * n

    cdef double lmax = path_step * (m - 1)
    cdef double s, hh, ay, z, rate_curv, sig_tot, gap, rate_j, mu, dmg, dvx, dvy
    cdef double acc, lam, wgt
    cdef double risk = 0.0, util = 0.0, comf = 0.0

    try:
        a[0] = (vv[1] - vv[0]) / ds
        for i in range(1, n - 1):
            a[i] = (vv[i + 1] - vv[i - 1]) / (2.0 * ds)
        a[n - 1] = (vv[n - 1] - vv[n - 2]) / ds
        r[0] = (a[1] - a[0]) / ds
        for i in range(1, n - 1):
            r[i] = (a[i + 1] - a[i - 1]) / (2.0 * ds)
        r[n - 1] = (a[n - 1] - a[n - 2]) / ds

        acc = l0
        l[0] = l0 if l0 > 0.0 else 0.0
        if l[0] > lmax:
            l[0] = lmax
        for i in range(1, n):
            acc += 0.5 * ds * (vv[i - 1] + vv[i])
            l[i] = acc
            if l[i] < 0.0:
                l[i] = 0.0
            elif l[i] > lmax:
                l[i] = lmax

        for i in range(n):
            x[i] = _interp1(l[i], path_step, pxv, m)
            y[i] = _interp1(l[i], path_step, pyv, m)
            hh = _interp1(l[i], path_step, phv, m)
            kk[i] = _interp1(l[i], path_step, pkv, m)
            vx[i] = vv[i] * cos(hh)
            vy[i] = vv[i] * sin(hh)
            ay = vv[i] * vv[i] * fabs(kk[i])
            z = (ay - ay_max) / sig_ay
            if z > _EXP_CLIP:
                z = _EXP_CLIP
            elif z < -_EXP_CLIP:
                z = -_EXP_CLIP
            rate_curv = tau_max_inv / (1.0 + exp(-z))
            rate_tot[i] = tau0 + rate_curv
            risk_num[i] = rate_curv * (d0 + 0.5 * mass_ego * vv[i] * vv[i])

        for j in range(nj):
            mu = mass_ego * omv[j] / (2.0 * (mass_ego + omv[j]))
            for i in range(n):
                s = i * ds
                sig_tot = sig0 + sig_growth * s
                gap = hypot(oxv[j, i] - x[i], oyv[j, i] - y[i]) - exv[j]
                if gap < 0.0:
                    gap = 0.0
                rate_j = tau_max_inv * exp(-0.5 * (gap / sig_tot) * (gap / sig_tot)) * alv[j, i]
                if hzv[j] == 0:
                    dmg = 0.0
                elif l[i] > ee[j] and olv[j, i] > eo[j]:
                    dmg = 0.0
                else:
                    dvx = ovxv[j, i] - vx[i]
                    dvy = ovyv[j, i] - vy[i]
                    dmg = d0 + mu * (dvx * dvx + dvy * dvy)
                rate_tot[i] += rate_j
                risk_num[i] += rate_j * dmg

        lam = 0.0
        sarr[0] = 1.0
        for i in range(1, n):
            lam += 0.5 * ds * (rate_tot[i - 1] + rate_tot[i])
            sarr[i] = exp(-lam)

        for i in range(n):
            wgt = ds if 0 < i < n - 1 else 0.5 * ds
            risk += wgt * risk_num[i] * sarr[i]
            util += wgt * (bt * fabs(vv[i]) + dev_sign * bd * fabs(vv[i] - v_des)) * sarr[i]
            comf -= wgt * (bc * fabs(a[i]) + bj * fabs(r[i])) * sarr[i]
    finally:
        free(buf)
    return risk, util, comf
