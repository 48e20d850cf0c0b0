# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled flow right-hand-side kernels.

Every expression mirrors the numpy reference in `_fallback.py` with the same
operation tree (and the extension is built with -ffp-contract=off), so the
two backends produce bit-identical results.  Keep both sides in sync.
"""

from libc.math cimport floor

import numpy as np


cdef inline double _wrap(double d, double period) nogil:
    return d - period * floor(d / period + 0.5)


def rhs_torus2_flat(double[:, ::1] u, double[:, ::1] bg,
                    long[::1] p1, long[::1] m1, long[::1] p2, long[::1] m2,
                    long[::1] pp, long[::1] pm, long[::1] mp, long[::1] mm,
                    double[::1] L, double th1, double th2, double h11,
                    double h22, double q12, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, a
    cdef double dp1[2]
    cdef double dm1[2]
    cdef double dp2[2]
    cdef double dm2[2]
    cdef double d1[2]
    cdef double d2[2]
    cdef double d11[2]
    cdef double d22[2]
    cdef double d12[2]
    cdef double j1[2]
    cdef double j2[2]
    cdef double g11, g12, g22, det, i11, i12, i22
    cdef double wpp, wpm, wmp, wmm
    cdef double min_det = np.inf
    cdef Py_ssize_t arg = 0
    cdef bint found_nan = False
    with nogil:
        for i in range(n):
            for a in range(2):
                dp1[a] = _wrap(u[p1[i], a] - u[i, a], L[a])
                dm1[a] = _wrap(u[m1[i], a] - u[i, a], L[a])
                dp2[a] = _wrap(u[p2[i], a] - u[i, a], L[a])
                dm2[a] = _wrap(u[m2[i], a] - u[i, a], L[a])
                wpp = _wrap(u[pp[i], a] - u[i, a], L[a])
                wpm = _wrap(u[pm[i], a] - u[i, a], L[a])
                wmp = _wrap(u[mp[i], a] - u[i, a], L[a])
                wmm = _wrap(u[mm[i], a] - u[i, a], L[a])
                d1[a] = (dp1[a] - dm1[a]) / th1
                d2[a] = (dp2[a] - dm2[a]) / th2
                d11[a] = (dp1[a] + dm1[a]) / h11
                d22[a] = (dp2[a] + dm2[a]) / h22
                d12[a] = (((wpp - wpm) - wmp) + wmm) / q12
                j1[a] = bg[0, a] + d1[a]
                j2[a] = bg[1, a] + d2[a]
            g11 = 1.0 + (j1[0] * j1[0] + j1[1] * j1[1])
            g12 = j1[0] * j2[0] + j1[1] * j2[1]
            g22 = 1.0 + (j2[0] * j2[0] + j2[1] * j2[1])
            det = g11 * g22 - g12 * g12
            i11 = g22 / det
            i12 = -(g12 / det)
            i22 = g11 / det
            for a in range(2):
                out[i, a] = (i11 * d11[a] + 2.0 * (i12 * d12[a])) + i22 * d22[a]
            if det != det:
                if not found_nan:
                    min_det = det
                    arg = i
                    found_nan = True
            elif not found_nan and det < min_det:
                min_det = det
                arg = i
    return float(min_det), int(arg)


def rhs_torus3_flat(double[:, ::1] u, double[:, ::1] bg,
                    long[::1] p1, long[::1] m1, long[::1] p2, long[::1] m2,
                    long[::1] p3, long[::1] m3,
                    long[::1] a12pp, long[::1] a12pm, long[::1] a12mp, long[::1] a12mm,
                    long[::1] a13pp, long[::1] a13pm, long[::1] a13mp, long[::1] a13mm,
                    long[::1] a23pp, long[::1] a23pm, long[::1] a23mp, long[::1] a23mm,
                    double[::1] L, double th1, double th2, double th3,
                    double h11, double h22, double h33,
                    double q12, double q13, double q23, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, a
    cdef double dp[3][2]
    cdef double dm[3][2]
    cdef double d1[3][2]
    cdef double dii[3][2]
    cdef double dm12[2]
    cdef double dm13[2]
    cdef double dm23[2]
    cdef double j[3][2]
    cdef double g00, g01, g02, g11g, g12g, g22g
    cdef double c00, c01, c02, det, i00, i01, i02, i11, i12, i22
    cdef double wpp, wpm, wmp, wmm
    cdef double min_det = np.inf
    cdef Py_ssize_t arg = 0
    cdef bint found_nan = False
    with nogil:
        for i in range(n):
            for a in range(2):
                dp[0][a] = _wrap(u[p1[i], a] - u[i, a], L[a])
                dm[0][a] = _wrap(u[m1[i], a] - u[i, a], L[a])
                dp[1][a] = _wrap(u[p2[i], a] - u[i, a], L[a])
                dm[1][a] = _wrap(u[m2[i], a] - u[i, a], L[a])
                dp[2][a] = _wrap(u[p3[i], a] - u[i, a], L[a])
                dm[2][a] = _wrap(u[m3[i], a] - u[i, a], L[a])
                d1[0][a] = (dp[0][a] - dm[0][a]) / th1
                d1[1][a] = (dp[1][a] - dm[1][a]) / th2
                d1[2][a] = (dp[2][a] - dm[2][a]) / th3
                dii[0][a] = (dp[0][a] + dm[0][a]) / h11
                dii[1][a] = (dp[1][a] + dm[1][a]) / h22
                dii[2][a] = (dp[2][a] + dm[2][a]) / h33
                wpp = _wrap(u[a12pp[i], a] - u[i, a], L[a])
                wpm = _wrap(u[a12pm[i], a] - u[i, a], L[a])
                wmp = _wrap(u[a12mp[i], a] - u[i, a], L[a])
                wmm = _wrap(u[a12mm[i], a] - u[i, a], L[a])
                dm12[a] = (((wpp - wpm) - wmp) + wmm) / q12
                wpp = _wrap(u[a13pp[i], a] - u[i, a], L[a])
                wpm = _wrap(u[a13pm[i], a] - u[i, a], L[a])
                wmp = _wrap(u[a13mp[i], a] - u[i, a], L[a])
                wmm = _wrap(u[a13mm[i], a] - u[i, a], L[a])
                dm13[a] = (((wpp - wpm) - wmp) + wmm) / q13
                wpp = _wrap(u[a23pp[i], a] - u[i, a], L[a])
                wpm = _wrap(u[a23pm[i], a] - u[i, a], L[a])
                wmp = _wrap(u[a23mp[i], a] - u[i, a], L[a])
                wmm = _wrap(u[a23mm[i], a] - u[i, a], L[a])
                dm23[a] = (((wpp - wpm) - wmp) + wmm) / q23
                j[0][a] = bg[0, a] + d1[0][a]
                j[1][a] = bg[1, a] + d1[1][a]
                j[2][a] = bg[2, a] + d1[2][a]
            g00 = 1.0 + (j[0][0] * j[0][0] + j[0][1] * j[0][1])
            g01 = j[0][0] * j[1][0] + j[0][1] * j[1][1]
            g02 = j[0][0] * j[2][0] + j[0][1] * j[2][1]
            g11g = 1.0 + (j[1][0] * j[1][0] + j[1][1] * j[1][1])
            g12g = j[1][0] * j[2][0] + j[1][1] * j[2][1]
            g22g = 1.0 + (j[2][0] * j[2][0] + j[2][1] * j[2][1])
            c00 = g11g * g22g - g12g * g12g
            c01 = g01 * g22g - g02 * g12g
            c02 = g01 * g12g - g02 * g11g
            det = g00 * c00 - g01 * c01 + g02 * c02
            i00 = c00 / det
            i01 = -(c01 / det)
            i02 = c02 / det
            i11 = (g00 * g22g - g02 * g02) / det
            i12 = -((g00 * g12g - g01 * g02) / det)
            i22 = (g00 * g11g - g01 * g01) / det
            for a in range(2):
                out[i, a] = ((((i00 * dii[0][a] + 2.0 * (i01 * dm12[a]))
                               + 2.0 * (i02 * dm13[a])) + i11 * dii[1][a])
                             + 2.0 * (i12 * dm23[a])) + i22 * dii[2][a]
            if det != det:
                if not found_nan:
                    min_det = det
                    arg = i
                    found_nan = True
            elif not found_nan and det < min_det:
                min_det = det
                arg = i
    return float(min_det), int(arg)


def rhs_sphere2_sphere(double[:, ::1] u,
                       long[::1] p1, long[::1] m1, long[::1] p2, long[::1] m2,
                       long[::1] pp, long[::1] pm, long[::1] mp, long[::1] mm,
                       double th1, double h11,
                       double[::1] th2n, double[::1] h22n, double[::1] q12n,
                       double r1sq, double[::1] g122, double[::1] sc,
                       double[::1] cot, double k2, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, a
    cdef double dp1[3]
    cdef double dm1[3]
    cdef double dp2[3]
    cdef double dm2[3]
    cdef double d1[3]
    cdef double d2[3]
    cdef double d11[3]
    cdef double d22[3]
    cdef double d12[3]
    cdef double h12c[3]
    cdef double h22c[3]
    cdef double lap[3]
    cdef double p11, p12, p22, g11, g12, g22, det, detrel, i11, i12, i22
    cdef double q, kq
    cdef double wpp, wpm, wmp, wmm
    cdef double min_det = np.inf
    cdef Py_ssize_t arg = 0
    cdef bint found_nan = False
    with nogil:
        for i in range(n):
            for a in range(3):
                dp1[a] = u[p1[i], a] - u[i, a]
                dm1[a] = u[m1[i], a] - u[i, a]
                dp2[a] = u[p2[i], a] - u[i, a]
                dm2[a] = u[m2[i], a] - u[i, a]
                wpp = u[pp[i], a] - u[i, a]
                wpm = u[pm[i], a] - u[i, a]
                wmp = u[mp[i], a] - u[i, a]
                wmm = u[mm[i], a] - u[i, a]
                d1[a] = (dp1[a] - dm1[a]) / th1
                d2[a] = (dp2[a] - dm2[a]) / th2n[i]
                d11[a] = (dp1[a] + dm1[a]) / h11
                d22[a] = (dp2[a] + dm2[a]) / h22n[i]
                d12[a] = (((wpp - wpm) - wmp) + wmm) / q12n[i]
            p11 = (d1[0] * d1[0] + d1[1] * d1[1])
            p11 = p11 + d1[2] * d1[2]
            p12 = (d1[0] * d2[0] + d1[1] * d2[1])
            p12 = p12 + d1[2] * d2[2]
            p22 = (d2[0] * d2[0] + d2[1] * d2[1])
            p22 = p22 + d2[2] * d2[2]
            g11 = r1sq + p11
            g12 = p12
            g22 = g122[i] + p22
            det = g11 * g22 - g12 * g12
            detrel = det / (r1sq * g122[i])
            i11 = g22 / det
            i12 = -(g12 / det)
            i22 = g11 / det
            for a in range(3):
                h12c[a] = d12[a] - cot[i] * d2[a]
                h22c[a] = d22[a] + sc[i] * d1[a]
                lap[a] = (i11 * d11[a] + 2.0 * (i12 * h12c[a])) + i22 * h22c[a]
            q = (i11 * p11 + 2.0 * (i12 * p12)) + i22 * p22
            kq = k2 * q
            for a in range(3):
                out[i, a] = lap[a] + kq * u[i, a]
            if detrel != detrel:
                if not found_nan:
                    min_det = detrel
                    arg = i
                    found_nan = True
            elif not found_nan and detrel < min_det:
                min_det = detrel
                arg = i
    return float(min_det), int(arg)


def rhs_sphere2_flat(double[:, ::1] u,
                     long[::1] p1, long[::1] m1, long[::1] p2, long[::1] m2,
                     long[::1] pp, long[::1] pm, long[::1] mp, long[::1] mm,
                     double[::1] L, double th1, double h11,
                     double[::1] th2n, double[::1] h22n, double[::1] q12n,
                     double r1sq, double[::1] g122, double[::1] sc,
                     double[::1] cot, double[:, ::1] out):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, a
    cdef double dp1[2]
    cdef double dm1[2]
    cdef double dp2[2]
    cdef double dm2[2]
    cdef double d1[2]
    cdef double d2[2]
    cdef double d11[2]
    cdef double d22[2]
    cdef double d12[2]
    cdef double h12c[2]
    cdef double h22c[2]
    cdef double p11, p12, p22, g11, g12, g22, det, detrel, i11, i12, i22
    cdef double wpp, wpm, wmp, wmm
    cdef double min_det = np.inf
    cdef Py_ssize_t arg = 0
    cdef bint found_nan = False
    with nogil:
        for i in range(n):
            for a in range(2):
                dp1[a] = _wrap(u[p1[i], a] - u[i, a], L[a])
                dm1[a] = _wrap(u[m1[i], a] - u[i, a], L[a])
                dp2[a] = _wrap(u[p2[i], a] - u[i, a], L[a])
                dm2[a] = _wrap(u[m2[i], a] - u[i, a], L[a])
                wpp = _wrap(u[pp[i], a] - u[i, a], L[a])
                wpm = _wrap(u[pm[i], a] - u[i, a], L[a])
                wmp = _wrap(u[mp[i], a] - u[i, a], L[a])
                wmm = _wrap(u[mm[i], a] - u[i, a], L[a])
                d1[a] = (dp1[a] - dm1[a]) / th1
                d2[a] = (dp2[a] - dm2[a]) / th2n[i]
                d11[a] = (dp1[a] + dm1[a]) / h11
                d22[a] = (dp2[a] + dm2[a]) / h22n[i]
                d12[a] = (((wpp - wpm) - wmp) + wmm) / q12n[i]
            p11 = d1[0] * d1[0] + d1[1] * d1[1]
            p12 = d1[0] * d2[0] + d1[1] * d2[1]
            p22 = d2[0] * d2[0] + d2[1] * d2[1]
            g11 = r1sq + p11
            g12 = p12
            g22 = g122[i] + p22
            det = g11 * g22 - g12 * g12
            detrel = det / (r1sq * g122[i])
            i11 = g22 / det
            i12 = -(g12 / det)
            i22 = g11 / det
            for a in range(2):
                h12c[a] = d12[a] - cot[i] * d2[a]
                h22c[a] = d22[a] + sc[i] * d1[a]
                out[i, a] = (i11 * d11[a] + 2.0 * (i12 * h12c[a])) + i22 * h22c[a]
            if detrel != detrel:
                if not found_nan:
                    min_det = detrel
                    arg = i
                    found_nan = True
            elif not found_nan and detrel < min_det:
                min_det = detrel
                arg = i
    return float(min_det), int(arg)
