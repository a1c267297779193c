# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled k-sweep kernel: exponential-midpoint propagation of the occupied
column of 2-band plane-wave fibers along k(t) = k - eps*e_beta*t, returning
the current integrand -Tr(dH_alpha(k(t)) phi phi^dagger) at the sample times.

Functional twin of `_sweep_py.sweep_chunk`; the inner loop runs without the
GIL so chunks can be processed by a thread pool.
"""

import numpy as np

cimport cython
from libc.math cimport ceil, cos, sin, sqrt

BACKEND_NAME = "cython"

ctypedef double complex dcomplex

cdef extern from "complex.h" nogil:
    dcomplex cexp(dcomplex)
    double cabs(dcomplex)
    dcomplex conj(dcomplex)
    double creal(dcomplex)
    double cimag(dcomplex)


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _sweep_one(
        double kx, double ky, int occ,
        double[:, ::1] d00, dcomplex[::1] a00,
        double[:, ::1] d11, dcomplex[::1] a11,
        double[:, ::1] d10, dcomplex[::1] a10,
        dcomplex[::1] da00, dcomplex[::1] da11, dcomplex[::1] da10,
        double[::1] w00, double[::1] w11, double[::1] w10,
        double eps, double ebx, double eby,
        double[::1] times, double dt_base,
        double[::1] out_row,
        dcomplex[::1] z00, dcomplex[::1] z11, dcomplex[::1] z10,
        dcomplex[::1] r00, dcomplex[::1] r11, dcomplex[::1] r10) noexcept nogil:
    cdef Py_ssize_t n00 = a00.shape[0], n11 = a11.shape[0], n10 = a10.shape[0]
    cdef Py_ssize_t nt = times.shape[0]
    cdef Py_ssize_t m, s, sub, n_sub
    cdef double t, t0, t1, span, h, tm
    cdef double h00, h11, d0, dz, nrm, th, co, sf
    cdef dcomplex c, ph, u00, u01, u10, u11, p0, p1, np0, np1
    cdef double acc

    if occ == 0:
        for s in range(nt):
            out_row[s] = 0.0
        return

    if occ == 2:
        # integrand = -Tr dH_alpha(k - eps e_beta t): diagonal entries only
        # (phase along the drift: theta = k.d - w t with w = eps d.e_beta)
        for s in range(nt):
            t = times[s]
            acc = 0.0
            for m in range(n00):
                acc += creal(da00[m] * cexp(1j * (kx * d00[m, 0] + ky * d00[m, 1] - w00[m] * t)))
            for m in range(n11):
                acc += creal(da11[m] * cexp(1j * (kx * d11[m, 0] + ky * d11[m, 1] - w11[m] * t)))
            out_row[s] = -acc
        return

    # occ == 1: initial lower eigenvector of H(k)
    h00 = 0.0
    for m in range(n00):
        h00 += creal(a00[m] * cexp(1j * (kx * d00[m, 0] + ky * d00[m, 1])))
    h11 = 0.0
    for m in range(n11):
        h11 += creal(a11[m] * cexp(1j * (kx * d11[m, 0] + ky * d11[m, 1])))
    c = 0
    for m in range(n10):
        c = c + a10[m] * cexp(1j * (kx * d10[m, 0] + ky * d10[m, 1]))
    dz = 0.5 * (h00 - h11)
    nrm = sqrt(dz * dz + creal(c) * creal(c) + cimag(c) * cimag(c))
    if dz >= 0.0:
        p0 = -conj(c)
        p1 = dz + nrm
    else:
        p0 = nrm - dz
        p1 = -c
    d0 = sqrt(creal(p0) * creal(p0) + cimag(p0) * cimag(p0)
              + creal(p1) * creal(p1) + cimag(p1) * cimag(p1))
    p0 = p0 / d0
    p1 = p1 / d0

    # integrand at t = 0
    _record(kx, ky, times[0], eps, p0, p1,
            d00, da00, w00, d11, da11, w11, d10, da10, w10, &out_row[0])

    for s in range(nt - 1):
        t0 = times[s]
        t1 = times[s + 1]
        span = t1 - t0
        n_sub = <Py_ssize_t> ceil(span / dt_base - 1e-12)
        if n_sub < 1:
            n_sub = 1
        h = span / n_sub
        tm = t0 + 0.5 * h
        # term values at the first midpoint + per-substep rotators
        for m in range(n00):
            z00[m] = a00[m] * cexp(1j * (kx * d00[m, 0] + ky * d00[m, 1] - tm * w00[m]))
            r00[m] = cexp(-1j * h * w00[m])
        for m in range(n11):
            z11[m] = a11[m] * cexp(1j * (kx * d11[m, 0] + ky * d11[m, 1] - tm * w11[m]))
            r11[m] = cexp(-1j * h * w11[m])
        for m in range(n10):
            z10[m] = a10[m] * cexp(1j * (kx * d10[m, 0] + ky * d10[m, 1] - tm * w10[m]))
            r10[m] = cexp(-1j * h * w10[m])
        for sub in range(n_sub):
            h00 = 0.0
            for m in range(n00):
                h00 += creal(z00[m])
            h11 = 0.0
            for m in range(n11):
                h11 += creal(z11[m])
            c = 0
            for m in range(n10):
                c = c + z10[m]
            d0 = 0.5 * (h00 + h11)
            dz = 0.5 * (h00 - h11)
            nrm = sqrt(dz * dz + creal(c) * creal(c) + cimag(c) * cimag(c))
            th = h * nrm
            co = cos(th)
            if nrm > 1e-300:
                sf = sin(th) / nrm
            else:
                sf = h
            ph = cexp(-1j * h * d0)
            u00 = ph * (co - 1j * sf * dz)
            u01 = ph * (-1j * sf * conj(c))
            u10 = ph * (-1j * sf * c)
            u11 = ph * (co + 1j * sf * dz)
            np0 = u00 * p0 + u01 * p1
            np1 = u10 * p0 + u11 * p1
            p0 = np0
            p1 = np1
            for m in range(n00):
                z00[m] = z00[m] * r00[m]
            for m in range(n11):
                z11[m] = z11[m] * r11[m]
            for m in range(n10):
                z10[m] = z10[m] * r10[m]
        _record(kx, ky, t1, eps, p0, p1,
                d00, da00, w00, d11, da11, w11, d10, da10, w10, &out_row[s + 1])


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _record(double kx, double ky, double t, double eps,
                  dcomplex p0, dcomplex p1,
                  double[:, ::1] d00, dcomplex[::1] da00, double[::1] w00,
                  double[:, ::1] d11, dcomplex[::1] da11, double[::1] w11,
                  double[:, ::1] d10, dcomplex[::1] da10, double[::1] w10,
                  double* out) noexcept nogil:
    # exact phases at the sample time (w = eps * d.e_beta, so theta = k.d - w t)
    cdef Py_ssize_t m
    cdef double v00 = 0.0, v11 = 0.0
    cdef dcomplex v10 = 0
    for m in range(da00.shape[0]):
        v00 += creal(da00[m] * cexp(1j * (kx * d00[m, 0] + ky * d00[m, 1] - w00[m] * t)))
    for m in range(da11.shape[0]):
        v11 += creal(da11[m] * cexp(1j * (kx * d11[m, 0] + ky * d11[m, 1] - w11[m] * t)))
    for m in range(da10.shape[0]):
        v10 = v10 + da10[m] * cexp(1j * (kx * d10[m, 0] + ky * d10[m, 1] - w10[m] * t))
    cdef double q0 = creal(p0) * creal(p0) + cimag(p0) * cimag(p0)
    cdef double q1 = creal(p1) * creal(p1) + cimag(p1) * cimag(p1)
    out[0] = -(v00 * q0 + v11 * q1 + 2.0 * creal(v10 * p0 * conj(p1)))


def sweep_chunk(terms, kpts, occ, eps, e_beta, e_alpha, times, dt_base):
    """Current integrand for one chunk of k-points; see `_sweep_py.sweep_chunk`."""
    d00_, a00_, d11_, a11_, d10_, a10_ = terms
    cdef double[:, ::1] d00 = np.array(d00_, dtype=np.float64)
    cdef double[:, ::1] d11 = np.array(d11_, dtype=np.float64)
    cdef double[:, ::1] d10 = np.array(d10_, dtype=np.float64)
    cdef dcomplex[::1] a00 = np.array(a00_, dtype=np.complex128)
    cdef dcomplex[::1] a11 = np.array(a11_, dtype=np.complex128)
    cdef dcomplex[::1] a10 = np.array(a10_, dtype=np.complex128)
    cdef double[:, ::1] kk = np.array(kpts, dtype=np.float64)
    occ_arr = np.array(occ, dtype=np.int8)
    cdef signed char[::1] oc = occ_arr
    cdef double[::1] tt = np.array(times, dtype=np.float64)
    cdef double epsd = float(eps)
    cdef double ebx = float(e_beta[0]), eby = float(e_beta[1])
    cdef double eax = float(e_alpha[0]), eay = float(e_alpha[1])
    cdef double dtb = float(dt_base)
    cdef Py_ssize_t nk = kk.shape[0], nt = tt.shape[0]

    out_arr = np.zeros((nk, nt), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    # precomputed per-term quantities shared by all k
    da00_arr = 1j * (np.asarray(d00) @ np.array([eax, eay])) * np.asarray(a00)
    da11_arr = 1j * (np.asarray(d11) @ np.array([eax, eay])) * np.asarray(a11)
    da10_arr = 1j * (np.asarray(d10) @ np.array([eax, eay])) * np.asarray(a10)
    w00_arr = epsd * (np.asarray(d00) @ np.array([ebx, eby]))
    w11_arr = epsd * (np.asarray(d11) @ np.array([ebx, eby]))
    w10_arr = epsd * (np.asarray(d10) @ np.array([ebx, eby]))
    cdef dcomplex[::1] da00 = np.array(da00_arr, dtype=np.complex128)
    cdef dcomplex[::1] da11 = np.array(da11_arr, dtype=np.complex128)
    cdef dcomplex[::1] da10 = np.array(da10_arr, dtype=np.complex128)
    cdef double[::1] w00 = np.array(w00_arr, dtype=np.float64)
    cdef double[::1] w11 = np.array(w11_arr, dtype=np.float64)
    cdef double[::1] w10 = np.array(w10_arr, dtype=np.float64)

    # scratch buffers reused across k
    cdef dcomplex[::1] z00 = np.empty(a00.shape[0], dtype=np.complex128)
    cdef dcomplex[::1] z11 = np.empty(a11.shape[0], dtype=np.complex128)
    cdef dcomplex[::1] z10 = np.empty(a10.shape[0], dtype=np.complex128)
    cdef dcomplex[::1] r00 = np.empty(a00.shape[0], dtype=np.complex128)
    cdef dcomplex[::1] r11 = np.empty(a11.shape[0], dtype=np.complex128)
    cdef dcomplex[::1] r10 = np.empty(a10.shape[0], dtype=np.complex128)

    cdef Py_ssize_t i
    with nogil:
        for i in range(nk):
            _sweep_one(kk[i, 0], kk[i, 1], oc[i],
                       d00, a00, d11, a11, d10, a10,
                       da00, da11, da10, w00, w11, w10,
                       epsd, ebx, eby, tt, dtb,
                       out[i], z00, z11, z10, r00, r11, r10)
    return out_arr
